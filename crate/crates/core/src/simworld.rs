//! A simulated population of sources.
//!
//! Honest sources answer `truth + error` with Gaussian error. Malicious
//! sources multiply their honest answer by a manipulation factor `mf`.
//! Stimulated sources move their answers toward the truth: the distance to
//! the truth shrinks by the ratio `1 - a·exp(-if·(j+1))` each time, where
//! `j` counts the rounds of stimulation handed out so far.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orchestrator::RespondentEnvironment;
use crate::view::{Question, QuestionId, Report, SourceId, UnifiedView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub source_id: SourceId,
    /// Mean of `answer - truth`.
    pub error_mu: f64,
    pub error_sigma: f64,
    pub malicious: bool,
}

impl SourceSpec {
    pub fn new(source_id: impl Into<SourceId>, error_mu: f64, error_sigma: f64) -> Result<Self> {
        if !error_mu.is_finite() {
            return Err(Error::NonFinite(error_mu));
        }
        if !(error_sigma >= 0.0 && error_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "error sigma must be non-negative, got {error_sigma}"
            )));
        }
        Ok(Self {
            source_id: source_id.into(),
            error_mu,
            error_sigma,
            malicious: false,
        })
    }

    /// `truth + N(error_mu, error_sigma²)`, before any manipulation.
    pub fn honest_answer<R: Rng + ?Sized>(&self, truth: f64, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        truth + self.error_mu + self.error_sigma * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub mv: usize,
    pub mf: f64,
    pub seed: u64,
}

impl AdversaryConfig {
    pub fn new(mv: usize, mf: f64, seed: u64) -> Result<Self> {
        if !(mf > 0.0 && mf.is_finite()) {
            return Err(Error::InvalidParameter(format!("mf = {mf} must be positive")));
        }
        Ok(Self { mv, mf, seed })
    }
}

/// Marks `mv` distinct sources, chosen uniformly with `adv.seed`, as
/// malicious.
pub fn inject_adversaries(specs: &[SourceSpec], adv: &AdversaryConfig) -> Result<Vec<SourceSpec>> {
    if adv.mv > specs.len() {
        return Err(Error::InvalidParameter(format!(
            "mv = {} exceeds the {} sources",
            adv.mv,
            specs.len()
        )));
    }
    let mut out = specs.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(adv.seed);
    for i in index::sample(&mut rng, specs.len(), adv.mv) {
        out[i].malicious = true;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ExponentSign {
    /// `1 - a·exp(-if·(j+1))`: large steps early, smaller later.
    #[default]
    NegativeDecay,
    /// `1 - a·exp(+if·(j+1))`.
    LiteralPositive,
}

/// Which stimulated sources actually respond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ResponseScope {
    #[default]
    AllSources,
    ManipulatedOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementConfig {
    pub if_factor: f64,
    pub a: f64,
    pub exponent_sign: ExponentSign,
    pub scope: ResponseScope,
}

impl ImprovementConfig {
    pub fn new(if_factor: f64, a: f64, exponent_sign: ExponentSign, scope: ResponseScope) -> Result<Self> {
        if !(if_factor > 0.0 && if_factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("if = {if_factor} must be positive")));
        }
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!("a = {a} outside (0, 1)")));
        }
        Ok(Self {
            if_factor,
            a,
            exponent_sign,
            scope,
        })
    }
}

impl Default for ImprovementConfig {
    fn default() -> Self {
        Self {
            if_factor: 0.2,
            a: 0.1,
            exponent_sign: ExponentSign::NegativeDecay,
            scope: ResponseScope::AllSources,
        }
    }
}

/// Distance multiplier for stimulation round `j`, clamped to `[0, 1]`.
pub fn improvement_ratio(j: usize, cfg: &ImprovementConfig) -> f64 {
    let t = (j + 1) as f64;
    let exponent = match cfg.exponent_sign {
        ExponentSign::NegativeDecay => -cfg.if_factor * t,
        ExponentSign::LiteralPositive => cfg.if_factor * t,
    };
    (1.0 - cfg.a * exponent.exp()).clamp(0.0, 1.0)
}

/// The answer of a stimulated source: same side of the truth, distance
/// scaled by [`improvement_ratio`].
pub fn respond(previous: f64, ground_truth: f64, j: usize, cfg: &ImprovementConfig) -> f64 {
    ground_truth + improvement_ratio(j, cfg) * (previous - ground_truth)
}

/// Mixes a counter into a master seed (splitmix64 finaliser), giving
/// well-separated seeds for related streams.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master ^ counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Honest answers for every source and question. Each source draws from
/// its own stream, in question order, so adding or flagging other sources
/// leaves its answers alone.
pub fn draw_honest_reports(specs: &[SourceSpec], questions: &[Question], seed: u64) -> Result<Vec<Report>> {
    let mut out = Vec::with_capacity(specs.len() * questions.len());
    for (i, spec) in specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for q in questions {
            let truth = q
                .ground_truth
                .ok_or_else(|| Error::MissingGroundTruth(q.id.to_string()))?;
            let value = spec.honest_answer(truth.value(), &mut rng);
            out.push(Report::new(spec.source_id.clone(), q.id.clone(), UnifiedView::new(value)?));
        }
    }
    Ok(out)
}

/// A stateful environment built from honest answers and source specs.
///
/// Every answer is stored as its signed offset from the truth (after
/// manipulation) and scaled by a per-source factor that only stimulation
/// changes, so unstimulated sources repeat themselves exactly.
#[derive(Debug, Clone)]
pub struct SimWorld {
    specs: Vec<SourceSpec>,
    index: HashMap<QuestionId, usize>,
    truths: Vec<f64>,
    /// `offsets[source][question]`.
    offsets: Vec<Vec<f64>>,
    scale: Vec<f64>,
    round: usize,
    improvement: ImprovementConfig,
}

impl SimWorld {
    pub fn new(
        questions: &[Question],
        honest: &[Report],
        specs: Vec<SourceSpec>,
        mf: f64,
        improvement: ImprovementConfig,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Empty("sources"));
        }
        if !(mf > 0.0 && mf.is_finite()) {
            return Err(Error::InvalidParameter(format!("mf = {mf} must be positive")));
        }
        let mut index = HashMap::with_capacity(questions.len());
        let mut truths = Vec::with_capacity(questions.len());
        for (qi, q) in questions.iter().enumerate() {
            let t = q
                .ground_truth
                .ok_or_else(|| Error::MissingGroundTruth(q.id.to_string()))?;
            if index.insert(q.id.clone(), qi).is_some() {
                return Err(Error::DuplicateQuestion(q.id.to_string()));
            }
            truths.push(t.value());
        }
        let source_index: HashMap<&SourceId, usize> =
            specs.iter().enumerate().map(|(i, s)| (&s.source_id, i)).collect();

        let mut offsets = vec![vec![None; questions.len()]; specs.len()];
        for r in honest {
            let (Some(&si), Some(&qi)) = (source_index.get(&r.source), index.get(&r.question)) else {
                continue;
            };
            let truth = truths[qi];
            let factor = if specs[si].malicious { mf } else { 1.0 };
            let slot = &mut offsets[si][qi];
            if slot.is_some() {
                return Err(Error::DuplicateAnswer {
                    source_id: r.source.to_string(),
                    question_id: r.question.to_string(),
                });
            }
            *slot = Some(factor * r.answer.value() - truth);
        }
        let offsets = offsets
            .into_iter()
            .enumerate()
            .map(|(si, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(qi, o)| {
                        o.ok_or_else(|| Error::MissingAnswer {
                            source_id: specs[si].source_id.to_string(),
                            question_id: questions[qi].id.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            scale: vec![1.0; specs.len()],
            specs,
            index,
            truths,
            offsets,
            round: 0,
            improvement,
        })
    }

    /// Draws honest answers with [`draw_honest_reports`] and builds the world.
    pub fn generate(
        questions: &[Question],
        specs: Vec<SourceSpec>,
        mf: f64,
        improvement: ImprovementConfig,
        seed: u64,
    ) -> Result<Self> {
        let honest = draw_honest_reports(&specs, questions, seed)?;
        Self::new(questions, &honest, specs, mf, improvement)
    }

    pub fn specs(&self) -> &[SourceSpec] {
        &self.specs
    }

    /// Rounds of stimulation applied so far.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Current distance factor of each source (1 until stimulated).
    pub fn scales(&self) -> &[f64] {
        &self.scale
    }

    /// Current `|answer - truth|` of source `s` on every question.
    pub fn distances(&self, s: usize) -> Vec<f64> {
        self.truths
            .iter()
            .zip(&self.offsets[s])
            .map(|(t, o)| ((t + self.scale[s] * o) - t).abs())
            .collect()
    }
}

impl RespondentEnvironment for SimWorld {
    fn sources(&self) -> Vec<SourceId> {
        self.specs.iter().map(|s| s.source_id.clone()).collect()
    }

    fn answer(&mut self, questions: &[QuestionId]) -> Result<Vec<Report>> {
        let lookups = questions
            .iter()
            .map(|q| {
                self.index
                    .get(q)
                    .map(|&qi| (qi, self.truths[qi]))
                    .ok_or_else(|| Error::MissingGroundTruth(q.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::with_capacity(self.specs.len() * questions.len());
        for (si, spec) in self.specs.iter().enumerate() {
            for (q, &(qi, truth)) in questions.iter().zip(&lookups) {
                let value = truth + self.scale[si] * self.offsets[si][qi];
                out.push(Report::new(spec.source_id.clone(), q.clone(), UnifiedView::new(value)?));
            }
        }
        Ok(out)
    }

    fn apply_stimulation(&mut self, sources: &[SourceId]) {
        let ratio = improvement_ratio(self.round, &self.improvement);
        let chosen: HashSet<&SourceId> = sources.iter().collect();
        for (si, spec) in self.specs.iter().enumerate() {
            let responds = match self.improvement.scope {
                ResponseScope::AllSources => true,
                ResponseScope::ManipulatedOnly => spec.malicious,
            };
            if responds && chosen.contains(&spec.source_id) {
                self.scale[si] *= ratio;
            }
        }
        self.round += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs(n: usize) -> Vec<SourceSpec> {
        (0..n)
            .map(|i| SourceSpec::new(format!("s{i}"), i as f64, 1.0).unwrap())
            .collect()
    }

    fn questions(n: usize) -> Vec<Question> {
        (0..n)
            .map(|i| Question::with_truth(format!("q{i}"), UnifiedView::new(i as f64).unwrap()))
            .collect()
    }

    #[test]
    fn improvement_ratio_examples() {
        let cfg = ImprovementConfig::new(0.2, 0.1, ExponentSign::NegativeDecay, ResponseScope::AllSources).unwrap();
        let r = improvement_ratio(0, &cfg);
        assert!((r - 0.918_126_924_692_201_8).abs() < 1e-12);
        assert!((respond(12.0, 10.0, 0, &cfg) - 10.0 - 1.836_253_849_384_403_6).abs() < 1e-12);
        assert!((respond(8.0, 10.0, 0, &cfg) - 10.0 + 1.836_253_849_384_403_6).abs() < 1e-12);
        assert_eq!(respond(10.0, 10.0, 3, &cfg), 10.0);

        let lit = ImprovementConfig { exponent_sign: ExponentSign::LiteralPositive, ..cfg };
        assert!((improvement_ratio(0, &lit) - 0.877_859_724_183_983_1).abs() < 1e-12);
        // exp(0.2·12) > 10 drives the literal ratio below zero
        assert_eq!(improvement_ratio(11, &lit), 0.0);
    }

    #[test]
    fn improvement_config_validation() {
        let ok = |f, a| ImprovementConfig::new(f, a, ExponentSign::NegativeDecay, ResponseScope::AllSources);
        assert!(ok(0.2, 0.1).is_ok());
        assert!(ok(0.0, 0.1).is_err());
        assert!(ok(0.2, 0.0).is_err());
        assert!(ok(0.2, 1.0).is_err());
    }

    #[test]
    fn adversary_injection() {
        let base = specs(13);
        let none = inject_adversaries(&base, &AdversaryConfig::new(0, 1.2, 7).unwrap()).unwrap();
        assert_eq!(none, base);

        let all = inject_adversaries(&base, &AdversaryConfig::new(13, 1.2, 7).unwrap()).unwrap();
        assert!(all.iter().all(|s| s.malicious));

        let a = inject_adversaries(&base, &AdversaryConfig::new(4, 1.2, 99).unwrap()).unwrap();
        let b = inject_adversaries(&base, &AdversaryConfig::new(4, 1.2, 99).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|s| s.malicious).count(), 4);

        assert!(inject_adversaries(&base, &AdversaryConfig::new(14, 1.2, 0).unwrap()).is_err());
        assert!(AdversaryConfig::new(1, 0.0, 0).is_err());
    }

    #[test]
    fn malicious_sources_scale_their_honest_answer() {
        let qs = [Question::with_truth("q", UnifiedView::new(8.0).unwrap())];
        let mut spec = SourceSpec::new("bad", 2.0, 0.0).unwrap();
        spec.malicious = true;
        let mut world = SimWorld::generate(&qs, vec![spec], 1.2, ImprovementConfig::default(), 0).unwrap();
        let reports = world.answer(&["q".into()]).unwrap();
        assert!((reports[0].answer.value() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn stimulation_shrinks_only_chosen_sources() {
        let qs = questions(5);
        let mut world = SimWorld::generate(&qs, specs(3), 1.0, ImprovementConfig::default(), 3).unwrap();
        let before: Vec<Vec<f64>> = (0..3).map(|s| world.distances(s)).collect();
        world.apply_stimulation(&["s1".into()]);
        let ratio = improvement_ratio(0, &ImprovementConfig::default());
        assert_eq!(world.distances(0), before[0]);
        assert_eq!(world.distances(2), before[2]);
        for (now, was) in world.distances(1).iter().zip(&before[1]) {
            assert!((now - ratio * was).abs() < 1e-9);
        }
        assert_eq!(world.round(), 1);
    }

    #[test]
    fn manipulated_only_scope_ignores_honest_sources() {
        let qs = questions(3);
        let mut sp = specs(2);
        sp[1].malicious = true;
        let imp = ImprovementConfig { scope: ResponseScope::ManipulatedOnly, ..Default::default() };
        let mut world = SimWorld::generate(&qs, sp, 1.4, imp, 1).unwrap();
        world.apply_stimulation(&["s0".into(), "s1".into()]);
        assert_eq!(world.scales()[0], 1.0);
        assert!(world.scales()[1] < 1.0);
    }

    #[test]
    fn unknown_questions_are_rejected() {
        let mut world = SimWorld::generate(&questions(2), specs(2), 1.0, ImprovementConfig::default(), 0).unwrap();
        assert!(world.answer(&["nope".into()]).is_err());
        assert_eq!(world.answer(&["q1".into(), "q0".into()]).unwrap().len(), 4);
    }
}
