//! The verify/stimulate loop.
//!
//! Each iteration asks every source the probe and target questions, fits
//! reliability profiles on the probes, fuses the target views and checks
//! the fused confidence against the stopping thresholds. If the loop
//! continues, sources whose own confidence improved by at least `D` since
//! the previous iteration are stimulated; the others are dropped for the
//! rest of the run.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{self, ErrorThreshold, TruthEstimate, WeightAssignment};
use crate::reliability::{estimate_profiles, sample_probes, ProbeSet, ReliabilityProfile, TruthMode};
use crate::view::{Question, QuestionId, Report, SourceId, UnifiedView};

/// A population of sources that can be questioned and stimulated.
pub trait RespondentEnvironment {
    /// Every participating source, in a fixed order.
    fn sources(&self) -> Vec<SourceId>;

    /// One report per source and question.
    fn answer(&mut self, questions: &[QuestionId]) -> Result<Vec<Report>>;

    /// Pushes the given sources towards more trustworthy answers.
    fn apply_stimulation(&mut self, sources: &[SourceId]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingConfig {
    /// Acceptable confidence.
    pub r: f64,
    /// Smallest confidence improvement worth another round.
    pub d: f64,
    pub e_t: ErrorThreshold,
    pub max_iterations: usize,
}

impl StoppingConfig {
    pub fn new(r: f64, d: f64, e_t: f64, max_iterations: usize) -> Result<Self> {
        let cfg = Self {
            r,
            d,
            e_t: ErrorThreshold::new(e_t)?,
            max_iterations,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidParameter(format!("R = {} outside (0, 1]", self.r)));
        }
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidParameter(format!("D = {} must be non-negative", self.d)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self {
            r: 0.9,
            d: 0.01,
            e_t: ErrorThreshold::default(),
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopDecision {
    AcceptR,
    StallD,
    Continue,
}

/// Stopping rule applied to the fused confidence history, latest last.
/// The improvement test needs two entries, so a single entry below `R`
/// always continues.
pub fn should_stop(history: &[f64], stopping: &StoppingConfig) -> Result<StopDecision> {
    let Some(&latest) = history.last() else {
        return Err(Error::Empty("confidence history"));
    };
    if latest >= stopping.r {
        return Ok(StopDecision::AcceptR);
    }
    if let [.., previous, _] = history {
        if latest - previous < stopping.d {
            return Ok(StopDecision::StallD);
        }
    }
    Ok(StopDecision::Continue)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ProbeSchedule {
    /// Probes are drawn once and the same questions are re-asked.
    #[default]
    FixedPerRun,
    /// A fresh probe sample every iteration.
    ResampleEachIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiuvConfig {
    pub stopping: StoppingConfig,
    pub probe_count: usize,
    pub schedule: ProbeSchedule,
}

impl Default for CiuvConfig {
    fn default() -> Self {
        Self {
            stopping: StoppingConfig::default(),
            probe_count: 10,
            schedule: ProbeSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub question: QuestionId,
    pub u_star: UnifiedView,
}

/// Everything observed in one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub probes: Vec<QuestionId>,
    pub weights: WeightAssignment,
    pub mu_star: f64,
    pub sigma2_star: f64,
    pub confidence: f64,
    pub estimates: Vec<TargetEstimate>,
    /// `P(|e_i| < e_T)` for each source on its own.
    pub per_source_confidence: Vec<f64>,
    /// Sources stimulated at the end of this iteration.
    pub stimulated: Vec<SourceId>,
    pub cost: usize,
}

impl IterationRecord {
    pub fn truth_estimate(&self, target: usize) -> TruthEstimate {
        TruthEstimate {
            u_star: self.estimates[target].u_star,
            mu_star: self.mu_star,
            sigma2_star: self.sigma2_star,
            confidence: self.confidence,
            weights: self.weights.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    AcceptR,
    StallD,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiuvOutcome {
    pub sources: Vec<SourceId>,
    pub history: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

impl CiuvOutcome {
    pub fn last(&self) -> &IterationRecord {
        self.history.last().expect("a run has at least one iteration")
    }

    /// Final fused estimate for every target.
    pub fn final_estimates(&self) -> Vec<TruthEstimate> {
        let last = self.last();
        (0..last.estimates.len()).map(|i| last.truth_estimate(i)).collect()
    }

    /// Stimulations applied over the whole run.
    pub fn total_cost(&self) -> usize {
        self.history.iter().map(|r| r.cost).sum()
    }
}

/// Loop state, advanced one iteration at a time by [`CiuvRun::step`].
pub struct CiuvRun<'a> {
    config: CiuvConfig,
    pool: &'a [Question],
    targets: Vec<QuestionId>,
    rng: ChaCha8Rng,
    sources: Vec<SourceId>,
    probes: Vec<Question>,
    active: Vec<bool>,
    previous_source_confidence: Vec<f64>,
    confidences: Vec<f64>,
}

impl<'a> CiuvRun<'a> {
    pub fn new<E: RespondentEnvironment + ?Sized>(
        env: &E,
        probe_pool: &'a [Question],
        targets: &[QuestionId],
        config: CiuvConfig,
        seed: u64,
    ) -> Result<Self> {
        config.stopping.validate()?;
        if probe_pool.is_empty() {
            return Err(Error::Empty("probe pool"));
        }
        let sources = env.sources();
        if sources.is_empty() {
            return Err(Error::Empty("sources"));
        }
        let m = sources.len();
        Ok(Self {
            config,
            pool: probe_pool,
            targets: targets.to_vec(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            sources,
            probes: Vec::new(),
            active: vec![true; m],
            previous_source_confidence: vec![0.0; m],
            confidences: Vec::new(),
        })
    }

    pub fn sources(&self) -> &[SourceId] {
        &self.sources
    }

    /// Runs one iteration. When the decision is `Continue` the selected
    /// sources have already been stimulated in `env`.
    pub fn step<E: RespondentEnvironment + ?Sized>(
        &mut self,
        env: &mut E,
    ) -> Result<(IterationRecord, StopDecision)> {
        let iteration = self.confidences.len() + 1;
        if self.probes.is_empty() || self.config.schedule == ProbeSchedule::ResampleEachIteration {
            self.probes = sample_probes(self.pool, self.config.probe_count, &mut self.rng)?;
        }

        let mut asked: Vec<QuestionId> = self.probes.iter().map(|q| q.id.clone()).collect();
        asked.extend(self.targets.iter().cloned());
        let reports = env.answer(&asked)?;

        let mode = if self.probes.iter().all(|q| q.ground_truth.is_some()) {
            TruthMode::KnownTruth
        } else {
            TruthMode::ProxyMean
        };
        let probe_set = ProbeSet::new(self.probes.clone(), &reports, mode)?;
        let profiles = self.aligned_profiles(&probe_set)?;
        let target_views = self.target_views(&reports)?;

        let e_t = self.config.stopping.e_t;
        let weights = fusion::ciuv_weights(&profiles)?;
        let (mu_star, sigma2_star) = fusion::fused_error_params(&profiles, &weights)?;
        let confidence = fusion::confidence(mu_star, sigma2_star, e_t.value())?;
        let estimates = self
            .targets
            .iter()
            .zip(&target_views)
            .map(|(q, views)| {
                Ok(TargetEstimate {
                    question: q.clone(),
                    u_star: fusion::fuse(views, &weights)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let per_source_confidence = profiles
            .iter()
            .map(|p| fusion::confidence(p.mu, p.sigma2, e_t.value()))
            .collect::<Result<Vec<_>>>()?;

        self.confidences.push(confidence);
        let decision = should_stop(&self.confidences, &self.config.stopping)?;

        let mut stimulated = Vec::new();
        if decision == StopDecision::Continue {
            for (i, &p) in per_source_confidence.iter().enumerate() {
                let improved = p - self.previous_source_confidence[i] >= self.config.stopping.d;
                self.active[i] = self.active[i] && improved;
                if self.active[i] {
                    stimulated.push(self.sources[i].clone());
                }
            }
            self.previous_source_confidence.clone_from(&per_source_confidence);
            env.apply_stimulation(&stimulated);
        }

        let record = IterationRecord {
            iteration,
            probes: self.probes.iter().map(|q| q.id.clone()).collect(),
            weights,
            mu_star,
            sigma2_star,
            confidence,
            estimates,
            per_source_confidence,
            cost: stimulated.len(),
            stimulated,
        };
        Ok((record, decision))
    }

    fn aligned_profiles(&self, probe_set: &ProbeSet) -> Result<Vec<ReliabilityProfile>> {
        let mut by_source: HashMap<SourceId, ReliabilityProfile> = estimate_profiles(probe_set)?
            .into_iter()
            .map(|p| (p.source.clone(), p))
            .collect();
        if by_source.len() != self.sources.len() {
            return Err(Error::Schema(format!(
                "environment has {} sources but {} answered",
                self.sources.len(),
                by_source.len()
            )));
        }
        self.sources
            .iter()
            .map(|s| {
                by_source.remove(s).ok_or_else(|| Error::MissingAnswer {
                    source_id: s.to_string(),
                    question_id: self.probes[0].id.to_string(),
                })
            })
            .collect()
    }

    /// `views[target][source]`.
    fn target_views(&self, reports: &[Report]) -> Result<Vec<Vec<UnifiedView>>> {
        let lookup: HashMap<(&SourceId, &QuestionId), UnifiedView> = reports
            .iter()
            .map(|r| ((&r.source, &r.question), r.answer))
            .collect();
        self.targets
            .iter()
            .map(|q| {
                self.sources
                    .iter()
                    .map(|s| {
                        lookup.get(&(s, q)).copied().ok_or_else(|| Error::MissingAnswer {
                            source_id: s.to_string(),
                            question_id: q.to_string(),
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Iterates until the fused confidence reaches `R`, stops improving by
/// `D`, or `max_iterations` is hit.
pub fn run_ciuv<E: RespondentEnvironment + ?Sized>(
    env: &mut E,
    probe_pool: &[Question],
    targets: &[QuestionId],
    config: &CiuvConfig,
    seed: u64,
) -> Result<CiuvOutcome> {
    let mut run = CiuvRun::new(env, probe_pool, targets, *config, seed)?;
    let mut history = Vec::new();
    loop {
        let (record, decision) = run.step(env)?;
        history.push(record);
        let reason = match decision {
            StopDecision::AcceptR => Some(StopReason::AcceptR),
            StopDecision::StallD => Some(StopReason::StallD),
            StopDecision::Continue if history.len() >= config.stopping.max_iterations => {
                Some(StopReason::MaxIterations)
            }
            StopDecision::Continue => None,
        };
        if let Some(stop_reason) = reason {
            return Ok(CiuvOutcome {
                sources: run.sources,
                history,
                stop_reason,
            });
        }
    }
}
