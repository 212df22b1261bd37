//! Per-source error models estimated from probe questions.
//!
//! Each source answers a set of probe questions. Against a reference truth
//! for each probe (the known ground truth, or the cross-source mean when it
//! is unknown) the signed error `truth - answer` is collected, and the
//! source is summarised as a Gaussian `G(mu, sigma2)` over those samples.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::view::{signed_diff, Question, QuestionId, Report, SourceId, UnifiedView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityProfile {
    pub source: SourceId,
    /// Mean signed error, `mean(truth - answer)`.
    pub mu: f64,
    /// Population variance of the error samples around `mu`.
    pub sigma2: f64,
    pub sample_count: usize,
}

impl ReliabilityProfile {
    pub fn new(source: SourceId, mu: f64, sigma2: f64, sample_count: usize) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NonFinite(mu));
        }
        if !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "error variance must be finite and non-negative, got {sigma2}"
            )));
        }
        if sample_count == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        Ok(Self {
            source,
            mu,
            sigma2,
            sample_count,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// How the reference truth of each probe is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum TruthMode {
    /// Every probe carries its ground truth.
    KnownTruth,
    /// The mean of all sources' answers stands in for the truth.
    ProxyMean,
    /// Profiles are supplied from earlier rounds and returned unchanged.
    Historical(HashMap<SourceId, ReliabilityProfile>),
}

/// A complete source × question answer matrix plus the truth mode.
///
/// Sources are ordered by first appearance in the report list and questions
/// keep the order they were given in.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    questions: Vec<Question>,
    sources: Vec<SourceId>,
    /// `answers[source][question]`.
    answers: Vec<Vec<f64>>,
    truth_mode: TruthMode,
}

impl ProbeSet {
    pub fn new(questions: Vec<Question>, reports: &[Report], truth_mode: TruthMode) -> Result<Self> {
        if questions.is_empty() {
            return Err(Error::Empty("probe set"));
        }
        let mut q_index = HashMap::with_capacity(questions.len());
        for (i, q) in questions.iter().enumerate() {
            if q_index.insert(q.id.clone(), i).is_some() {
                return Err(Error::DuplicateQuestion(q.id.to_string()));
            }
            if matches!(truth_mode, TruthMode::KnownTruth) && q.ground_truth.is_none() {
                return Err(Error::MissingGroundTruth(q.id.to_string()));
            }
        }

        let mut sources: Vec<SourceId> = Vec::new();
        let mut s_index: HashMap<&SourceId, usize> = HashMap::new();
        let mut filled: Vec<Vec<Option<f64>>> = Vec::new();
        for r in reports {
            // Reports for questions outside this probe set are ignored, so a
            // full answer sheet can be passed in directly.
            let Some(&qi) = q_index.get(&r.question) else {
                continue;
            };
            let si = *s_index.entry(&r.source).or_insert_with(|| {
                sources.push(r.source.clone());
                filled.push(vec![None; questions.len()]);
                sources.len() - 1
            });
            let slot = &mut filled[si][qi];
            if slot.is_some() {
                return Err(Error::DuplicateAnswer {
                    source_id: r.source.to_string(),
                    question_id: r.question.to_string(),
                });
            }
            *slot = Some(r.answer.value());
        }
        if sources.is_empty() {
            return Err(Error::Empty("probe answers"));
        }

        let mut answers = Vec::with_capacity(sources.len());
        for (si, row) in filled.into_iter().enumerate() {
            let row = row
                .into_iter()
                .enumerate()
                .map(|(qi, a)| {
                    a.ok_or_else(|| Error::MissingAnswer {
                        source_id: sources[si].to_string(),
                        question_id: questions[qi].id.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            answers.push(row);
        }

        Ok(Self {
            questions,
            sources,
            answers,
            truth_mode,
        })
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn sources(&self) -> &[SourceId] {
        &self.sources
    }

    pub fn truth_mode(&self) -> &TruthMode {
        &self.truth_mode
    }

    /// Answer of source `s` to question `q`, by position.
    pub fn answer(&self, s: usize, q: usize) -> f64 {
        self.answers[s][q]
    }

    /// All reports, source-major.
    pub fn reports(&self) -> Vec<Report> {
        let mut out = Vec::with_capacity(self.sources.len() * self.questions.len());
        for (s, src) in self.sources.iter().enumerate() {
            for (q, question) in self.questions.iter().enumerate() {
                out.push(Report {
                    source: src.clone(),
                    question: question.id.clone(),
                    answer: UnifiedView::new(self.answers[s][q]).expect("validated on input"),
                });
            }
        }
        out
    }

    /// Reference truth for each probe under the current truth mode.
    fn reference_truths(&self) -> Result<Vec<f64>> {
        (0..self.questions.len())
            .map(|q| match &self.truth_mode {
                TruthMode::ProxyMean => {
                    let column: Vec<UnifiedView> = self
                        .answers
                        .iter()
                        .map(|row| UnifiedView::new(row[q]))
                        .collect::<Result<_>>()?;
                    Ok(proxy_truth(&column)?.value())
                }
                _ => self.questions[q]
                    .ground_truth
                    .map(UnifiedView::value)
                    .ok_or_else(|| Error::MissingGroundTruth(self.questions[q].id.to_string())),
            })
            .collect()
    }
}

pub fn proxy_truth(answers: &[UnifiedView]) -> Result<UnifiedView> {
    if answers.is_empty() {
        return Err(Error::Empty("proxy truth"));
    }
    let sum: f64 = answers.iter().map(|a| a.value()).sum();
    UnifiedView::new(sum / answers.len() as f64)
}

/// Fits `G(mu_i, sigma2_i)` for every source in the probe set.
pub fn estimate_profiles(probes: &ProbeSet) -> Result<Vec<ReliabilityProfile>> {
    if let TruthMode::Historical(priors) = &probes.truth_mode {
        return probes
            .sources
            .iter()
            .map(|s| {
                priors
                    .get(s)
                    .cloned()
                    .ok_or_else(|| Error::MissingPrior(s.to_string()))
            })
            .collect();
    }

    let truths = probes.reference_truths()?;
    let n = truths.len();
    let mut errors = vec![0.0; n];
    probes
        .sources
        .iter()
        .zip(&probes.answers)
        .map(|(src, row)| {
            for ((e, &t), &a) in errors.iter_mut().zip(&truths).zip(row) {
                *e = signed_diff(UnifiedView::new(t)?, UnifiedView::new(a)?);
            }
            let mu = errors.iter().sum::<f64>() / n as f64;
            let sigma2 = errors.iter().map(|e| (e - mu) * (e - mu)).sum::<f64>() / n as f64;
            ReliabilityProfile::new(src.clone(), mu, sigma2, n)
        })
        .collect()
}

/// Draws `count` distinct questions from `pool` uniformly at random,
/// returned in the order drawn.
pub fn sample_probes<R: Rng + ?Sized>(
    pool: &[Question],
    count: usize,
    rng: &mut R,
) -> Result<Vec<Question>> {
    if pool.is_empty() {
        return Err(Error::Empty("probe pool"));
    }
    if count == 0 || count > pool.len() {
        return Err(Error::InvalidParameter(format!(
            "probe count {count} outside 1..={}",
            pool.len()
        )));
    }
    let mut seen = HashSet::with_capacity(pool.len());
    for q in pool {
        if !seen.insert(&q.id) {
            return Err(Error::DuplicateQuestion(q.id.to_string()));
        }
    }
    Ok(index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect())
}

/// Convenience lookup of the question ids in a probe list.
pub fn question_ids(questions: &[Question]) -> Vec<QuestionId> {
    questions.iter().map(|q| q.id.clone()).collect()
}
