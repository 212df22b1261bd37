//! Trials and sweeps over synthetic worlds.
//!
//! A trial synthesises one world, injects adversaries, scores the four
//! baselines on the first answers and then runs the full iterative loop.
//! Trial `t` always uses seed `derive_seed(master, t)`, so every sweep point
//! is evaluated on the same worlds.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ciuv::baselines::{k_sources_estimate, mean_estimate, median_estimate, voting_estimate, TrustRanking};
use ciuv::dataset::synthesize_table1;
use ciuv::reliability::{estimate_profiles, sample_probes};
use ciuv::simworld::{derive_seed, inject_adversaries, AdversaryConfig, SimWorld};
use ciuv::{run_ciuv, CiuvOutcome, ProbeSet, Question, QuestionId, RespondentEnvironment, TruthMode, UnifiedView};

use crate::config::{ScenarioConfig, Sweep};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CIUV")]
    Ciuv,
    Mean,
    Median,
    Voting,
    #[serde(rename = "K-sources")]
    KSources,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Ciuv, Method::Mean, Method::Median, Method::Voting, Method::KSources];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ciuv => "CIUV",
            Method::Mean => "Mean",
            Method::Median => "Median",
            Method::Voting => "Voting",
            Method::KSources => "K-sources",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything produced by one trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub targets: Vec<Question>,
    /// `|estimate - truth|` per target, indexed like [`Method::ALL`].
    pub errors: [Vec<f64>; 5],
    pub outcome: CiuvOutcome,
}

impl TrialResult {
    pub fn errors(&self, method: Method) -> &[f64] {
        let i = Method::ALL.iter().position(|&m| m == method).expect("known method");
        &self.errors[i]
    }

    pub fn mean_error(&self, method: Method) -> f64 {
        mean(self.errors(method))
    }

    /// Mean absolute CIUV error on the targets after each iteration.
    pub fn ciuv_error_trajectory(&self) -> Vec<f64> {
        self.outcome
            .history
            .iter()
            .map(|r| {
                mean(
                    &r.estimates
                        .iter()
                        .zip(&self.targets)
                        .map(|(e, q)| (e.u_star.value() - truth(q)).abs())
                        .collect::<Vec<_>>(),
                )
            })
            .collect()
    }

    /// Stimulations applied up to and including each iteration.
    pub fn cumulative_cost(&self) -> Vec<usize> {
        self.outcome
            .history
            .iter()
            .scan(0, |acc, r| {
                *acc += r.cost;
                Some(*acc)
            })
            .collect()
    }
}

fn truth(q: &Question) -> f64 {
    q.ground_truth.expect("synthetic questions carry truth").value()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Runs trial `trial` of `cfg`.
pub fn run_trial(cfg: &ScenarioConfig, trial: usize) -> Result<TrialResult, CliError> {
    let seed = derive_seed(cfg.seed, trial as u64);
    let n_total = cfg.n_questions + cfg.n_pool_questions;
    let (probes, specs) = synthesize_table1(derive_seed(seed, 1), n_total, &cfg.synth()?)?;
    let adversaries = AdversaryConfig::new(cfg.mv, cfg.mf, derive_seed(seed, 2))?;
    let specs = inject_adversaries(&specs, &adversaries)?;
    let questions = probes.questions().to_vec();
    let mut world = SimWorld::new(&questions, &probes.reports(), specs, cfg.mf, cfg.improvement()?)?;

    let targets = questions[..cfg.n_questions].to_vec();
    let pool = questions[cfg.n_questions..].to_vec();
    let target_ids: Vec<QuestionId> = targets.iter().map(|q| q.id.clone()).collect();
    let all_ids: Vec<QuestionId> = questions.iter().map(|q| q.id.clone()).collect();
    let first_answers = world.answer(&all_ids)?;
    let sources = world.sources();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 3));
    let prior = sample_probes(&pool, cfg.n_probe_questions, &mut rng)?;
    let prior = ProbeSet::new(prior, &first_answers, TruthMode::KnownTruth)?;
    let ranking = TrustRanking::from_profiles(&estimate_profiles(&prior)?, "randomly drawn known-truth questions")?;

    let answer_sheet = ProbeSet::new(targets.clone(), &first_answers, TruthMode::KnownTruth)?;
    let mut errors: [Vec<f64>; 5] = Default::default();
    for (q, question) in targets.iter().enumerate() {
        let views: Vec<UnifiedView> = sources
            .iter()
            .map(|s| {
                let si = answer_sheet.sources().iter().position(|x| x == s).expect("complete sheet");
                UnifiedView::new(answer_sheet.answer(si, q))
            })
            .collect::<ciuv::Result<_>>()?;
        let t = truth(question);
        errors[1].push((mean_estimate(&views)?.value() - t).abs());
        errors[2].push((median_estimate(&views)?.value() - t).abs());
        errors[3].push((voting_estimate(&views)?.value() - t).abs());
        errors[4].push((k_sources_estimate(&sources, &views, &ranking, cfg.k)?.value() - t).abs());
    }

    let outcome = run_ciuv(&mut world, &pool, &target_ids, &cfg.ciuv()?, derive_seed(seed, 4))?;
    errors[0] = outcome
        .last()
        .estimates
        .iter()
        .zip(&targets)
        .map(|(e, q)| (e.u_star.value() - truth(q)).abs())
        .collect();

    Ok(TrialResult {
        trial,
        targets,
        errors,
        outcome,
    })
}

/// One method at one sweep point, aggregated over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub sweep_factor: Option<String>,
    pub sweep_value: Option<String>,
    pub mean_error: f64,
    pub std_dev: f64,
    pub scenario: ScenarioConfig,
    /// Per-question errors, trial-major.
    pub series: Vec<f64>,
}

impl ResultRow {
    pub fn from_series(
        method: Method,
        sweep: Option<(&str, &str)>,
        scenario: ScenarioConfig,
        series: Vec<f64>,
    ) -> Self {
        Self {
            method,
            sweep_factor: sweep.map(|(f, _)| f.to_owned()),
            sweep_value: sweep.map(|(_, v)| v.to_owned()),
            mean_error: mean(&series),
            std_dev: std_dev(&series),
            scenario,
            series,
        }
    }
}

/// All trials at one sweep point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub sweep_value: Option<String>,
    pub scenario: ScenarioConfig,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub sweep_factor: Option<String>,
    pub points: Vec<PointResult>,
    pub rows: Vec<ResultRow>,
}

/// Runs every trial at every sweep point. Cells run in parallel; results
/// are assembled in (sweep point, trial) order.
pub fn run_experiment(cfg: &ScenarioConfig, sweep: Option<&Sweep>) -> Result<Experiment, CliError> {
    cfg.validate()?;
    let configs: Vec<(Option<String>, ScenarioConfig)> = match sweep {
        Some(s) => s.values.iter().cloned().map(Some).zip(s.points(cfg)?).collect(),
        None => vec![(None, cfg.clone())],
    };
    let cells: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|p| (0..cfg.n_trials).map(move |t| (p, t)))
        .collect();
    let results: Vec<TrialResult> = cells
        .par_iter()
        .map(|&(p, t)| run_trial(&configs[p].1, t))
        .collect::<Result<_, _>>()?;

    let mut results = results.into_iter();
    let factor = sweep.map(|s| s.factor.clone());
    let mut points = Vec::with_capacity(configs.len());
    let mut rows = Vec::new();
    for (value, scenario) in configs {
        let trials: Vec<TrialResult> = results.by_ref().take(cfg.n_trials).collect();
        for method in Method::ALL {
            let series: Vec<f64> = trials.iter().flat_map(|t| t.errors(method).iter().copied()).collect();
            let key = factor.as_deref().zip(value.as_deref());
            rows.push(ResultRow::from_series(method, key, scenario.clone(), series));
        }
        points.push(PointResult {
            sweep_value: value,
            scenario,
            trials,
        });
    }
    Ok(Experiment {
        sweep_factor: factor,
        points,
        rows,
    })
}
