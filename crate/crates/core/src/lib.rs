//! Truth discovery over conflicting numeric views.
//!
//! Several sources answer the same questions in possibly different
//! representations. This crate maps their answers into one unified scale,
//! estimates a Gaussian error model per source from probe questions with
//! known (or proxied) truth, fuses the target answers with weights that
//! penalise both biased and noisy sources, and re-asks stimulated sources
//! until the fused estimate is confident enough or stops improving.
//!
//! Module map:
//!
//! * [`view`]: unified views, raw views, affine mappings and distances.
//! * [`reliability`]: per-source error profiles from probe questions.
//! * [`fusion`]: weight assignment, weighted fusion, confidence and the
//!   worst-case bound.
//! * [`baselines`]: Mean, Median, Voting and K-sources estimators.
//! * [`orchestrator`]: the iterate / verify / stimulate loop.
//! * [`simworld`]: a simulated respondent population with adversaries.
//! * [`dataset`]: level tables, growth rates and the synthetic generator.

pub mod baselines;
pub mod dataset;
mod error;
pub mod fusion;
pub mod gauss;
pub mod orchestrator;
pub mod reliability;
pub mod simworld;
pub mod view;

pub use error::{Error, Result};
pub use fusion::{ErrorThreshold, TruthEstimate, WeightAssignment};
pub use orchestrator::{
    run_ciuv, should_stop, CiuvConfig, CiuvOutcome, IterationRecord, RespondentEnvironment,
    StopDecision, StoppingConfig,
};
pub use reliability::{ProbeSet, ReliabilityProfile, TruthMode};
pub use view::{Question, QuestionId, RawView, Report, SourceId, UnifiedView};
