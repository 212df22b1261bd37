//! Scenario configuration: flat `key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; unknown or repeated keys are rejected.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use ciuv::dataset::{parse_signs, SynthConfig, DEFAULT_SIGNS};
use ciuv::orchestrator::{CiuvConfig, ProbeSchedule, StoppingConfig};
use ciuv::simworld::{ExponentSign, ImprovementConfig, ResponseScope};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mv: usize,
    pub mf: f64,
    pub if_factor: f64,
    pub a: f64,
    pub e_t: f64,
    pub r: f64,
    pub d: f64,
    pub seed: u64,
    pub k: usize,
    pub n_probe_questions: usize,
    pub max_iterations: usize,
    pub n_trials: usize,
    pub exponent_sign: ExponentSign,
    pub include_ground_truth_view: bool,
    /// Target questions per trial.
    pub n_questions: usize,
    /// Known-truth questions per trial that probes and the K-sources prior
    /// are drawn from.
    pub n_pool_questions: usize,
    pub response_scope: ResponseScope,
    pub probe_schedule: ProbeSchedule,
    pub signs: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mv: 0,
            mf: 1.0,
            if_factor: 0.2,
            a: 0.1,
            e_t: 1.0,
            r: 0.9,
            d: 0.01,
            seed: 0,
            k: 3,
            n_probe_questions: 10,
            max_iterations: 50,
            n_trials: 10,
            exponent_sign: ExponentSign::NegativeDecay,
            include_ground_truth_view: false,
            n_questions: 20,
            n_pool_questions: 20,
            response_scope: ResponseScope::AllSources,
            probe_schedule: ProbeSchedule::FixedPerRun,
            signs: DEFAULT_SIGNS.to_owned(),
        }
    }
}

/// Keys that a sweep may vary.
pub const SWEEP_FACTORS: [&str; 10] = [
    "mv",
    "mf",
    "if_factor",
    "a",
    "e_t",
    "r",
    "d",
    "k",
    "n_probe_questions",
    "max_iterations",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_owned()) {
                return Err(CliError::Config(format!("line {}: `{key}` given twice", n + 1)));
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "mv" => self.mv = parse_value(key, value)?,
            "mf" => self.mf = parse_value(key, value)?,
            "if_factor" => self.if_factor = parse_value(key, value)?,
            "a" => self.a = parse_value(key, value)?,
            "e_t" => self.e_t = parse_value(key, value)?,
            "r" => self.r = parse_value(key, value)?,
            "d" => self.d = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "n_probe_questions" => self.n_probe_questions = parse_value(key, value)?,
            "max_iterations" => self.max_iterations = parse_value(key, value)?,
            "n_trials" => self.n_trials = parse_value(key, value)?,
            "exponent_sign" => {
                self.exponent_sign = match value {
                    "negative_decay" => ExponentSign::NegativeDecay,
                    "literal_positive" => ExponentSign::LiteralPositive,
                    _ => {
                        return Err(CliError::Config(format!(
                            "`exponent_sign`: expected negative_decay or literal_positive, got `{value}`"
                        )))
                    }
                }
            }
            "include_ground_truth_view" => self.include_ground_truth_view = parse_bool(key, value)?,
            "n_questions" => self.n_questions = parse_value(key, value)?,
            "n_pool_questions" => self.n_pool_questions = parse_value(key, value)?,
            "response_scope" => {
                self.response_scope = match value {
                    "all_sources" => ResponseScope::AllSources,
                    "manipulated_only" => ResponseScope::ManipulatedOnly,
                    _ => {
                        return Err(CliError::Config(format!(
                            "`response_scope`: expected all_sources or manipulated_only, got `{value}`"
                        )))
                    }
                }
            }
            "probe_schedule" => {
                self.probe_schedule = match value {
                    "fixed_per_run" => ProbeSchedule::FixedPerRun,
                    "resample_each_iteration" => ProbeSchedule::ResampleEachIteration,
                    _ => {
                        return Err(CliError::Config(format!(
                            "`probe_schedule`: expected fixed_per_run or resample_each_iteration, got `{value}`"
                        )))
                    }
                }
            }
            "signs" => self.signs = value.to_owned(),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.n_trials == 0 {
            return fail("n_trials must be at least 1".into());
        }
        if self.n_questions == 0 {
            return fail("n_questions must be at least 1".into());
        }
        let m = self.source_count();
        if self.mv > m {
            return fail(format!("mv = {} exceeds the {m} participating views", self.mv));
        }
        if self.k == 0 || self.k > m {
            return fail(format!("k = {} outside 1..={m}", self.k));
        }
        if self.n_probe_questions == 0 || self.n_probe_questions > self.n_pool_questions {
            return fail(format!(
                "n_probe_questions = {} outside 1..={}",
                self.n_probe_questions, self.n_pool_questions
            ));
        }
        if !(self.mf > 0.0 && self.mf.is_finite()) {
            return fail(format!("mf = {} must be positive", self.mf));
        }
        self.synth()?;
        self.improvement()?;
        self.ciuv()?;
        Ok(())
    }

    /// Every key with its value in config-file syntax, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let exponent_sign = match self.exponent_sign {
            ExponentSign::NegativeDecay => "negative_decay",
            ExponentSign::LiteralPositive => "literal_positive",
        };
        let response_scope = match self.response_scope {
            ResponseScope::AllSources => "all_sources",
            ResponseScope::ManipulatedOnly => "manipulated_only",
        };
        let probe_schedule = match self.probe_schedule {
            ProbeSchedule::FixedPerRun => "fixed_per_run",
            ProbeSchedule::ResampleEachIteration => "resample_each_iteration",
        };
        vec![
            ("mv", self.mv.to_string()),
            ("mf", self.mf.to_string()),
            ("if_factor", self.if_factor.to_string()),
            ("a", self.a.to_string()),
            ("e_t", self.e_t.to_string()),
            ("r", self.r.to_string()),
            ("d", self.d.to_string()),
            ("seed", self.seed.to_string()),
            ("k", self.k.to_string()),
            ("n_probe_questions", self.n_probe_questions.to_string()),
            ("max_iterations", self.max_iterations.to_string()),
            ("n_trials", self.n_trials.to_string()),
            ("exponent_sign", exponent_sign.to_owned()),
            ("include_ground_truth_view", self.include_ground_truth_view.to_string()),
            ("n_questions", self.n_questions.to_string()),
            ("n_pool_questions", self.n_pool_questions.to_string()),
            ("response_scope", response_scope.to_owned()),
            ("probe_schedule", probe_schedule.to_owned()),
            ("signs", self.signs.clone()),
        ]
    }

    /// The config file text that parses back to `self`.
    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn source_count(&self) -> usize {
        if self.include_ground_truth_view {
            13
        } else {
            12
        }
    }

    pub fn synth(&self) -> Result<SynthConfig, CliError> {
        Ok(SynthConfig {
            signs: parse_signs(&self.signs)?,
            include_ground_truth_view: self.include_ground_truth_view,
            ..SynthConfig::default()
        })
    }

    pub fn improvement(&self) -> Result<ImprovementConfig, CliError> {
        Ok(ImprovementConfig::new(
            self.if_factor,
            self.a,
            self.exponent_sign,
            self.response_scope,
        )?)
    }

    pub fn ciuv(&self) -> Result<CiuvConfig, CliError> {
        Ok(CiuvConfig {
            stopping: StoppingConfig::new(self.r, self.d, self.e_t, self.max_iterations)?,
            probe_count: self.n_probe_questions,
            schedule: self.probe_schedule,
        })
    }
}

/// One factor and the values it takes, e.g. `mv=3,6,9,12`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub factor: String,
    pub values: Vec<String>,
}

impl Sweep {
    pub fn new(factor: &str, values: &[&str]) -> Result<Self, CliError> {
        let factor = if factor == "if" { "if_factor" } else { factor };
        if !SWEEP_FACTORS.contains(&factor) {
            return Err(CliError::Config(format!(
                "cannot sweep `{factor}`; choose one of {}",
                SWEEP_FACTORS.join(", ")
            )));
        }
        if values.is_empty() {
            return Err(CliError::Config("sweep needs at least one value".into()));
        }
        Ok(Self {
            factor: factor.to_owned(),
            values: values.iter().map(|v| v.trim().to_owned()).collect(),
        })
    }

    /// The config at every sweep point, validated.
    pub fn points(&self, base: &ScenarioConfig) -> Result<Vec<ScenarioConfig>, CliError> {
        self.values
            .iter()
            .map(|v| {
                let mut cfg = base.clone();
                cfg.set(&self.factor, v)?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}

impl FromStr for Sweep {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (factor, values) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("sweep `{s}` should look like factor=v1,v2")))?;
        let values: Vec<&str> = values.split(',').filter(|v| !v.trim().is_empty()).collect();
        Self::new(factor.trim(), &values)
    }
}
