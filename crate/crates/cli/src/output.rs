//! Result files: `results.csv`, `trajectory.jsonl` and `plotdata/*.csv`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use ciuv::IterationRecord;

use crate::config::ScenarioConfig;
use crate::experiment::{mean, Experiment, Method, ResultRow};
use crate::CliError;

const FIXED_COLUMNS: [&str; 5] = ["method", "sweep_factor", "sweep_value", "mean_error", "std_dev"];

fn results_header() -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(ScenarioConfig::default().to_pairs().into_iter().map(|(k, _)| k.to_owned()))
        .chain(["series".to_owned()])
        .collect()
}

/// f64 values are written with their shortest round-trip form; the series
/// is `;`-separated.
pub fn write_results<W: Write>(writer: W, rows: &[ResultRow]) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(results_header())?;
    for row in rows {
        let mut record = vec![
            row.method.to_string(),
            row.sweep_factor.clone().unwrap_or_default(),
            row.sweep_value.clone().unwrap_or_default(),
            row.mean_error.to_string(),
            row.std_dev.to_string(),
        ];
        record.extend(row.scenario.to_pairs().into_iter().map(|(_, v)| v));
        record.push(row.series.iter().map(f64::to_string).collect::<Vec<_>>().join(";"));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_f64(field: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse()
        .map_err(|e| CliError::Format(format!("{field} `{value}`: {e}")))
}

pub fn read_results<R: std::io::Read>(reader: R) -> Result<Vec<ResultRow>, CliError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != results_header() {
        return Err(CliError::Format("unexpected results.csv header".into()));
    }
    let n_config = header.len() - FIXED_COLUMNS.len() - 1;
    rdr.records()
        .map(|record| {
            let record = record?;
            let method = Method::ALL
                .into_iter()
                .find(|m| m.as_str() == &record[0])
                .ok_or_else(|| CliError::Format(format!("unknown method `{}`", &record[0])))?;
            let optional = |s: &str| (!s.is_empty()).then(|| s.to_owned());
            let mut scenario = ScenarioConfig::default();
            for i in FIXED_COLUMNS.len()..FIXED_COLUMNS.len() + n_config {
                scenario.set(&header[i], &record[i])?;
            }
            let series_field = &record[header.len() - 1];
            let series = if series_field.is_empty() {
                Vec::new()
            } else {
                series_field
                    .split(';')
                    .map(|v| parse_f64("series value", v))
                    .collect::<Result<_, _>>()?
            };
            Ok(ResultRow {
                method,
                sweep_factor: optional(&record[1]),
                sweep_value: optional(&record[2]),
                mean_error: parse_f64("mean_error", &record[3])?,
                std_dev: parse_f64("std_dev", &record[4])?,
                scenario,
                series,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct TrajectoryLine<'a> {
    sweep_factor: Option<&'a str>,
    sweep_value: Option<&'a str>,
    trial: usize,
    mean_abs_error: f64,
    cumulative_cost: usize,
    #[serde(flatten)]
    record: &'a IterationRecord,
}

pub fn write_trajectory<W: Write>(mut writer: W, exp: &Experiment) -> Result<(), CliError> {
    for point in &exp.points {
        for trial in &point.trials {
            let errors = trial.ciuv_error_trajectory();
            let costs = trial.cumulative_cost();
            for (i, record) in trial.outcome.history.iter().enumerate() {
                let line = TrajectoryLine {
                    sweep_factor: exp.sweep_factor.as_deref(),
                    sweep_value: point.sweep_value.as_deref(),
                    trial: trial.trial,
                    mean_abs_error: errors[i],
                    cumulative_cost: costs[i],
                    record,
                };
                serde_json::to_writer(&mut writer, &line)?;
                writer.write_all(b"\n")?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

fn write_xy(path: &Path, points: &[(f64, f64)]) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    wtr.write_record(["x", "y"])?;
    for (x, y) in points {
        wtr.write_record([x.to_string(), y.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn file_tag(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Writes three families of series:
///
/// * `error_vs_<factor>__<method>.csv`: mean error at each sweep value;
/// * `error_by_question__<point>__<method>.csv`: per-question error
///   averaged over trials;
/// * `cost_vs_error__<point>.csv`: cumulative stimulation cost against CIUV
///   error, averaged over trials by iteration. Trials that stopped early
///   hold their final values.
pub fn write_plotdata(dir: &Path, exp: &Experiment) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    if let Some(factor) = &exp.sweep_factor {
        for method in Method::ALL {
            let points: Vec<(f64, f64)> = exp
                .rows
                .iter()
                .filter(|r| r.method == method)
                .map(|r| {
                    let x = r.sweep_value.as_deref().unwrap_or_default();
                    Ok((parse_f64("sweep value", x)?, r.mean_error))
                })
                .collect::<Result<_, CliError>>()?;
            write_xy(&dir.join(format!("error_vs_{}__{}.csv", file_tag(factor), method)), &points)?;
        }
    }
    for point in &exp.points {
        let tag = match (&exp.sweep_factor, &point.sweep_value) {
            (Some(f), Some(v)) => file_tag(&format!("{f}={v}")),
            _ => "base".to_owned(),
        };
        let n_questions = point.scenario.n_questions;
        for method in Method::ALL {
            let series: Vec<(f64, f64)> = (0..n_questions)
                .map(|q| {
                    let errs: Vec<f64> = point.trials.iter().map(|t| t.errors(method)[q]).collect();
                    (q as f64, mean(&errs))
                })
                .collect();
            write_xy(&dir.join(format!("error_by_question__{tag}__{method}.csv")), &series)?;
        }

        let trajectories: Vec<(Vec<f64>, Vec<usize>)> = point
            .trials
            .iter()
            .map(|t| (t.ciuv_error_trajectory(), t.cumulative_cost()))
            .collect();
        let longest = trajectories.iter().map(|(e, _)| e.len()).max().unwrap_or(0);
        let series: Vec<(f64, f64)> = (0..longest)
            .map(|j| {
                let at = |len: usize| j.min(len - 1);
                let cost = trajectories.iter().map(|(_, c)| c[at(c.len())] as f64).collect::<Vec<_>>();
                let err = trajectories.iter().map(|(e, _)| e[at(e.len())]).collect::<Vec<_>>();
                (mean(&cost), mean(&err))
            })
            .collect();
        write_xy(&dir.join(format!("cost_vs_error__{tag}.csv")), &series)?;
    }
    Ok(())
}

/// Writes every output file under `dir`.
pub fn write_all(dir: &Path, exp: &Experiment) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    write_results(BufWriter::new(File::create(dir.join("results.csv"))?), &exp.rows)?;
    write_trajectory(BufWriter::new(File::create(dir.join("trajectory.jsonl"))?), exp)?;
    write_plotdata(&dir.join("plotdata"), exp)
}
