//! GDP-style level tables, accounting identities, growth rates and a
//! synthetic generator parameterised by the published error statistics of
//! the thirteen GDP growth-rate views.
//!
//! Level CSV layout (header required, empty field = missing):
//!
//! ```text
//! year,FCE,GCF,NE,GDP_EA,NPT,WC,DFA,BB,GDP_IA,FI,SI,TI,GDP_PA
//! ```
//!
//! Any subset of the view columns may be present, but `year` is mandatory.
//! Long-format answers use `question_id,source_id,value` and truths use
//! `question_id,truth`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reliability::{ProbeSet, TruthMode};
use crate::simworld::{derive_seed, draw_honest_reports, SourceSpec};
use crate::view::{Question, Report, UnifiedView};

/// The thirteen views of GDP growth, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum ViewName {
    FCE,
    GCF,
    NE,
    GDP_EA,
    NPT,
    WC,
    DFA,
    BB,
    GDP_IA,
    FI,
    SI,
    TI,
    GDP_PA,
}

impl ViewName {
    pub const ALL: [ViewName; 13] = [
        ViewName::FCE,
        ViewName::GCF,
        ViewName::NE,
        ViewName::GDP_EA,
        ViewName::NPT,
        ViewName::WC,
        ViewName::DFA,
        ViewName::BB,
        ViewName::GDP_IA,
        ViewName::FI,
        ViewName::SI,
        ViewName::TI,
        ViewName::GDP_PA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViewName::FCE => "FCE",
            ViewName::GCF => "GCF",
            ViewName::NE => "NE",
            ViewName::GDP_EA => "GDP_EA",
            ViewName::NPT => "NPT",
            ViewName::WC => "WC",
            ViewName::DFA => "DFA",
            ViewName::BB => "BB",
            ViewName::GDP_IA => "GDP_IA",
            ViewName::FI => "FI",
            ViewName::SI => "SI",
            ViewName::TI => "TI",
            ViewName::GDP_PA => "GDP_PA",
        }
    }

    /// Published `(mean error, standard deviation)` of this view's growth
    /// rate against the production-approach figure.
    pub fn error_stats(self) -> (f64, f64) {
        match self {
            ViewName::FCE => (2.4069, 1.5291),
            ViewName::GCF => (3.8193, 2.9389),
            ViewName::NE => (33.6287, 34.5794),
            ViewName::GDP_EA => (1.2462, 0.9685),
            ViewName::NPT => (3.9390, 3.4461),
            ViewName::WC => (4.1153, 5.3371),
            ViewName::DFA => (3.6984, 2.3672),
            ViewName::BB => (10.7253, 14.3010),
            ViewName::GDP_IA => (3.0893, 3.6595),
            ViewName::FI => (4.8382, 3.2961),
            ViewName::SI => (1.6570, 1.1663),
            ViewName::TI => (2.6926, 1.9201),
            ViewName::GDP_PA => (0.0, 0.0),
        }
    }
}

impl fmt::Display for ViewName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ViewName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViewName::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown column `{s}`")))
    }
}

/// The three additive identities: an aggregate and its components.
pub const IDENTITIES: [(ViewName, &[ViewName]); 3] = [
    (ViewName::GDP_EA, &[ViewName::FCE, ViewName::GCF, ViewName::NE]),
    (ViewName::GDP_IA, &[ViewName::NPT, ViewName::WC, ViewName::DFA, ViewName::BB]),
    (ViewName::GDP_PA, &[ViewName::FI, ViewName::SI, ViewName::TI]),
];

/// Default sign of each view's synthetic mean error, in [`ViewName::ALL`]
/// order. `+` puts the view above the truth on average.
pub const DEFAULT_SIGNS: &str = "+--++-+++-+-+";

/// Parses a 13-character `+`/`-` pattern into signs.
pub fn parse_signs(pattern: &str) -> Result<[f64; 13]> {
    let chars: Vec<char> = pattern.chars().collect();
    if chars.len() != 13 {
        return Err(Error::InvalidParameter(format!(
            "sign pattern needs 13 characters, got {}",
            chars.len()
        )));
    }
    let mut out = [1.0; 13];
    for (slot, c) in out.iter_mut().zip(chars) {
        *slot = match c {
            '+' => 1.0,
            '-' => -1.0,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "sign pattern may only contain + and -, found `{other}`"
                )))
            }
        };
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    pub years: Vec<i32>,
    pub columns: BTreeMap<ViewName, Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityResidual {
    pub year: i32,
    pub aggregate: ViewName,
    /// `aggregate - Σ components`.
    pub residual: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IdentityReport {
    pub residuals: Vec<IdentityResidual>,
}

impl IdentityReport {
    pub fn flagged(&self) -> impl Iterator<Item = &IdentityResidual> {
        self.residuals.iter().filter(|r| r.flagged)
    }

    pub fn is_clean(&self) -> bool {
        self.flagged().next().is_none()
    }
}

pub const DEFAULT_IDENTITY_TOLERANCE: f64 = 0.005;

fn parse_cell(raw: &str, row: usize, column: usize) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw.parse().map_err(|e| Error::Parse {
        row,
        column,
        message: format!("`{raw}`: {e}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column,
            message: format!("`{raw}` is not finite"),
        });
    }
    Ok(Some(v))
}

/// Reads a level table. Rows and columns in errors are 1-based, with the
/// header as row 1.
pub fn read_levels<R: Read>(reader: R) -> Result<LevelTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut year_col = None;
    let mut views = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if h == "year" {
            if year_col.replace(i).is_some() {
                return Err(Error::Schema("column `year` appears twice".into()));
            }
        } else {
            let v: ViewName = h.parse()?;
            if views.iter().any(|(_, seen)| *seen == v) {
                return Err(Error::Schema(format!("column `{h}` appears twice")));
            }
            views.push((i, v));
        }
    }
    let year_col = year_col.ok_or_else(|| Error::Schema("missing `year` column".into()))?;

    let mut years = Vec::new();
    let mut columns: BTreeMap<ViewName, Vec<Option<f64>>> =
        views.iter().map(|&(_, v)| (v, Vec::new())).collect();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 2;
        let year_raw = record.get(year_col).unwrap_or("");
        let year: i32 = year_raw.parse().map_err(|e| Error::Parse {
            row,
            column: year_col + 1,
            message: format!("year `{year_raw}`: {e}"),
        })?;
        if years.last().is_some_and(|&prev| year <= prev) {
            return Err(Error::Schema(format!(
                "years must be strictly increasing, found {year} at row {row}"
            )));
        }
        years.push(year);
        for &(i, v) in &views {
            let cell = parse_cell(record.get(i).unwrap_or(""), row, i + 1)?;
            columns.get_mut(&v).expect("column registered from header").push(cell);
        }
    }
    Ok(LevelTable { years, columns })
}

/// Residuals of every identity whose aggregate and components are all
/// present in a year. A residual is flagged when it exceeds
/// `tolerance · |aggregate|`.
pub fn check_identities(table: &LevelTable, tolerance: f64) -> IdentityReport {
    let mut residuals = Vec::new();
    for (y, &year) in table.years.iter().enumerate() {
        for (aggregate, parts) in IDENTITIES {
            let value = |v: ViewName| table.columns.get(&v).and_then(|c| c[y]);
            let Some(total) = value(aggregate) else { continue };
            let Some(sum) = parts.iter().map(|&p| value(p)).sum::<Option<f64>>() else {
                continue;
            };
            let residual = total - sum;
            residuals.push(IdentityResidual {
                year,
                aggregate,
                residual,
                flagged: residual.abs() > tolerance * total.abs(),
            });
        }
    }
    IdentityReport { residuals }
}

pub fn load_and_validate(path: impl AsRef<Path>, tolerance: f64) -> Result<(LevelTable, IdentityReport)> {
    let table = read_levels(std::fs::File::open(path)?)?;
    let report = check_identities(&table, tolerance);
    Ok((table, report))
}

/// Year-over-year growth in percentage points. `years` starts at the second
/// level year.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTable {
    pub years: Vec<i32>,
    pub columns: BTreeMap<ViewName, Vec<f64>>,
}

/// Replaces each missing entry with the nearest earlier value. Present
/// entries are returned untouched; a leading gap is an error.
pub fn fill_gaps(series: &[Option<f64>], view: ViewName, years: &[i32]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(series.len());
    for (i, v) in series.iter().enumerate() {
        match (v, out.last()) {
            (Some(x), _) => out.push(*x),
            (None, Some(&prev)) => out.push(prev),
            (None, None) => {
                return Err(Error::UnfillableGap {
                    view: view.to_string(),
                    year: years[i],
                })
            }
        }
    }
    Ok(out)
}

pub fn to_growth_rates(levels: &LevelTable) -> Result<GrowthTable> {
    if levels.years.len() < 2 {
        return Err(Error::InvalidParameter(
            "growth rates need at least two years".into(),
        ));
    }
    let years = levels.years[1..].to_vec();
    let mut columns = BTreeMap::new();
    for (&view, series) in &levels.columns {
        let mut raw = Vec::with_capacity(years.len());
        for (y, pair) in series.windows(2).enumerate() {
            raw.push(match (pair[0], pair[1]) {
                (Some(0.0), Some(_)) => {
                    return Err(Error::ZeroBase {
                        view: view.to_string(),
                        year: years[y],
                    })
                }
                (Some(prev), Some(now)) => Some(100.0 * (now - prev) / prev),
                _ => None,
            });
        }
        columns.insert(view, fill_gaps(&raw, view, &years)?);
    }
    Ok(GrowthTable { years, columns })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Ground truths are drawn uniformly from `[lo, hi)`.
    pub truth_range: (f64, f64),
    /// Sign of each view's mean error, in [`ViewName::ALL`] order.
    pub signs: [f64; 13],
    /// Whether the exact GDP_PA view takes part as a source.
    pub include_ground_truth_view: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            truth_range: (0.0, 15.0),
            signs: parse_signs(DEFAULT_SIGNS).expect("default pattern is valid"),
            include_ground_truth_view: false,
        }
    }
}

/// One spec per view with the published error statistics.
pub fn table1_specs(cfg: &SynthConfig) -> Result<Vec<SourceSpec>> {
    ViewName::ALL
        .into_iter()
        .zip(cfg.signs)
        .filter(|(v, _)| cfg.include_ground_truth_view || *v != ViewName::GDP_PA)
        .map(|(v, sign)| {
            let (mean, sd) = v.error_stats();
            SourceSpec::new(v.as_str(), sign * mean, sd)
        })
        .collect()
}

/// `n_questions` synthetic questions with known truth and a complete set
/// of honest answers from every view.
pub fn synthesize_table1(seed: u64, n_questions: usize, cfg: &SynthConfig) -> Result<(ProbeSet, Vec<SourceSpec>)> {
    if n_questions == 0 {
        return Err(Error::InvalidParameter("n_questions must be at least 1".into()));
    }
    let (lo, hi) = cfg.truth_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!("truth range [{lo}, {hi}) is empty")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let width = (n_questions - 1).to_string().len();
    let questions = (0..n_questions)
        .map(|i| {
            let truth = UnifiedView::new(rng.random_range(lo..hi))?;
            Ok(Question::with_truth(format!("q{i:0width$}"), truth))
        })
        .collect::<Result<Vec<_>>>()?;
    let specs = table1_specs(cfg)?;
    let reports = draw_honest_reports(&specs, &questions, derive_seed(seed, 1))?;
    let probes = ProbeSet::new(questions, &reports, TruthMode::KnownTruth)?;
    Ok((probes, specs))
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportRow {
    question_id: String,
    source_id: String,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruthRow {
    question_id: String,
    truth: Option<f64>,
}

fn row_error(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) if matches!(e.kind(), csv::ErrorKind::Deserialize { .. }) => {
            let column = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.field().map_or(0, |f| f as usize + 1),
                _ => 0,
            };
            Error::Parse {
                row: pos.line() as usize,
                column,
                message: e.to_string(),
            }
        }
        _ => Error::Csv(e),
    }
}

pub fn read_reports<R: Read>(reader: R) -> Result<Vec<Report>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<ReportRow>()
        .map(|row| {
            let row = row.map_err(row_error)?;
            Ok(Report::new(row.source_id, row.question_id, UnifiedView::new(row.value)?))
        })
        .collect()
}

/// A blank truth reads as an unknown question.
pub fn read_truths<R: Read>(reader: R) -> Result<Vec<Question>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<TruthRow>()
        .map(|row| {
            let row = row.map_err(row_error)?;
            Ok(match row.truth {
                Some(t) => Question::with_truth(row.question_id, UnifiedView::new(t)?),
                None => Question::unknown(row.question_id),
            })
        })
        .collect()
}

pub fn write_reports<W: Write>(writer: W, reports: &[Report]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in reports {
        wtr.serialize(ReportRow {
            question_id: r.question.to_string(),
            source_id: r.source.to_string(),
            value: r.answer.value(),
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_truths<W: Write>(writer: W, questions: &[Question]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for q in questions {
        wtr.serialize(TruthRow {
            question_id: q.id.to_string(),
            truth: q.ground_truth.map(UnifiedView::value),
        })?;
    }
    wtr.flush()?;
    Ok(())
}
