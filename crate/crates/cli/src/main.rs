use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ciuv::dataset::{
    load_and_validate, parse_signs, read_reports, read_truths, synthesize_table1, write_reports, write_truths,
    SynthConfig, DEFAULT_IDENTITY_TOLERANCE, DEFAULT_SIGNS,
};
use ciuv::fusion::{self, ErrorThreshold};
use ciuv::reliability::estimate_profiles;
use ciuv::{ProbeSet, Question, TruthMode, UnifiedView};
use ciuv_cli::output::write_all;
use ciuv_cli::{run_experiment, ScenarioConfig, Sweep};

#[derive(Parser)]
#[command(name = "ciuv", version, about = "Reliability-weighted truth discovery and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the accounting identities of a level table.
    Validate {
        levels: PathBuf,
        /// Relative tolerance on each identity residual.
        #[arg(long, default_value_t = DEFAULT_IDENTITY_TOLERANCE)]
        tolerance: f64,
        /// Exit with status 2 when any identity is flagged.
        #[arg(long)]
        strict: bool,
    },
    /// Fuse answers to unknown questions using the known ones as probes.
    Fuse {
        reports: PathBuf,
        truths: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        e_t: f64,
    },
    /// Write a synthetic answer sheet (reports.csv and truths.csv).
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        n_questions: usize,
        /// Leave the truth of the first N questions blank.
        #[arg(long, default_value_t = 0)]
        hide: usize,
        #[arg(long)]
        include_ground_truth_view: bool,
        #[arg(long, default_value = DEFAULT_SIGNS)]
        signs: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a seeded experiment grid and write its result files.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// A factor and its values, e.g. `mv=3,6,9,12`.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn validate(levels: PathBuf, tolerance: f64, strict: bool) -> Result<ExitCode> {
    let (table, report) = load_and_validate(&levels, tolerance)
        .with_context(|| format!("reading {}", levels.display()))?;
    println!(
        "{} years, {} views, {} identity checks",
        table.years.len(),
        table.columns.len(),
        report.residuals.len()
    );
    for r in report.flagged() {
        println!("flagged: {} {} residual {}", r.year, r.aggregate, r.residual);
    }
    if report.is_clean() {
        println!("all identities hold within {tolerance}");
        Ok(ExitCode::SUCCESS)
    } else if strict {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn fuse(reports: PathBuf, truths: PathBuf, e_t: f64) -> Result<()> {
    let reports = read_reports(fs::File::open(&reports).with_context(|| format!("opening {}", reports.display()))?)?;
    let questions = read_truths(fs::File::open(&truths).with_context(|| format!("opening {}", truths.display()))?)?;
    let (known, unknown): (Vec<Question>, Vec<Question>) =
        questions.into_iter().partition(|q| q.ground_truth.is_some());
    if unknown.is_empty() {
        bail!("every question has a truth; leave some blank to estimate them");
    }
    let probes = if known.is_empty() {
        ProbeSet::new(unknown.clone(), &reports, TruthMode::ProxyMean)?
    } else {
        ProbeSet::new(known, &reports, TruthMode::KnownTruth)?
    };
    let profiles = estimate_profiles(&probes)?;
    let targets = ProbeSet::new(unknown, &reports, TruthMode::ProxyMean)?;
    if targets.sources() != probes.sources() {
        bail!("probe and target questions are answered by different sources");
    }
    let e_t = ErrorThreshold::new(e_t)?;

    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "question_id,estimate,confidence,mu_star,sigma2_star")?;
    for (q, question) in targets.questions().iter().enumerate() {
        let views: Vec<UnifiedView> = (0..targets.sources().len())
            .map(|s| UnifiedView::new(targets.answer(s, q)))
            .collect::<ciuv::Result<_>>()?;
        let est = fusion::estimate(&views, &profiles, e_t)?;
        writeln!(out, "{},{},{},{},{}", question.id, est.u_star, est.confidence, est.mu_star, est.sigma2_star)?;
    }
    out.flush()?;
    let weights = fusion::ciuv_weights(&profiles)?;
    for (p, w) in profiles.iter().zip(weights.as_slice()) {
        eprintln!("{}: weight {w:.6} mu {:.6} sigma2 {:.6}", p.source, p.mu, p.sigma2);
    }
    Ok(())
}

fn synth(
    seed: u64,
    n_questions: usize,
    hide: usize,
    include_ground_truth_view: bool,
    signs: &str,
    out: PathBuf,
) -> Result<()> {
    let cfg = SynthConfig {
        signs: parse_signs(signs)?,
        include_ground_truth_view,
        ..SynthConfig::default()
    };
    let (probes, _) = synthesize_table1(seed, n_questions, &cfg)?;
    fs::create_dir_all(&out)?;
    let questions: Vec<Question> = probes
        .questions()
        .iter()
        .enumerate()
        .map(|(i, q)| if i < hide { Question::unknown(q.id.clone()) } else { q.clone() })
        .collect();
    write_reports(BufWriter::new(fs::File::create(out.join("reports.csv"))?), &probes.reports())?;
    write_truths(BufWriter::new(fs::File::create(out.join("truths.csv"))?), &questions)?;
    println!("wrote {} questions to {}", n_questions, out.display());
    Ok(())
}

fn experiment(config: PathBuf, sweep: Option<String>, out: PathBuf) -> Result<()> {
    let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = ScenarioConfig::parse(&text)?;
    let sweep: Option<Sweep> = sweep.as_deref().map(str::parse).transpose()?;
    let exp = run_experiment(&cfg, sweep.as_ref())?;
    write_all(&out, &exp)?;
    println!("{:<12} {:>10} {:>12} {:>12}", "sweep", "method", "mean_error", "std_dev");
    for row in &exp.rows {
        let point = match (&row.sweep_factor, &row.sweep_value) {
            (Some(f), Some(v)) => format!("{f}={v}"),
            _ => "-".to_owned(),
        };
        println!("{:<12} {:>10} {:>12.4} {:>12.4}", point, row.method, row.mean_error, row.std_dev);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { levels, tolerance, strict } => validate(levels, tolerance, strict),
        Command::Fuse { reports, truths, e_t } => fuse(reports, truths, e_t).map(|_| ExitCode::SUCCESS),
        Command::Synth {
            seed,
            n_questions,
            hide,
            include_ground_truth_view,
            signs,
            out,
        } => synth(seed, n_questions, hide, include_ground_truth_view, &signs, out).map(|_| ExitCode::SUCCESS),
        Command::Experiment { config, sweep, out } => experiment(config, sweep, out).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
