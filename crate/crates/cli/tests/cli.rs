use std::path::{Path, PathBuf};
use std::process::Command;

use ciuv_cli::experiment::mean;
use ciuv_cli::output::{read_results, write_results};
use ciuv_cli::{run_experiment, Method, ScenarioConfig, Sweep};

fn small() -> ScenarioConfig {
    ScenarioConfig { n_trials: 2, mv: 3, mf: 1.2, seed: 7, ..ScenarioConfig::default() }
}

fn ciuv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ciuv"))
}

fn sample_levels() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/sample_levels.csv")
}

#[test]
fn results_round_trip() {
    let exp = run_experiment(&small(), Some(&"if=0.1,0.3".parse().unwrap())).unwrap();
    assert_eq!(exp.rows.len(), 2 * Method::ALL.len());
    let mut buf = Vec::new();
    write_results(&mut buf, &exp.rows).unwrap();
    let back = read_results(buf.as_slice()).unwrap();
    assert_eq!(back, exp.rows);
    for row in &back {
        assert!((row.mean_error - mean(&row.series)).abs() < 1e-9);
        assert_eq!(row.series.len(), row.scenario.n_trials * row.scenario.n_questions);
    }
}

#[test]
fn sweep_points_override_the_base() {
    let exp = run_experiment(&small(), Some(&Sweep::new("mv", &["0", "6"]).unwrap())).unwrap();
    let mvs: Vec<usize> = exp.points.iter().map(|p| p.scenario.mv).collect();
    assert_eq!(mvs, [0, 6]);
    assert!(exp.rows.iter().all(|r| r.sweep_factor.as_deref() == Some("mv")));
}

#[test]
fn same_seed_same_rows() {
    let a = run_experiment(&small(), None).unwrap();
    let b = run_experiment(&small(), None).unwrap();
    assert_eq!(a.rows, b.rows);
    let other = run_experiment(&ScenarioConfig { seed: 8, ..small() }, None).unwrap();
    assert_ne!(a.rows, other.rows);
}

#[test]
fn bad_sweeps_are_rejected() {
    assert!("colour=1,2".parse::<Sweep>().is_err());
    assert!("mv".parse::<Sweep>().is_err());
    assert!("mv=".parse::<Sweep>().is_err());
    let sweep: Sweep = "mv=3,40".parse().unwrap();
    assert!(run_experiment(&small(), Some(&sweep)).is_err());
}

#[test]
fn validate_command() {
    let out = ciuv().arg("validate").arg(sample_levels()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("21 years, 13 views"), "{text}");
    assert!(text.contains("all identities hold"));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.csv");
    let original = std::fs::read_to_string(sample_levels()).unwrap();
    let mut lines: Vec<String> = original.lines().map(str::to_owned).collect();
    // inflate one year's final consumption so its identity no longer holds
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "FCE").unwrap();
    let mut cells: Vec<String> = lines[5].split(',').map(str::to_owned).collect();
    cells[col] = format!("{}", cells[col].parse::<f64>().unwrap() * 1.5);
    lines[5] = cells.join(",");
    std::fs::write(&broken, lines.join("\n") + "\n").unwrap();

    let lenient = ciuv().arg("validate").arg(&broken).output().unwrap();
    assert!(lenient.status.success());
    assert!(String::from_utf8_lossy(&lenient.stdout).contains("flagged"));
    let strict = ciuv().args(["validate", "--strict"]).arg(&broken).output().unwrap();
    assert_eq!(strict.status.code(), Some(2));

    let missing = ciuv().args(["validate", "/nonexistent/levels.csv"]).output().unwrap();
    assert!(!missing.status.success());
}

#[test]
fn synth_then_fuse() {
    let dir = tempfile::tempdir().unwrap();
    let out = ciuv()
        .args(["synth", "--seed", "4", "--n-questions", "30", "--hide", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let fused = ciuv()
        .arg("fuse")
        .arg(dir.path().join("reports.csv"))
        .arg(dir.path().join("truths.csv"))
        .output()
        .unwrap();
    assert!(fused.status.success(), "{}", String::from_utf8_lossy(&fused.stderr));
    let stdout = String::from_utf8(fused.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "question_id,estimate,confidence,mu_star,sigma2_star");
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let confidence: f64 = fields[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&confidence));
    }
    // one weight line per participating view
    assert_eq!(String::from_utf8_lossy(&fused.stderr).lines().count(), 12);
}

#[test]
fn experiment_command_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.conf");
    std::fs::write(&config, "# small grid\nn_trials = 2\nmf = 1.4\nseed = 11\n").unwrap();
    let out = ciuv()
        .args(["experiment", "--config"])
        .arg(&config)
        .args(["--sweep", "mv=3,6", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_results(std::fs::File::open(dir.path().join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.scenario.mf == 1.4 && r.scenario.seed == 11));
    let trajectory = std::fs::read_to_string(dir.path().join("trajectory.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(trajectory.lines().next().unwrap()).unwrap();
    assert_eq!(first["sweep_factor"], "mv");
    assert_eq!(first["iteration"], 1);
    assert!(dir.path().join("plotdata/error_vs_mv__CIUV.csv").exists());
    assert!(dir.path().join("plotdata/cost_vs_error__mv_3.csv").exists());

    std::fs::write(&config, "bogus_key = 1\n").unwrap();
    let bad = ciuv().args(["experiment", "--config"]).arg(&config).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bogus_key"));
}
