mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use monobeam::io::{read_csv, MetricRow, PatternRow};
use monobeam::analysis::LevelOutcome;

fn monobeam(args: &[&str], out: &Path) -> Output {
    Command::new(common::bin())
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("MONOBEAM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    common::config_dir().join(name).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn weight_paths(dir: &Path, k: usize) -> Vec<String> {
    (1..=k).map(|i| dir.join(format!("weights-{i}.csv")).display().to_string()).collect()
}

fn metric(rows: &[MetricRow], beam: usize, name: &str) -> f64 {
    rows.iter()
        .find(|r| r.beam == beam && r.metric == name)
        .unwrap_or_else(|| panic!("missing metric {name} for beam {beam}"))
        .value
}

const TWO_BEAM_RHO0: &str = r#"
[geometry]
kind = "linear"
n = 8

[coupling]
rho = 0.0

[[beams]]
kind = "sum"

[[beams.sidelobes]]
intervals = ["[-90, -30]", "[30, 90]"]
samples = 61
level_db = -3.0

[[beams]]
kind = "difference"
slope = -2.0

[[beams.sidelobes]]
intervals = ["[-90, -40]", "[40, 90]"]
samples = 61
level_db = -3.0
"#;

#[test]
fn synth_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = monobeam(&["synth", &config("tiny-16.toml")], d.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["weights-1.csv", "weights-2.csv", "cost_history.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn infeasible_level_exits_3_with_valid_certificate() {
    let d = tempfile::tempdir().unwrap();
    let o = monobeam(&["synth", &config("infeasible-10.toml")], d.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.path().join("summary.csv")).unwrap();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let head = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    let field = |name: &str| row[head.iter().position(|h| h == name).unwrap()].to_string();
    assert_eq!(field("status"), "subproblem_failure");
    assert_eq!(field("failed_beam"), "1");
    assert_eq!(field("certificate_valid"), "true");
}

#[test]
fn single_beam_config_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let text = TWO_BEAM_RHO0.split("[[beams]]\nkind = \"difference\"").next().unwrap();
    let cfg = write_config(d.path(), text);
    let o = monobeam(&["synth", &cfg], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 2 beams"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), &TWO_BEAM_RHO0.replace("n = 8", "n = 8\nbogus_key = 1"));
    let o = monobeam(&["synth", &cfg], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus_key"), "{}", stderr(&o));
}

#[test]
fn analyze_rejects_weights_of_the_wrong_length() {
    let d = tempfile::tempdir().unwrap();
    let o = monobeam(&["synth", &config("tiny-16.toml")], d.path());
    assert_eq!(o.status.code(), Some(0));
    let mut args = vec!["analyze".to_string(), config("desk-40.toml")];
    args.extend(weight_paths(d.path(), 2));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = monobeam(&args, d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("elements"), "{}", stderr(&o));
}

#[test]
fn invalid_sweep_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    for (start, end, step) in [("-10", "-12", "0.5"), ("-12", "-10", "0"), ("-12", "-10", "-1")] {
        let o = monobeam(
            &["montecarlo", &config("tiny-16.toml"), "--sll-start", start, "--sll-end", end,
              "--sll-step", step, "--trials", "1"],
            d.path(),
        );
        assert_eq!(o.status.code(), Some(1), "{start}:{end}:{step}");
    }
}

fn sweep(cfg: &str, start: &str, end: &str, step: &str, trials: &str, dir: &Path) -> Vec<LevelOutcome> {
    let o = monobeam(
        &["montecarlo", cfg, "--sll-start", start, "--sll-end", end, "--sll-step", step,
          "--trials", trials],
        dir,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    read_csv(&dir.join("montecarlo.csv")).unwrap().1
}

#[test]
fn one_trial_gives_one_row() {
    let d = tempfile::tempdir().unwrap();
    let rows = sweep(&config("tiny-16.toml"), "-10", "-10", "1", "1", d.path());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].trials, 1);
    let (_, seeds): (_, Vec<monobeam::io::SeedRow>) = read_csv(&d.path().join("seeds.csv")).unwrap();
    assert_eq!(seeds.len(), 1);
}

#[test]
fn zero_db_level_always_succeeds() {
    let d = tempfile::tempdir().unwrap();
    let rows = sweep(&config("tiny-16.toml"), "0", "0", "1", "5", d.path());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].rate, 1.0);
}

#[test]
fn sweep_includes_both_ends() {
    let d = tempfile::tempdir().unwrap();
    let rows = sweep(&config("tiny-16.toml"), "-16.9", "-16.7", "0.02", "1", d.path());
    assert_eq!(rows.len(), 11);
    assert!((rows[0].sll_db + 16.9).abs() < 1e-9);
    assert!((rows[10].sll_db + 16.7).abs() < 1e-9);
}

#[test]
fn analyze_after_synth_reports_feasible_beams() {
    let d = tempfile::tempdir().unwrap();
    let o = monobeam(&["synth", &config("tiny-16.toml")], d.path());
    assert_eq!(o.status.code(), Some(0));
    let mut args = vec!["analyze".to_string(), config("tiny-16.toml")];
    args.extend(weight_paths(d.path(), 2));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = monobeam(&args, d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let (_, m): (_, Vec<MetricRow>) = read_csv(&d.path().join("metrics.csv")).unwrap();
    for beam in [1, 2] {
        assert_eq!(metric(&m, beam, "feasible"), 1.0);
        assert!(metric(&m, beam, "sll_on_grid_margin_db") <= 1e-6);
    }
    assert!((metric(&m, 1, "boresight_abs") - 1.0).abs() < 1e-6);
    assert!(metric(&m, 2, "boresight_abs") < 1e-6);
    assert!((metric(&m, 2, "slope_re_per_rad") + 12.0).abs() < 1e-4);

    for entry in std::fs::read_dir(d.path()).unwrap() {
        let path: PathBuf = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let text = std::fs::read_to_string(&path).unwrap();
            assert!(text.starts_with("# {"), "{} lacks the metadata line", path.display());
        }
    }
}

#[test]
fn one_hot_weights_give_a_flat_pattern() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), TWO_BEAM_RHO0);
    let mut files = Vec::new();
    for k in 1..=2 {
        let mut text = String::from("index,x,y,re,im,abs,support\n");
        for i in 0..8 {
            let v = if i == 3 * k - 1 { 1.0 } else { 0.0 };
            text += &format!("{i},{},0,{v},0,{v},{}\n", i as f64 * 0.5, v as u8);
        }
        let p = d.path().join(format!("w{k}.csv"));
        std::fs::write(&p, text).unwrap();
        files.push(p.display().to_string());
    }
    let o = monobeam(&["analyze", &cfg, &files[0], &files[1]], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows): (_, Vec<PatternRow>) = read_csv(&d.path().join("pattern-1.csv")).unwrap();
    assert_eq!(rows.len(), 18001);
    assert!(rows.iter().all(|r| r.db.abs() < 1e-9));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(common::bin())
        .args(["synth", &config("tiny-16.toml")])
        .env("MONOBEAM_OUT_DIR", d.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(d.path().join("weights-1.csv").exists());
}

#[test]
fn desk_scale_success_rate_rises_with_level() {
    let d = tempfile::tempdir().unwrap();
    let rows = sweep(&config("desk-40.toml"), "-16.5", "-15", "0.5", "4", d.path());
    let rates: Vec<f64> = rows.iter().map(|r| r.rate).collect();
    assert!(rates.windows(2).all(|p| p[1] >= p[0]), "{rates:?}");
    assert_eq!(rates.last(), Some(&1.0));
}
