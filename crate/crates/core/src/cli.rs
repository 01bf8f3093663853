//! The `synth`, `analyze` and `montecarlo` commands.
//!
//! Exit codes: 0 disjoint (or success for `analyze` / `montecarlo`),
//! 1 usage or config error, 2 converged to a non-zero overlap (or iteration
//! cap), 3 infeasible subproblem.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    beam_pattern_cut, main_lobe_beamwidth, monte_carlo, sidelobe_levels, slope_at, sweep_levels,
    MonteCarloOptions, MonteCarloReport,
};
use crate::array::{linspace, Axis, C64};
use crate::config::{Loaded, SynthesisConfig};
use crate::constraints::{check_feasibility, compile, BeamKind, BeamSpec};
use crate::error::{Error, Result};
use crate::io::{
    join, read_csv, read_weights, status_name, write_cost_history, write_csv, write_montecarlo,
    write_pattern, write_seed_ledger, write_weights, Header, MetricRow, WeightRow,
};
use crate::reselection::{relax_until_disjoint, run, SynthesisResult, SynthesisStatus};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MONOBEAM_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "monobeam-out";

#[derive(Debug, Parser)]
#[command(name = "monobeam", version, about = "Disjoint-subarray monopulse beam synthesis")]
pub struct Cli {
    /// Output directory; overrides `[output] directory` in the config.
    #[arg(long, short, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,

    /// Log more (-v info, -vv debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the reselection loop and write weights, cost history and summary.
    Synth { config: PathBuf },
    /// Evaluate weight files against the config: patterns and metrics.
    Analyze {
        config: PathBuf,
        /// One weights file per beam, in beam order.
        #[arg(required = true)]
        weights: Vec<PathBuf>,
    },
    /// Success rate of the reselection loop over a side-lobe-level sweep.
    Montecarlo {
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        sll_start: f64,
        #[arg(long, allow_negative_numbers = true)]
        sll_end: f64,
        #[arg(long)]
        sll_step: f64,
        #[arg(long)]
        trials: usize,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Base seed; trial t uses seed + t. Defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

pub fn exit_code(status: SynthesisStatus) -> i32 {
    match status {
        SynthesisStatus::Disjoint => 0,
        SynthesisStatus::ConvergedNonzero | SynthesisStatus::IterationCap => 2,
        SynthesisStatus::SubproblemFailure => 3,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Synth { config } => {
            let loaded = SynthesisConfig::load(config)?;
            let dir = output_dir(cli.out.as_deref(), &loaded)?;
            let outcome = cmd_synth(&loaded, &dir)?;
            println!(
                "status={} sizes={} uncovered={} cost={:e} outer={} elapsed={:.2}s out={}",
                status_name(outcome.summary_status()),
                join(&outcome.result.support_sizes()),
                outcome.result.uncovered(),
                outcome.result.final_cost(),
                outcome.result.outer_iterations,
                outcome.result.elapsed.as_secs_f64(),
                dir.display()
            );
            Ok(exit_code(outcome.result.status))
        }
        Command::Analyze { config, weights } => {
            let loaded = SynthesisConfig::load(config)?;
            let dir = output_dir(cli.out.as_deref(), &loaded)?;
            let metrics = cmd_analyze(&loaded, weights, &dir)?;
            for m in metrics.iter().filter(|m| m.metric.starts_with("feasible")) {
                println!("beam {}: feasible={}", m.beam, m.value);
            }
            Ok(0)
        }
        Command::Montecarlo {
            config,
            sll_start,
            sll_end,
            sll_step,
            trials,
            jobs,
            seed,
        } => {
            let loaded = SynthesisConfig::load(config)?;
            let dir = output_dir(cli.out.as_deref(), &loaded)?;
            let levels = sweep_levels(*sll_start, *sll_end, *sll_step)?;
            let mc = MonteCarloOptions {
                trials: *trials,
                base_seed: seed.unwrap_or(loaded.seed()),
                jobs: *jobs,
            };
            let report = cmd_montecarlo(&loaded, &levels, &mc, &dir)?;
            for l in &report.levels {
                println!(
                    "sll={:.3} dB rate={:.3} ({}/{}) wilson=[{:.3}, {:.3}]",
                    l.sll_db, l.rate, l.successes, l.trials, l.wilson_lo, l.wilson_hi
                );
            }
            Ok(0)
        }
    }
}

/// `--out` / environment, then the config, then `monobeam-out`.
fn output_dir(flag: Option<&Path>, loaded: &Loaded) -> Result<PathBuf> {
    let dir = flag
        .map(Path::to_path_buf)
        .or_else(|| loaded.config.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Metadata carried by synthesized weights files so `analyze` can rebuild
/// the exact constraint set that was solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeightsMeta {
    #[serde(default)]
    relaxed_by_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    pub exit_code: i32,
    pub outer_iterations: usize,
    pub final_cost: f64,
    pub support_sizes: String,
    pub uncovered: usize,
    pub shared: String,
    pub relaxed_by_db: f64,
    pub relax_attempts: usize,
    pub all_feasible: bool,
    pub failed_beam: Option<usize>,
    pub certificate_valid: Option<bool>,
    pub incumbent_kept: usize,
    pub solver_iterations: u64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct SynthOutcome {
    pub result: SynthesisResult,
    pub relaxed_by_db: f64,
    pub relax_attempts: usize,
    pub weight_files: Vec<PathBuf>,
    pub summary: RunSummary,
}

impl SynthOutcome {
    pub fn summary_status(&self) -> SynthesisStatus {
        self.result.status
    }
}

/// Runs the synthesis described by `loaded` and writes `weights-<k>.csv`,
/// `cost_history.csv` and `summary.csv` into `dir`.
pub fn cmd_synth(loaded: &Loaded, dir: &Path) -> Result<SynthOutcome> {
    let opts = loaded.reselection_options()?;
    let solver = &loaded.config.solver;
    let (result, relaxed_by_db, relax_attempts) = match loaded.config.relaxation {
        Some(r) => {
            let out = relax_until_disjoint(
                &loaded.specs,
                &loaded.geometry,
                &loaded.coupling,
                solver,
                &opts,
                r.step_db,
                r.max_attempts,
            )?;
            info!("relaxed by {} dB after {} attempts", out.relaxed_by_db, out.attempts);
            (out.result, out.relaxed_by_db, out.attempts)
        }
        None => (
            run(&loaded.specs, &loaded.geometry, &loaded.coupling, solver, &opts)?,
            0.0,
            1,
        ),
    };

    let header = Header::new("weights", &loaded.hash, loaded.seed());
    let mut weight_files = Vec::new();
    for (k, w) in result.weights.iter().enumerate() {
        let path = dir.join(format!("weights-{}.csv", k + 1));
        let mut h = header.for_beam(k + 1);
        h.extra = Some(serde_json::to_value(WeightsMeta { relaxed_by_db })?);
        write_weights(&path, &h, &loaded.geometry, w)?;
        weight_files.push(path);
    }
    let mut h = header.clone();
    h.file = "cost_history".into();
    write_cost_history(&dir.join("cost_history.csv"), &h, &result)?;

    let summary = RunSummary {
        status: status_name(result.status).into(),
        exit_code: exit_code(result.status),
        outer_iterations: result.outer_iterations,
        final_cost: result.final_cost(),
        support_sizes: join(&result.support_sizes()),
        uncovered: result.uncovered(),
        shared: join(&result.final_shared()),
        relaxed_by_db,
        relax_attempts,
        all_feasible: result.feasibility.iter().all(|f| f.pass),
        failed_beam: result.failed_beam.map(|k| k + 1),
        certificate_valid: result
            .certificate
            .map(|c| c.is_valid(loaded.config.solver.tol_ineq.max(1e-6))),
        incumbent_kept: result.incumbent_kept,
        solver_iterations: result.solver_iterations,
        elapsed_s: result.elapsed.as_secs_f64(),
    };
    h.file = "summary".into();
    write_csv(&dir.join("summary.csv"), &h, std::slice::from_ref(&summary))?;
    if loaded.config.output.json {
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(SynthOutcome {
        result,
        relaxed_by_db,
        relax_attempts,
        weight_files,
        summary,
    })
}

/// Weights and the side-lobe relaxation they were synthesized under.
fn load_weight_files(loaded: &Loaded, files: &[PathBuf]) -> Result<(Vec<DVector<C64>>, f64)> {
    if files.len() != loaded.specs.len() {
        return Err(Error::Config(format!(
            "expected {} weights files (one per beam), got {}",
            loaded.specs.len(),
            files.len()
        )));
    }
    let mut relax = None;
    let mut ws = Vec::new();
    for f in files {
        let w = read_weights(f)?;
        if w.len() != loaded.geometry.len() {
            return Err(Error::Domain(format!(
                "{} has {} elements, the array has {}",
                f.display(),
                w.len(),
                loaded.geometry.len()
            )));
        }
        let (header, _): (Option<Header>, Vec<WeightRow>) = read_csv(f)?;
        let meta: Option<WeightsMeta> = header
            .and_then(|h| h.extra)
            .map(serde_json::from_value)
            .transpose()?;
        let r = meta.map_or(0.0, |m| m.relaxed_by_db);
        match relax {
            Some(prev) if prev != r => {
                return Err(Error::Config(
                    "weights files were synthesized under different relaxations".into(),
                ))
            }
            _ => relax = Some(r),
        }
        ws.push(w);
    }
    Ok((ws, relax.unwrap_or(0.0)))
}

fn beam_metrics(
    loaded: &Loaded,
    beam: usize,
    spec: &BeamSpec,
    w: &DVector<C64>,
) -> Result<Vec<MetricRow>> {
    let (geom, coupling) = (&loaded.geometry, &loaded.coupling);
    let mut rows = Vec::new();
    let mut push = |metric: String, value: f64| rows.push(MetricRow { beam, metric, value });

    let f0 = crate::analysis::beam_pattern(w, geom, coupling, &[spec.boresight])?.values[0];
    push("boresight_re".into(), f0.re);
    push("boresight_im".into(), f0.im);
    push("boresight_abs".into(), f0.norm());

    let slope = slope_at(w, geom, coupling, spec.boresight, spec.slope_axis)?;
    push("slope_re_per_deg".into(), slope.re);
    push("slope_im_per_deg".into(), slope.im);
    push("slope_re_per_rad".into(), slope.re * 180.0 / PI);
    push("slope_im_per_rad".into(), slope.im * 180.0 / PI);

    if spec.kind == BeamKind::Sum {
        let axes: &[Axis] = if geom.is_linear() {
            &[Axis::Azimuth]
        } else {
            &[Axis::Azimuth, Axis::Elevation]
        };
        for &axis in axes {
            let bw = main_lobe_beamwidth(w, geom, coupling, axis, spec.boresight).unwrap_or(f64::NAN);
            push(format!("beamwidth_{}_deg", axis_name(axis)), bw);
        }
    }

    let slls = sidelobe_levels(w, spec, geom, coupling, loaded.config.output.verification_density)?;
    for (r, s) in slls.iter().enumerate() {
        push(format!("sll_limit_db_r{}", r + 1), s.level_db);
        push(format!("sll_on_grid_db_r{}", r + 1), s.on_grid_db);
        push(format!("sll_off_grid_db_r{}", r + 1), s.off_grid_db);
    }
    if !slls.is_empty() {
        let margin = |f: fn(&crate::analysis::RegionSll) -> f64| {
            slls.iter().map(|s| f(s) - s.level_db).fold(f64::NEG_INFINITY, f64::max)
        };
        push("sll_on_grid_margin_db".into(), margin(|s| s.on_grid_db));
        push("sll_off_grid_margin_db".into(), margin(|s| s.off_grid_db));
    }

    let sys = compile(spec, geom, coupling)?;
    let opts = &loaded.config.solver;
    let fr = check_feasibility(w, &sys, opts.tol_eq, opts.tol_ineq);
    push("eq_residual".into(), fr.max_eq_residual);
    push("ineq_violation".into(), fr.max_ineq_violation);
    push("feasible".into(), f64::from(u8::from(fr.pass)));
    Ok(rows)
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Azimuth => "az",
        Axis::Elevation => "el",
    }
}

/// Writes `pattern-<k>.csv` (linear) or `pattern-<k>-az.csv` and
/// `pattern-<k>-el.csv` (planar principal cuts), plus `metrics.csv`.
pub fn cmd_analyze(loaded: &Loaded, weight_files: &[PathBuf], dir: &Path) -> Result<Vec<MetricRow>> {
    let (ws, relaxed_by_db) = load_weight_files(loaded, weight_files)?;
    let coords = linspace(-90.0, 90.0, loaded.config.output.pattern_points);
    let header = Header::new("pattern", &loaded.hash, loaded.seed());
    let mut metrics = Vec::new();
    for (k, (spec, w)) in loaded.specs.iter().zip(&ws).enumerate() {
        let spec = spec.relaxed(relaxed_by_db);
        let gain = spec.reference_gain();
        let h = header.for_beam(k + 1);
        if loaded.geometry.is_linear() {
            let p = beam_pattern_cut(w, &loaded.geometry, &loaded.coupling, Axis::Azimuth, 0.0, &coords)?
                .with_reference(gain)?;
            write_pattern(&dir.join(format!("pattern-{}.csv", k + 1)), &h, &p)?;
        } else {
            for (axis, fixed) in [
                (Axis::Azimuth, spec.boresight.el),
                (Axis::Elevation, spec.boresight.az),
            ] {
                let p = beam_pattern_cut(w, &loaded.geometry, &loaded.coupling, axis, fixed, &coords)?
                    .with_reference(gain)?;
                let name = format!("pattern-{}-{}.csv", k + 1, axis_name(axis));
                write_pattern(&dir.join(name), &h, &p)?;
            }
        }
        metrics.extend(beam_metrics(loaded, k + 1, &spec, w)?);
    }
    let mut h = header;
    h.file = "metrics".into();
    write_csv(&dir.join("metrics.csv"), &h, &metrics)?;
    if loaded.config.output.json {
        std::fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&metrics)?)?;
    }
    Ok(metrics)
}

/// Runs the sweep and writes `montecarlo.csv` and the per-trial seed ledger
/// `seeds.csv`.
pub fn cmd_montecarlo(
    loaded: &Loaded,
    levels: &[f64],
    mc: &MonteCarloOptions,
    dir: &Path,
) -> Result<MonteCarloReport> {
    let report = monte_carlo(
        &loaded.specs,
        &loaded.geometry,
        &loaded.coupling,
        levels,
        mc,
        &loaded.config.solver,
        &loaded.reselection_options()?,
    )?;
    let header = Header::new("montecarlo", &loaded.hash, mc.base_seed);
    write_montecarlo(&dir.join("montecarlo.csv"), &header, &report)?;
    let mut h = header;
    h.file = "seeds".into();
    write_seed_ledger(&dir.join("seeds.csv"), &h, &report)?;
    Ok(report)
}
