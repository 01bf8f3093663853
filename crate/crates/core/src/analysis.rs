//! Pattern evaluation, side-lobe and beamwidth measurement, and the Monte
//! Carlo reliability sweep.

use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{
    apply_coupling, check_order, steering_derivative_along, Angle, ArrayGeometry, Axis,
    CouplingModel, Interval, C64,
};
use crate::constraints::{sidelobe_directions, BeamSpec, SampleMode, SidelobeRegion};
use crate::error::{domain, Error, Result};
use crate::reselection::{run_compiled, BeamSet, ReselectionOptions, SynthesisStatus};
use crate::solver::SolverOptions;

/// Two-sided 95% standard-normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Sampled beam response `F = (M·a)ᴴ·w` along one angular coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub angles: Vec<Angle>,
    pub values: Vec<C64>,
    /// `|μ|²`; dB values are relative to it.
    pub reference_gain: f64,
    /// Coordinate swept by the grid; region and beamwidth queries use it.
    pub axis: Axis,
}

impl BeamPattern {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_reference(mut self, reference_gain: f64) -> Result<Self> {
        if !(reference_gain.is_finite() && reference_gain > 0.0) {
            return domain(format!("reference gain must be > 0, got {reference_gain}"));
        }
        self.reference_gain = reference_gain;
        Ok(self)
    }

    /// Sweep coordinate of sample `i`, in degrees.
    pub fn coord(&self, i: usize) -> f64 {
        match self.axis {
            Axis::Azimuth => self.angles[i].az,
            Axis::Elevation => self.angles[i].el,
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.coord(i)).collect()
    }

    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|f| f.norm_sqr()).collect()
    }

    /// `10·log₁₀(|F|² / reference_gain)`.
    pub fn power_db(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|f| 10.0 * (f.norm_sqr() / self.reference_gain).log10())
            .collect()
    }
}

/// Points of a principal cut: the swept coordinate runs over `coords`, the
/// other stays at `fixed`.
pub fn cut_angles(axis: Axis, fixed: f64, coords: &[f64]) -> Vec<Angle> {
    coords
        .iter()
        .map(|&t| match axis {
            Axis::Azimuth => Angle::new(t, fixed),
            Axis::Elevation => Angle::new(fixed, t),
        })
        .collect()
}

/// Dense evaluation at arbitrary directions, swept along azimuth and
/// normalized to unit reference gain.
pub fn beam_pattern(
    w: &DVector<C64>,
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    grid: &[Angle],
) -> Result<BeamPattern> {
    check_order(geom, coupling)?;
    if w.len() != geom.len() {
        return domain(format!("weight length {} does not match array size {}", w.len(), geom.len()));
    }
    // (M·a)ᴴ·w = aᴴ·(M·w) because M is real symmetric
    let mw = apply_coupling(coupling, w.clone());
    let mut values = Vec::with_capacity(grid.len());
    for &angle in grid {
        angle.validate()?;
        let (u, v) = angle.direction_cosines();
        let f = geom
            .positions()
            .iter()
            .zip(mw.iter())
            .fold(C64::new(0.0, 0.0), |acc, (&[x, y], &m)| {
                acc + C64::from_polar(1.0, 2.0 * PI * (x * u + y * v)) * m
            });
        values.push(f);
    }
    Ok(BeamPattern {
        angles: grid.to_vec(),
        values,
        reference_gain: 1.0,
        axis: Axis::Azimuth,
    })
}

/// Pattern along one principal cut.
pub fn beam_pattern_cut(
    w: &DVector<C64>,
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    axis: Axis,
    fixed: f64,
    coords: &[f64],
) -> Result<BeamPattern> {
    let mut p = beam_pattern(w, geom, coupling, &cut_angles(axis, fixed, coords))?;
    p.axis = axis;
    Ok(p)
}

/// Peak side-lobe level over the samples of `pattern` whose sweep coordinate
/// lies in `region`, in dB relative to the reference gain.
pub fn max_sll(pattern: &BeamPattern, region: &[Interval]) -> Result<f64> {
    let peak = (0..pattern.len())
        .filter(|&i| region.iter().any(|r| r.contains(pattern.coord(i))))
        .map(|i| pattern.values[i].norm_sqr())
        .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))));
    match peak {
        Some(p) => Ok(10.0 * (p / pattern.reference_gain).log10()),
        None => domain("side-lobe region does not intersect the pattern grid"),
    }
}

/// Full width between the half-power crossings around the main-lobe peak,
/// linearly interpolated in `|F|²`. The peak must be a local maximum within
/// 2° of `boresight`; coordinates must be increasing.
pub fn beamwidth_3db(pattern: &BeamPattern, boresight: f64) -> Result<f64> {
    let x = pattern.coords();
    let p = pattern.power();
    if x.windows(2).any(|s| s[1] <= s[0]) {
        return domain("beamwidth needs a strictly increasing grid");
    }
    let peak = (0..x.len())
        .filter(|&i| (x[i] - boresight).abs() <= 2.0)
        .max_by(|&a, &b| p[a].total_cmp(&p[b]))
        .ok_or_else(|| Error::Measurement("no grid point within 2° of boresight".into()))?;
    let is_local_max = (peak == 0 || p[peak - 1] <= p[peak])
        && (peak + 1 == x.len() || p[peak + 1] <= p[peak]);
    if !is_local_max || p[peak] == 0.0 {
        return Err(Error::Measurement("no main-lobe peak near boresight".into()));
    }
    let half = 0.5 * p[peak];
    let cross = |i: usize, j: usize| x[i] + (half - p[i]) * (x[j] - x[i]) / (p[j] - p[i]);
    let missing = || Error::Measurement("half-power crossing outside the grid".into());
    let left = (0..peak)
        .rev()
        .find(|&i| p[i] < half)
        .map(|i| cross(i, i + 1))
        .ok_or_else(missing)?;
    let right = (peak + 1..x.len())
        .find(|&i| p[i] < half)
        .map(|i| cross(i - 1, i))
        .ok_or_else(missing)?;
    Ok(right - left)
}

/// Beamwidth along a principal cut on a 10⁻³-degree grid, widening the
/// window until both crossings are inside it.
pub fn main_lobe_beamwidth(
    w: &DVector<C64>,
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    axis: Axis,
    boresight: Angle,
) -> Result<f64> {
    let (center, fixed) = match axis {
        Axis::Azimuth => (boresight.az, boresight.el),
        Axis::Elevation => (boresight.el, boresight.az),
    };
    let mut half_span = 1.0;
    loop {
        let lo = (center - half_span).max(-90.0);
        let hi = (center + half_span).min(90.0);
        let n = ((hi - lo) / 1e-3).round() as usize + 1;
        let coords = crate::array::linspace(lo, hi, n);
        let pattern = beam_pattern_cut(w, geom, coupling, axis, fixed, &coords)?;
        match beamwidth_3db(&pattern, center) {
            Err(Error::Measurement(_)) if lo > -90.0 || hi < 90.0 => half_span *= 2.0,
            other => return other,
        }
    }
}

/// `(M·∂a/∂θ)ᴴ·w` along `axis`, per degree.
pub fn slope_at(
    w: &DVector<C64>,
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    angle: Angle,
    axis: Axis,
) -> Result<C64> {
    check_order(geom, coupling)?;
    if w.len() != geom.len() {
        return domain(format!("weight length {} does not match array size {}", w.len(), geom.len()));
    }
    let da = steering_derivative_along(geom, angle, axis)?;
    let mw = apply_coupling(coupling, w.clone());
    Ok(da.iter().zip(mw.iter()).map(|(d, m)| d.conj() * m).sum())
}

/// Central finite difference of the pattern along `axis`, step `h` degrees.
pub fn slope_finite_difference(
    w: &DVector<C64>,
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    angle: Angle,
    axis: Axis,
    h: f64,
) -> Result<C64> {
    let shift = |s: f64| match axis {
        Axis::Azimuth => Angle::new(angle.az + s, angle.el),
        Axis::Elevation => Angle::new(angle.az, angle.el + s),
    };
    let f = beam_pattern(w, geom, coupling, &[shift(h), shift(-h)])?;
    Ok((f.values[0] - f.values[1]) / (2.0 * h))
}

/// Side-lobe levels of one region, on the constraint grid and on a denser
/// verification grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSll {
    pub level_db: f64,
    pub on_grid_db: f64,
    pub off_grid_db: f64,
}

/// The region resampled `density` times more finely. Grid-mode regions keep
/// every original sample.
pub fn densified(region: &SidelobeRegion, density: usize) -> SidelobeRegion {
    let mut out = region.clone();
    out.samples = match region.mode {
        SampleMode::Grid => (region.samples.max(2) - 1) * density + 1,
        SampleMode::Spread => region.samples * density,
    };
    out
}

/// Measures every side-lobe region of `spec` at the constraint samples and
/// on a grid `density` times denser (principal cuts for planar arrays).
pub fn sidelobe_levels(
    w: &DVector<C64>,
    spec: &BeamSpec,
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    density: usize,
) -> Result<Vec<RegionSll>> {
    if density < 1 {
        return domain("verification density must be >= 1");
    }
    let peak_db = |region: &SidelobeRegion| -> Result<f64> {
        let dirs = sidelobe_directions(spec, geom, region)?;
        let p = beam_pattern(w, geom, coupling, &dirs)?.with_reference(spec.reference_gain())?;
        p.power_db()
            .into_iter()
            .reduce(f64::max)
            .ok_or_else(|| Error::Measurement("side-lobe region has no samples".into()))
    };
    spec.sidelobes
        .iter()
        .map(|r| {
            Ok(RegionSll {
                level_db: r.level_db,
                on_grid_db: peak_db(r)?,
                off_grid_db: peak_db(&densified(r, density))?,
            })
        })
        .collect()
}

/// Evenly spaced levels from `start` to `end` inclusive.
pub fn sweep_levels(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && end.is_finite() && step.is_finite()) || step <= 0.0 || end < start {
        return Err(Error::Config(format!(
            "invalid sweep {start}:{end} step {step}; need start <= end and step > 0"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelOutcome {
    pub sll_db: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl LevelOutcome {
    fn new(sll_db: f64, trials: usize, successes: usize) -> Self {
        let (wilson_lo, wilson_hi) = wilson_interval(successes, trials);
        Self {
            sll_db,
            trials,
            successes,
            rate: successes as f64 / trials as f64,
            wilson_lo,
            wilson_hi,
        }
    }
}

/// One trial of the sweep, enough to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sll_db: f64,
    pub trial: usize,
    pub seed: u64,
    pub status: SynthesisStatus,
    pub final_cost: f64,
    pub outer_iterations: usize,
    pub support_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub levels: Vec<LevelOutcome>,
    pub records: Vec<TrialRecord>,
    /// Slot for a comparison method evaluated on the same sweep.
    pub baseline: Option<Vec<LevelOutcome>>,
}

impl MonteCarloReport {
    pub fn sll_levels_db(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.sll_db).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.rate).collect()
    }
}

/// The spec set with every side-lobe region set to `level_db`.
pub fn at_level(specs: &[BeamSpec], level_db: f64) -> Vec<BeamSpec> {
    specs
        .iter()
        .cloned()
        .map(|mut s| {
            for r in &mut s.sidelobes {
                r.level_db = level_db;
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOptions {
    pub trials: usize,
    pub base_seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
}

/// For each level, runs `trials` reselections seeded `base_seed + t` and
/// counts disjoint outcomes. The same seeds are reused at every level.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo(
    specs: &[BeamSpec],
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    sll_sweep_db: &[f64],
    mc: &MonteCarloOptions,
    solver_opts: &SolverOptions,
    opts: &ReselectionOptions,
) -> Result<MonteCarloReport> {
    if mc.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    if sll_sweep_db.is_empty() {
        return Err(Error::Config("sweep has no levels".into()));
    }
    let sets = sll_sweep_db
        .iter()
        .map(|&l| BeamSet::compile(&at_level(specs, l), geom, coupling))
        .collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(mc.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let jobs: Vec<(usize, usize)> = (0..sets.len())
        .flat_map(|l| (0..mc.trials).map(move |t| (l, t)))
        .collect();
    let records = pool.install(|| {
        jobs.par_iter()
            .map(|&(l, t)| {
                let seed = mc.base_seed.wrapping_add(t as u64);
                let trial_opts = ReselectionOptions {
                    seed,
                    ..opts.clone()
                };
                let r = run_compiled(&sets[l], solver_opts, &trial_opts)?;
                Ok(TrialRecord {
                    sll_db: sll_sweep_db[l],
                    trial: t,
                    seed,
                    status: r.status,
                    final_cost: r.final_cost(),
                    outer_iterations: r.outer_iterations,
                    support_sizes: r.support_sizes(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let levels = sll_sweep_db
        .iter()
        .enumerate()
        .map(|(l, &db)| {
            let successes = records[l * mc.trials..(l + 1) * mc.trials]
                .iter()
                .filter(|r| r.status == SynthesisStatus::Disjoint)
                .count();
            LevelOutcome::new(db, mc.trials, successes)
        })
        .collect();
    Ok(MonteCarloReport {
        levels,
        records,
        baseline: None,
    })
}
