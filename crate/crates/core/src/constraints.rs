//! Per-beam specifications and their compiled convex constraint systems.
//!
//! A beam value is `F(θ) = (M·a(θ))ᴴ·w`. A sum beam fixes `F(θ₀) = μ`; a
//! difference beam fixes `F(θ₀) = 0` and `∂F/∂θ(θ₀) = μ·s`. Both bound
//! `|F(θ)|² ≤ |μ|²·10^(level/10)` at every sampled side-lobe angle.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::array::{
    angle_grid, check_order, effective_derivative, effective_response, linspace, Angle,
    ArrayGeometry, Axis, CouplingModel, Interval, C64,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamKind {
    Sum,
    Difference,
}

/// Unit of the difference-beam slope `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeUnit {
    #[default]
    PerDegree,
    PerRadian,
}

impl SlopeUnit {
    /// Factor converting a slope in this unit to per-degree.
    pub fn to_per_degree(self) -> f64 {
        match self {
            SlopeUnit::PerDegree => 1.0,
            SlopeUnit::PerRadian => std::f64::consts::PI / 180.0,
        }
    }
}

/// How side-lobe intervals are turned into sample angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// `samples` points spread evenly over the intervals themselves.
    #[default]
    Spread,
    /// `samples` points evenly over [-90, 90]; those inside the intervals
    /// are kept.
    Grid,
}

/// Where planar-array side-lobe samples are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneSampling {
    /// Azimuth sweep at the boresight elevation plus elevation sweep at the
    /// boresight azimuth.
    #[default]
    PrincipalCuts,
    /// Principal cuts plus every (az, el) pair drawn from the sampled set.
    FullPlane,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidelobeRegion {
    pub intervals: Vec<Interval>,
    pub samples: usize,
    pub level_db: f64,
    #[serde(default)]
    pub mode: SampleMode,
}

impl SidelobeRegion {
    pub fn new(intervals: Vec<Interval>, samples: usize, level_db: f64) -> Self {
        Self {
            intervals,
            samples,
            level_db,
            mode: SampleMode::Spread,
        }
    }

    pub fn with_mode(mut self, mode: SampleMode) -> Self {
        self.mode = mode;
        self
    }

    /// Symmetric region `[start, 90] ∪ [-90, -start]`.
    pub fn symmetric(start: f64, samples: usize, level_db: f64) -> Self {
        Self::new(
            vec![Interval::closed(-90.0, -start), Interval::closed(start, 90.0)],
            samples,
            level_db,
        )
    }

    /// Sample angles (one coordinate) in ascending order.
    pub fn sample_angles(&self) -> Result<Vec<f64>> {
        match self.mode {
            SampleMode::Spread => angle_grid(&self.intervals, self.samples),
            SampleMode::Grid => {
                // validates the intervals
                angle_grid(&self.intervals, 1)?;
                Ok(linspace(-90.0, 90.0, self.samples)
                    .into_iter()
                    .filter(|&x| self.intervals.iter().any(|iv| iv.contains(x)))
                    .collect())
            }
        }
    }
}

/// Constraint description for one beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamSpec {
    pub kind: BeamKind,
    pub boresight: Angle,
    /// Boresight gain `μ` of the sum beam; the slope of a difference beam is
    /// `μ·s`. Side-lobe levels are relative to `|μ|²`.
    pub gain: C64,
    pub slope: Option<f64>,
    pub slope_unit: SlopeUnit,
    pub slope_axis: Axis,
    pub sidelobes: Vec<SidelobeRegion>,
    pub plane_sampling: PlaneSampling,
}

impl BeamSpec {
    pub fn sum() -> Self {
        Self {
            kind: BeamKind::Sum,
            boresight: Angle::BORESIGHT,
            gain: C64::new(1.0, 0.0),
            slope: None,
            slope_unit: SlopeUnit::PerDegree,
            slope_axis: Axis::Azimuth,
            sidelobes: Vec::new(),
            plane_sampling: PlaneSampling::PrincipalCuts,
        }
    }

    pub fn difference(slope: f64, unit: SlopeUnit) -> Self {
        Self {
            kind: BeamKind::Difference,
            slope: Some(slope),
            slope_unit: unit,
            ..Self::sum()
        }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = C64::new(gain, 0.0);
        self
    }

    pub fn with_axis(mut self, axis: Axis) -> Self {
        self.slope_axis = axis;
        self
    }

    pub fn with_boresight(mut self, boresight: Angle) -> Self {
        self.boresight = boresight;
        self
    }

    pub fn with_sidelobe(mut self, region: SidelobeRegion) -> Self {
        self.sidelobes.push(region);
        self
    }

    pub fn with_plane_sampling(mut self, sampling: PlaneSampling) -> Self {
        self.plane_sampling = sampling;
        self
    }

    /// Every side-lobe level shifted by `delta_db`.
    pub fn relaxed(&self, delta_db: f64) -> Self {
        let mut out = self.clone();
        for r in &mut out.sidelobes {
            r.level_db += delta_db;
        }
        out
    }

    pub fn reference_gain(&self) -> f64 {
        self.gain.norm_sqr()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        self.boresight.validate()?;
        if !(self.gain.re.is_finite() && self.gain.im.is_finite()) || self.gain.norm() == 0.0 {
            return bad(format!("gain must be finite and non-zero, got {}", self.gain));
        }
        match (self.kind, self.slope) {
            (BeamKind::Sum, Some(_)) => return bad("a sum beam takes no slope".into()),
            (BeamKind::Difference, None) => {
                return bad("a difference beam needs exactly one slope".into())
            }
            (BeamKind::Difference, Some(s)) if !s.is_finite() => {
                return bad(format!("slope must be finite, got {s}"))
            }
            _ => {}
        }
        for r in &self.sidelobes {
            if !r.level_db.is_finite() || r.level_db > 0.0 {
                return bad(format!("side-lobe level must be <= 0 dB, got {}", r.level_db));
            }
            if r.samples == 0 {
                return bad("side-lobe sample count must be >= 1".into());
            }
            if r.intervals.is_empty() {
                return bad("side-lobe region has no intervals".into());
            }
        }
        Ok(())
    }
}

/// `cᴴ·w = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEquality {
    pub row: DVector<C64>,
    pub rhs: C64,
}

/// `|cᴴ·w|² ≤ bound`, sampled at `angle`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeBound {
    pub row: DVector<C64>,
    pub bound: f64,
    pub angle: Angle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    n: usize,
    pub equalities: Vec<LinearEquality>,
    pub bounds: Vec<MagnitudeBound>,
}

impl ConstraintSystem {
    /// Assembles a system from raw rows, checking dimensions and bounds.
    pub fn new(
        n: usize,
        equalities: Vec<LinearEquality>,
        bounds: Vec<MagnitudeBound>,
    ) -> Result<Self> {
        if equalities.is_empty() {
            return Err(Error::Spec("constraint system needs at least one equality".into()));
        }
        let rows_ok = equalities.iter().all(|e| e.row.len() == n)
            && bounds.iter().all(|b| b.row.len() == n);
        if !rows_ok {
            return Err(Error::Domain(format!("constraint rows must have length {n}")));
        }
        if let Some(b) = bounds.iter().find(|b| !(b.bound >= 0.0 && b.bound.is_finite())) {
            return Err(Error::Spec(format!("magnitude bound {} is not >= 0", b.bound)));
        }
        Ok(Self {
            n,
            equalities,
            bounds,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// `cᴴ·w` without forming the conjugate.
pub fn inner(row: &DVector<C64>, w: &DVector<C64>) -> C64 {
    row.iter()
        .zip(w.iter())
        .fold(C64::new(0.0, 0.0), |acc, (c, x)| acc + c.conj() * x)
}

/// Side-lobe sample directions for one region.
pub fn sidelobe_directions(spec: &BeamSpec, geom: &ArrayGeometry, region: &SidelobeRegion) -> Result<Vec<Angle>> {
    let angles = region.sample_angles()?;
    if geom.is_linear() {
        return Ok(angles.into_iter().map(Angle::bearing).collect());
    }
    let b = spec.boresight;
    let mut out: Vec<Angle> = angles.iter().map(|&az| Angle::new(az, b.el)).collect();
    out.extend(angles.iter().map(|&el| Angle::new(b.az, el)));
    if spec.plane_sampling == PlaneSampling::FullPlane {
        for &el in &angles {
            out.extend(angles.iter().map(|&az| Angle::new(az, el)));
        }
    }
    Ok(out)
}

pub fn compile(
    spec: &BeamSpec,
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
) -> Result<ConstraintSystem> {
    spec.validate()?;
    check_order(geom, coupling)?;

    let boresight = effective_response(geom, coupling, spec.boresight)?;
    let mut equalities = Vec::with_capacity(2);
    match spec.kind {
        BeamKind::Sum => equalities.push(LinearEquality {
            row: boresight,
            rhs: spec.gain,
        }),
        BeamKind::Difference => {
            let slope = spec.slope.expect("validated") * spec.slope_unit.to_per_degree();
            equalities.push(LinearEquality {
                row: boresight,
                rhs: C64::new(0.0, 0.0),
            });
            equalities.push(LinearEquality {
                row: effective_derivative(geom, coupling, spec.boresight, spec.slope_axis)?,
                rhs: spec.gain * slope,
            });
        }
    }

    let mut bounds = Vec::new();
    for region in &spec.sidelobes {
        let bound = spec.reference_gain() * 10f64.powf(region.level_db / 10.0);
        for angle in sidelobe_directions(spec, geom, region)? {
            bounds.push(MagnitudeBound {
                row: effective_response(geom, coupling, angle)?,
                bound,
                angle,
            });
        }
    }
    ConstraintSystem::new(geom.len(), equalities, bounds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub max_eq_residual: f64,
    pub max_ineq_violation: f64,
    pub pass: bool,
}

pub fn check_feasibility(
    w: &DVector<C64>,
    sys: &ConstraintSystem,
    tol_eq: f64,
    tol_ineq: f64,
) -> FeasibilityReport {
    assert_eq!(w.len(), sys.dim(), "weight length must match the system");
    let max_eq_residual = sys
        .equalities
        .iter()
        .map(|e| (inner(&e.row, w) - e.rhs).norm())
        .fold(0.0, f64::max);
    let max_ineq_violation = sys
        .bounds
        .iter()
        .map(|b| (inner(&b.row, w).norm_sqr() - b.bound).max(0.0))
        .fold(0.0, f64::max);
    FeasibilityReport {
        max_eq_residual,
        max_ineq_violation,
        pass: max_eq_residual <= tol_eq && max_ineq_violation <= tol_ineq,
    }
}
