//! Array geometry, steering vectors and the idealized mutual-coupling model.
//!
//! Element positions are stored in wavelengths, so the free-space wavenumber
//! collapses to `2π` and no separate wavelength parameter exists. Angles are
//! in degrees everywhere; radians only appear inside phase evaluation.
//!
//! Planar arrays use direction cosines `u = cos(el)·sin(az)`, `v = sin(el)`
//! and the element phase `exp(-j·2π·(x·u + y·v))`. On the azimuth cut
//! (`el = 0`) this reduces to the familiar linear-array response.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type C64 = Complex64;

const DEG: f64 = PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrayKind {
    Linear,
    PlanarGrid { nx: usize, ny: usize },
}

/// Element layout of a uniformly spaced linear or rectangular array.
///
/// Linear elements sit at `x = n·d`. Planar elements are numbered row-major,
/// index `iy·nx + ix` at `(ix·d, iy·d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    kind: ArrayKind,
    spacing: f64,
    positions: Vec<[f64; 2]>,
}

impl ArrayGeometry {
    pub fn linear(n: usize, spacing: f64) -> Result<Self> {
        check_spacing(spacing)?;
        if n < 2 {
            return domain(format!("array needs at least 2 elements, got {n}"));
        }
        let positions = (0..n).map(|i| [i as f64 * spacing, 0.0]).collect();
        Ok(Self {
            kind: ArrayKind::Linear,
            spacing,
            positions,
        })
    }

    pub fn planar(nx: usize, ny: usize, spacing: f64) -> Result<Self> {
        check_spacing(spacing)?;
        if nx == 0 || ny == 0 || nx * ny < 2 {
            return domain(format!("planar grid {nx}x{ny} needs at least 2 elements"));
        }
        let mut positions = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                positions.push([ix as f64 * spacing, iy as f64 * spacing]);
            }
        }
        Ok(Self {
            kind: ArrayKind::PlanarGrid { nx, ny },
            spacing,
            positions,
        })
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, ArrayKind::Linear)
    }

    /// Number of elements `N`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Element spacing in wavelengths.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return domain(format!("element spacing must be positive, got {spacing}"));
    }
    Ok(())
}

/// Look direction in degrees. Linear arrays only use `az` (the bearing θ);
/// `el` stays zero for them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub az: f64,
    pub el: f64,
}

impl Angle {
    pub const BORESIGHT: Angle = Angle { az: 0.0, el: 0.0 };

    pub fn bearing(theta: f64) -> Self {
        Self { az: theta, el: 0.0 }
    }

    pub fn new(az: f64, el: f64) -> Self {
        Self { az, el }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("azimuth", self.az), ("elevation", self.el)] {
            if !(-90.0..=90.0).contains(&v) {
                return domain(format!("{name} {v} deg outside [-90, 90]"));
            }
        }
        Ok(())
    }

    /// Direction cosines `(u, v)`.
    pub fn direction_cosines(&self) -> (f64, f64) {
        let (az, el) = (self.az * DEG, self.el * DEG);
        (el.cos() * az.sin(), el.sin())
    }
}

/// Angular coordinate a derivative (and so a slope constraint) is taken along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    Azimuth,
    Elevation,
}

/// Array response `a(θ)`; every element has unit modulus.
pub fn steering_vector(geom: &ArrayGeometry, angle: Angle) -> Result<DVector<C64>> {
    angle.validate()?;
    let (u, v) = angle.direction_cosines();
    Ok(DVector::from_iterator(
        geom.len(),
        geom.positions()
            .iter()
            .map(|&[x, y]| C64::from_polar(1.0, -2.0 * PI * (x * u + y * v))),
    ))
}

/// Derivative of the steering vector along azimuth, per degree. For linear
/// arrays this is `∂a/∂θ`.
pub fn steering_derivative(geom: &ArrayGeometry, angle: Angle) -> Result<DVector<C64>> {
    steering_derivative_along(geom, angle, Axis::Azimuth)
}

/// Exact derivative of the steering vector with respect to one angular
/// coordinate, per degree (the chain-rule factor π/180 is included).
pub fn steering_derivative_along(
    geom: &ArrayGeometry,
    angle: Angle,
    axis: Axis,
) -> Result<DVector<C64>> {
    let a = steering_vector(geom, angle)?;
    let (az, el) = (angle.az * DEG, angle.el * DEG);
    let d_phase = |x: f64, y: f64| match axis {
        Axis::Azimuth => -2.0 * PI * x * el.cos() * az.cos(),
        Axis::Elevation => -2.0 * PI * (-x * el.sin() * az.sin() + y * el.cos()),
    };
    Ok(DVector::from_iterator(
        geom.len(),
        geom.positions()
            .iter()
            .zip(a.iter())
            .map(|(&[x, y], &an)| an * C64::new(0.0, d_phase(x, y) * DEG)),
    ))
}

/// Autoregressive-style coupling `M[i][j] = ρ^|i−j|` over element indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel {
    rho: f64,
    order: usize,
}

impl CouplingModel {
    pub fn new(rho: f64, order: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return domain(format!("coupling coefficient {rho} outside [0, 1)"));
        }
        Ok(Self { rho, order })
    }

    pub fn none(order: usize) -> Self {
        Self { rho: 0.0, order }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_identity(&self) -> bool {
        self.rho == 0.0
    }
}

pub fn coupling_matrix(model: &CouplingModel) -> DMatrix<f64> {
    let n = model.order;
    DMatrix::from_fn(n, n, |i, j| model.rho.powi(i.abs_diff(j) as i32))
}

/// Coupling-distorted steering vector `M·a(θ)`, so that a beam value is
/// `(M·a)ᴴ·w`.
pub fn effective_response(
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    angle: Angle,
) -> Result<DVector<C64>> {
    check_order(geom, coupling)?;
    let a = steering_vector(geom, angle)?;
    Ok(apply_coupling(coupling, a))
}

/// Coupling-distorted steering derivative `M·∂a/∂θ`.
pub fn effective_derivative(
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    angle: Angle,
    axis: Axis,
) -> Result<DVector<C64>> {
    check_order(geom, coupling)?;
    let da = steering_derivative_along(geom, angle, axis)?;
    Ok(apply_coupling(coupling, da))
}

pub(crate) fn check_order(geom: &ArrayGeometry, coupling: &CouplingModel) -> Result<()> {
    if coupling.order() != geom.len() {
        return domain(format!(
            "coupling order {} does not match array size {}",
            coupling.order(),
            geom.len()
        ));
    }
    Ok(())
}

pub(crate) fn apply_coupling(coupling: &CouplingModel, a: DVector<C64>) -> DVector<C64> {
    if coupling.is_identity() {
        return a;
    }
    // M is Toeplitz in ρ^|i−j|: two first-order recursions give M·a in O(N).
    // forward[i] = Σ_{j≤i} ρ^{i−j} a_j, backward[i] = Σ_{j≥i} ρ^{j−i} a_j.
    let n = a.len();
    let rho = coupling.rho();
    let mut forward = vec![C64::new(0.0, 0.0); n];
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        acc = acc * rho + a[i];
        forward[i] = acc;
    }
    let mut out = DVector::from_element(n, C64::new(0.0, 0.0));
    let mut acc = C64::new(0.0, 0.0);
    for i in (0..n).rev() {
        acc = acc * rho + a[i];
        out[i] = forward[i] + acc - a[i];
    }
    out
}

/// One angular interval in degrees with explicit endpoint closure, written
/// `[lo, hi]`, `[lo, hi)`, `(lo, hi]` or `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.hi == self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return domain(format!("malformed interval {self}"));
        }
        if self.lo < -90.0 || self.hi > 90.0 {
            return domain(format!("interval {self} leaves [-90, 90]"));
        }
        if self.is_degenerate() && !(self.lo_closed && self.hi_closed) {
            return domain(format!("interval {self} is empty"));
        }
        Ok(())
    }

    /// `n` evenly spaced samples. Closed ends are included; an open end is
    /// stepped away from by one spacing.
    fn samples(&self, n: usize) -> Vec<f64> {
        if n == 0 {
            return Vec::new();
        }
        if self.is_degenerate() {
            return vec![self.lo];
        }
        let (lo, hi) = (self.lo, self.hi);
        match (self.lo_closed, self.hi_closed) {
            (true, true) if n == 1 => vec![lo],
            (true, true) => linspace(lo, hi, n),
            (true, false) => (0..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect(),
            (false, true) => (0..n)
                .map(|i| hi - (hi - lo) * (n - 1 - i) as f64 / n as f64)
                .collect(),
            (false, false) => (0..n)
                .map(|i| lo + (hi - lo) * (i + 1) as f64 / (n + 1) as f64)
                .collect(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

impl FromStr for Interval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Domain(format!("cannot parse interval {s:?}, expected e.g. \"[1, 90]\""));
        let lo_closed = match s.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(bad()),
        };
        let hi_closed = match s.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(bad()),
        };
        let inner = &s[1..s.len() - 1];
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let lo = a.trim().parse().map_err(|_| bad())?;
        let hi = b.trim().parse().map_err(|_| bad())?;
        let iv = Interval {
            lo,
            hi,
            lo_closed,
            hi_closed,
        };
        iv.validate()?;
        Ok(iv)
    }
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Evenly spaced samples over a union of non-overlapping intervals, in
/// ascending order.
///
/// The total is split across intervals in proportion to their length by the
/// largest-remainder rule (ties go to the earlier interval). A degenerate
/// interval takes exactly one sample and a closed non-degenerate one at least
/// two, so the count may exceed `total_samples` by one per interval.
pub fn angle_grid(region: &[Interval], total_samples: usize) -> Result<Vec<f64>> {
    if region.is_empty() || total_samples == 0 {
        return domain("angle grid needs at least one interval and one sample");
    }
    for iv in region {
        iv.validate()?;
    }
    let mut sorted: Vec<Interval> = region.to_vec();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let touching = a.hi == b.lo && !(a.hi_closed && b.lo_closed);
        if a.hi > b.lo || (a.hi == b.lo && !touching) {
            return domain(format!("intervals {a} and {b} overlap"));
        }
    }

    let counts = allocate(&sorted, total_samples);
    Ok(sorted
        .iter()
        .zip(counts)
        .flat_map(|(iv, n)| iv.samples(n))
        .collect())
}

fn allocate(intervals: &[Interval], total: usize) -> Vec<usize> {
    let degenerate = intervals.iter().filter(|iv| iv.is_degenerate()).count();
    let span: f64 = intervals.iter().map(Interval::len).sum();
    let budget = total.saturating_sub(degenerate);
    let mut counts = vec![0usize; intervals.len()];
    if span > 0.0 {
        let shares: Vec<f64> = intervals
            .iter()
            .map(|iv| budget as f64 * iv.len() / span)
            .collect();
        for (c, s) in counts.iter_mut().zip(&shares) {
            *c = s.floor() as usize;
        }
        let mut order: Vec<usize> = (0..intervals.len())
            .filter(|&i| !intervals[i].is_degenerate())
            .collect();
        order.sort_by(|&a, &b| {
            let fa = shares[a] - shares[a].floor();
            let fb = shares[b] - shares[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let assigned: usize = counts.iter().sum();
        for &i in order.iter().take(budget.saturating_sub(assigned)) {
            counts[i] += 1;
        }
    }
    for (c, iv) in counts.iter_mut().zip(intervals) {
        if iv.is_degenerate() {
            *c = 1;
        } else {
            let min = if iv.lo_closed && iv.hi_closed { 2 } else { 1 };
            *c = (*c).max(min);
        }
    }
    counts
}
