#![allow(dead_code)]

use monobeam::constraints::{
    BeamSpec, ConstraintSystem, LinearEquality, MagnitudeBound, SidelobeRegion, SlopeUnit,
};
use monobeam::{Angle, ArrayGeometry, Axis, C64};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn unit_phase(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

/// Minimum of `Σ pᵢ|wᵢ|` over `w = param(z)`, `z` in the box `[-2, 2]²`,
/// subject to `feasible(w)`. A 400 x 400 lattice locates the basin, then
/// 21 x 21 windows re-centred on the incumbent refine it. The window halves
/// only after a round without improvement, so a minimizer on the boundary
/// of the feasible set is tracked rather than cut off. Returns the value and
/// the minimizing `z`, or `None` if no lattice point is feasible.
pub fn lattice_min(
    p: &[f64],
    param: &dyn Fn(C64) -> Vec<C64>,
    feasible: &dyn Fn(&[C64]) -> bool,
) -> Option<(f64, C64)> {
    let eval = |z: C64| {
        let w = param(z);
        feasible(&w).then(|| p.iter().zip(&w).map(|(pi, wi)| pi * wi.norm()).sum::<f64>())
    };
    let scan = |center: C64, half: f64, n: usize| -> Option<(f64, C64)> {
        let mut best: Option<(f64, C64)> = None;
        for i in 0..n {
            for j in 0..n {
                let z = center
                    + c(
                        -half + 2.0 * half * i as f64 / (n - 1) as f64,
                        -half + 2.0 * half * j as f64 / (n - 1) as f64,
                    );
                if let Some(v) = eval(z) {
                    if best.is_none_or(|(b, _)| v < b) {
                        best = Some((v, z));
                    }
                }
            }
        }
        best
    };
    let mut best = scan(c(0.0, 0.0), 2.0, 400)?;
    let mut half = 2.0 * 4.0 / 399.0;
    for _ in 0..2000 {
        match scan(best.1, half, 21) {
            Some(b) if b.0 < best.0 - 1e-15 => best = b,
            _ => half *= 0.5,
        }
        if half < 1e-13 {
            break;
        }
    }
    Some(best)
}

/// Minimum over `t ∈ [0, 2π)` of a continuous function: a 20000-point scan
/// followed by repeated zooms of the bracketing window.
pub fn angle_min(f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let n = 20_000;
    let step = std::f64::consts::TAU / n as f64;
    let mut best = (0..n)
        .map(|k| (f(k as f64 * step), k as f64 * step))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    let mut half = 2.0 * step;
    while half > 1e-14 {
        for k in 0..=40 {
            let t = best.1 - half + 2.0 * half * k as f64 / 40.0;
            let v = f(t);
            if v < best.0 {
                best = (v, t);
            }
        }
        half *= 0.25;
    }
    best
}

/// A weighted-l1 instance with its lattice-oracle optimum.
pub struct OracleCase {
    pub name: String,
    pub sys: ConstraintSystem,
    pub p: Vec<f64>,
    pub oracle: f64,
}

fn eq(row: Vec<C64>, rhs: C64) -> LinearEquality {
    LinearEquality {
        row: DVector::from_vec(row),
        rhs,
    }
}

fn bound(row: Vec<C64>, bound: f64) -> MagnitudeBound {
    MagnitudeBound {
        row: DVector::from_vec(row),
        bound,
        angle: Angle::BORESIGHT,
    }
}

fn inner(row: &[C64], w: &[C64]) -> C64 {
    row.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

fn random_rhs(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(rng.random_range(0.2..1.0), rng.random_range(-3.1..3.1))
}

fn penalties(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.1..2.0)).collect()
}

fn interior(z: C64) -> bool {
    z.re.abs() < 1.9 && z.im.abs() < 1.9
}

/// Case `i` of the randomized suite: N ≤ 3 and at most two constraints.
/// Classes rotate through: one equality (N = 2); one equality plus one
/// active magnitude bound (N = 2); two equalities (N = 3); one equality
/// with the third element bounded to zero (N = 3).
pub fn oracle_case(i: usize) -> OracleCase {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
    loop {
        if let Some(case) = try_case(i % 4, &mut rng) {
            return OracleCase {
                name: format!("case {i} ({})", case.name),
                ..case
            };
        }
    }
}

fn try_case(class: usize, rng: &mut ChaCha8Rng) -> Option<OracleCase> {
    match class {
        0 | 1 => {
            let (c1, c2) = (unit_phase(rng), unit_phase(rng));
            let b = random_rhs(rng);
            let p = penalties(rng, 2);
            let param = move |z: C64| vec![z, (b - c1.conj() * z) / c2.conj()];
            let (free, zf) = lattice_min(&p, &param, &|_| true)?;
            if !interior(zf) {
                return None;
            }
            let eqs = vec![eq(vec![c1, c2], b)];
            if class == 0 {
                let sys = ConstraintSystem::new(2, eqs, vec![]).ok()?;
                return Some(OracleCase {
                    name: "one equality".into(),
                    sys,
                    p,
                    oracle: free,
                });
            }
            let d = vec![unit_phase(rng), unit_phase(rng) * rng.random_range(0.3..1.0)];
            // z-coefficient of dᴴw; near zero the feasible disk is so thin that
            // solver feasibility tolerance moves the optimum visibly
            let kappa = d[0].conj() - d[1].conj() * c1.conj() / c2.conj();
            if kappa.norm() < 0.2 {
                return None;
            }
            let at_free = inner(&d, &param(zf)).norm_sqr();
            if at_free < 1e-2 {
                return None;
            }
            let tau = 0.5 * at_free;
            // the free minimizer violates the bound, so the optimum lies on the
            // circle |κz + δ|² = τ in z-space
            let delta = d[1].conj() * b / c2.conj();
            let center = -delta / kappa;
            let radius = tau.sqrt() / kappa.norm();
            let (v, t) = angle_min(&|t| {
                let w = param(center + C64::from_polar(radius, t));
                p.iter().zip(&w).map(|(pi, wi)| pi * wi.norm()).sum()
            });
            let z = center + C64::from_polar(radius, t);
            if !interior(z) {
                return None;
            }
            let sys = ConstraintSystem::new(2, eqs, vec![bound(d, tau)]).ok()?;
            Some(OracleCase {
                name: "equality and bound".into(),
                sys,
                p,
                oracle: v,
            })
        }
        2 => {
            let r1: Vec<C64> = (0..3).map(|_| unit_phase(rng)).collect();
            let r2: Vec<C64> = (0..3).map(|_| unit_phase(rng)).collect();
            let (b1, b2) = (random_rhs(rng), random_rhs(rng));
            let det = r1[1].conj() * r2[2].conj() - r1[2].conj() * r2[1].conj();
            if det.norm() < 0.5 {
                return None;
            }
            let p = penalties(rng, 3);
            let (r1c, r2c) = (r1.clone(), r2.clone());
            let param = move |z: C64| {
                let y1 = b1 - r1c[0].conj() * z;
                let y2 = b2 - r2c[0].conj() * z;
                let w2 = (y1 * r2c[2].conj() - r1c[2].conj() * y2) / det;
                let w3 = (r1c[1].conj() * y2 - y1 * r2c[1].conj()) / det;
                vec![z, w2, w3]
            };
            let (v, z) = lattice_min(&p, &param, &|_| true)?;
            if !interior(z) {
                return None;
            }
            let sys = ConstraintSystem::new(3, vec![eq(r1, b1), eq(r2, b2)], vec![]).ok()?;
            Some(OracleCase {
                name: "two equalities".into(),
                sys,
                p,
                oracle: v,
            })
        }
        _ => {
            let row: Vec<C64> = (0..3).map(|_| unit_phase(rng)).collect();
            let b = random_rhs(rng);
            let p = penalties(rng, 3);
            let (c1, c2) = (row[0], row[1]);
            let param = move |z: C64| vec![z, (b - c1.conj() * z) / c2.conj(), c(0.0, 0.0)];
            let (v, z) = lattice_min(&p, &param, &|_| true)?;
            if !interior(z) {
                return None;
            }
            let e3 = vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
            let sys = ConstraintSystem::new(3, vec![eq(row, b)], vec![bound(e3, 0.0)]).ok()?;
            Some(OracleCase {
                name: "equality, third element off".into(),
                sys,
                p,
                oracle: v,
            })
        }
    }
}

/// A small random synthesis problem: K = 2 on a linear array of `n`
/// elements, or K = 3 (sum plus azimuth and elevation difference) on a
/// planar grid with `n` elements. Levels are loose enough that every
/// single-beam set is non-empty.
pub struct SmallProblem {
    pub geom: ArrayGeometry,
    pub specs: Vec<BeamSpec>,
    pub seed: u64,
    pub rho: f64,
}

pub fn small_problem(i: usize) -> SmallProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(5000 + i as u64);
    let n = if rng.random_bool(0.5) { 16 } else { 32 };
    let k3 = rng.random_bool(0.5);
    let rho = rng.random_range(0.0..0.3);
    let level = rng.random_range(-12.0..-6.0);
    let samples = rng.random_range(30..80);
    let scale = n as f64 / 16.0;
    // first-null half-width of an n-element aperture, widened
    let start = |cells: f64| ((cells * 2.0 / n as f64).asin().to_degrees() * rng_factor(i)).min(60.0);
    if !k3 {
        let geom = ArrayGeometry::linear(n, 0.5).unwrap();
        let sum = BeamSpec::sum().with_sidelobe(SidelobeRegion::symmetric(start(1.5), samples, level));
        let diff = BeamSpec::difference(-rng.random_range(2.0..6.0) * scale, SlopeUnit::PerRadian)
            .with_sidelobe(SidelobeRegion::symmetric(start(2.5), samples, level));
        SmallProblem {
            geom,
            specs: vec![sum, diff],
            seed: rng.random(),
            rho,
        }
    } else {
        let (nx, ny) = if n == 16 { (4, 4) } else { (8, 4) };
        let geom = ArrayGeometry::planar(nx, ny, 0.5).unwrap();
        let small = nx.min(ny) as f64;
        let start = |cells: f64| ((cells * 2.0 / small).min(1.0).asin().to_degrees()).min(60.0);
        let slope = -rng.random_range(1.0..3.0) * small / 4.0;
        let level = level.max(-8.0);
        let sum = BeamSpec::sum().with_sidelobe(SidelobeRegion::symmetric(start(1.2), samples, level));
        let az = BeamSpec::difference(slope, SlopeUnit::PerRadian)
            .with_axis(Axis::Azimuth)
            .with_sidelobe(SidelobeRegion::symmetric(start(1.6), samples, level));
        let el = BeamSpec::difference(slope, SlopeUnit::PerRadian)
            .with_axis(Axis::Elevation)
            .with_sidelobe(SidelobeRegion::symmetric(start(1.6), samples, level));
        SmallProblem {
            geom,
            specs: vec![sum, az, el],
            seed: rng.random(),
            rho,
        }
    }
}

fn rng_factor(i: usize) -> f64 {
    1.0 + (i % 5) as f64 * 0.1
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_monobeam")
}

pub fn config_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}
