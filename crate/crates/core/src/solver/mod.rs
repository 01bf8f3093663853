//! Weighted-l1 subproblem: minimize `Σ pᵢ|wᵢ|` over complex weights subject
//! to a compiled [`ConstraintSystem`].
//!
//! The complex problem is embedded as a real second-order cone program (see
//! [`embedding`]) and handed to the Clarabel interior-point solver. Side-lobe
//! bounds are handled with a working set: the cone program only carries the
//! bounds that have been active or violated, and every remaining bound is
//! checked on the returned weights. Violated bounds are added and the program
//! re-solved until every sampled bound holds. Since the working-set program
//! is a relaxation, its optimum is optimal for the full system as soon as it
//! is feasible for it.

pub mod embedding;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus as ClarabelStatus,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::array::C64;
use crate::constraints::{check_feasibility, inner, ConstraintSystem};
use crate::error::{Error, Result};
use embedding::{embed_subset, to_complex, ConeProgram};

/// Relative modulus below which an entry is treated as solver residue.
pub const RESIDUE_CUTOFF: f64 = 1e-6;

/// Relative floor applied to the penalty vector before solving.
pub const PENALTY_FLOOR: f64 = 1e-12;

/// Bound radius factors tried, in order, when a solved program lands just
/// outside the inequality tolerance.
const SHRINK_RETRIES: [f64; 2] = [1.0 - 1e-6, 1.0 - 1e-5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Largest accepted `|cᴴw − b|` over the equalities.
    pub tol_eq: f64,
    /// Largest accepted `|cᴴw|² − τ` over the magnitude bounds.
    pub tol_ineq: f64,
    /// Relative duality-gap target of the interior-point method.
    pub tol_gap: f64,
    /// Interior-point iteration cap per cone program.
    pub max_iterations: u32,
    /// Solve with a side-lobe working set instead of every bound at once.
    pub working_set: bool,
    /// Cap on working-set growth rounds.
    pub max_rounds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_eq: 1e-8,
            tol_ineq: 1e-8,
            tol_gap: 1e-8,
            max_iterations: 200,
            working_set: true,
            max_rounds: 50,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let tols = [self.tol_eq, self.tol_ineq, self.tol_gap];
        if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Config(format!("solver tolerances must be > 0, got {tols:?}")));
        }
        if self.max_iterations == 0 || self.max_rounds == 0 {
            return Err(Error::Config("solver iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Stopped before reaching the tolerances (iteration cap, stalled
    /// progress or an unresolved working set). Carries the best iterate.
    MaxIterations,
}

/// Farkas-type evidence that the constraint set is empty: a dual ray `z` in
/// the dual cone with `Aᵀz ≈ 0` and `bᵀz < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    /// `‖Aᵀz‖∞ / |bᵀz|`; small values certify infeasibility.
    pub relative_residual: f64,
    pub rhs_dot: f64,
    /// Largest amount by which `z` leaves the dual cone, relative to `|bᵀz|`.
    pub cone_violation: f64,
}

impl InfeasibilityCertificate {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.rhs_dot < 0.0 && self.relative_residual <= tol && self.cone_violation <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub w: DVector<C64>,
    /// `Σ pᵢ|wᵢ|` with the caller's (unfloored) penalties.
    pub objective: f64,
    pub status: SolveStatus,
    pub eq_residual: f64,
    pub ineq_violation: f64,
    /// Interior-point iterations summed over working-set rounds.
    pub iterations: u32,
    pub rounds: usize,
    /// Number of bounds carried by the final cone program.
    pub active_bounds: usize,
    pub certificate: Option<InfeasibilityCertificate>,
}

/// Reusable subproblem for one constraint system. It remembers its working
/// set between calls, which acts as a warm start for repeated solves with
/// changing penalties.
#[derive(Debug, Clone)]
pub struct WeightedL1<'a> {
    sys: &'a ConstraintSystem,
    working: Vec<bool>,
}

impl<'a> WeightedL1<'a> {
    pub fn new(sys: &'a ConstraintSystem) -> Self {
        Self {
            sys,
            working: vec![false; sys.bounds.len()],
        }
    }

    pub fn system(&self) -> &ConstraintSystem {
        self.sys
    }

    pub fn working_set_len(&self) -> usize {
        self.working.iter().filter(|x| **x).count()
    }

    pub fn solve(&mut self, p: &[f64], opts: &SolverOptions) -> Result<SubproblemSolution> {
        opts.validate()?;
        let n = self.sys.dim();
        if p.len() != n {
            return Err(Error::Domain(format!(
                "penalty length {} does not match dimension {n}",
                p.len()
            )));
        }
        if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Domain("penalties must be finite and >= 0".into()));
        }
        let cost = normalized_penalty(p);

        if !opts.working_set {
            self.working.iter_mut().for_each(|x| *x = true);
        } else if !self.working.iter().any(|x| *x) {
            self.seed_working_set();
        }

        let mut iterations = 0;
        let mut rounds = 0;
        let mut last_ok = true;
        let (w, prog_bounds) = loop {
            rounds += 1;
            let active: Vec<usize> = (0..self.working.len()).filter(|&k| self.working[k]).collect();
            let prog = embed_subset(self.sys, &cost, &active, 1.0);
            let outcome = run_clarabel(&prog, opts);
            iterations += outcome.iterations;

            match outcome.status {
                ClarabelStatus::PrimalInfeasible | ClarabelStatus::AlmostPrimalInfeasible => {
                    let cert = certificate(&prog, &outcome.z);
                    let w = DVector::zeros(n);
                    let rep = check_feasibility(&w, self.sys, opts.tol_eq, opts.tol_ineq);
                    return Ok(SubproblemSolution {
                        w,
                        objective: 0.0,
                        status: SolveStatus::Infeasible,
                        eq_residual: rep.max_eq_residual,
                        ineq_violation: rep.max_ineq_violation,
                        iterations,
                        rounds,
                        active_bounds: active.len(),
                        certificate: Some(cert),
                    });
                }
                ClarabelStatus::Solved | ClarabelStatus::AlmostSolved => {}
                other => {
                    log::debug!("round {rounds}: clarabel stopped with {other:?}");
                    last_ok = false;
                }
            }

            let w = to_complex(&outcome.x, n);
            if !last_ok || !opts.working_set || rounds >= opts.max_rounds {
                if opts.working_set && rounds >= opts.max_rounds {
                    last_ok = self.add_violated(&w, opts.tol_ineq) == 0 && last_ok;
                }
                break (w, active.len());
            }
            if self.add_violated(&w, opts.tol_ineq) == 0 {
                break (w, active.len());
            }
        };

        let mut w = polish_equalities(self.sys, w);
        let mut rep = check_feasibility(&w, self.sys, opts.tol_eq, opts.tol_ineq);
        if last_ok && !rep.pass && rep.max_eq_residual <= opts.tol_eq {
            let active: Vec<usize> = (0..self.working.len()).filter(|&k| self.working[k]).collect();
            for shrink in SHRINK_RETRIES {
                let outcome = run_clarabel(&embed_subset(self.sys, &cost, &active, shrink), opts);
                iterations += outcome.iterations;
                if !matches!(outcome.status, ClarabelStatus::Solved | ClarabelStatus::AlmostSolved) {
                    continue;
                }
                let retry = polish_equalities(self.sys, to_complex(&outcome.x, n));
                let retry_rep = check_feasibility(&retry, self.sys, opts.tol_eq, opts.tol_ineq);
                if retry_rep.pass {
                    log::debug!("tightened bounds by {:.0e} to meet the tolerance", 1.0 - shrink);
                    (w, rep) = (retry, retry_rep);
                    break;
                }
            }
        }
        let w = match clean_residue(self.sys, &w, p, opts) {
            Some((clean, clean_rep)) if rep.pass => {
                rep = clean_rep;
                clean
            }
            _ => w,
        };
        if !rep.pass {
            log::debug!(
                "residual check failed: eq {:.3e}, ineq {:.3e}",
                rep.max_eq_residual,
                rep.max_ineq_violation
            );
        }
        let status = if last_ok && rep.pass {
            SolveStatus::Optimal
        } else {
            SolveStatus::MaxIterations
        };
        Ok(SubproblemSolution {
            objective: weighted_l1(p, &w),
            w,
            status,
            eq_residual: rep.max_eq_residual,
            ineq_violation: rep.max_ineq_violation,
            iterations,
            rounds,
            active_bounds: prog_bounds,
            certificate: None,
        })
    }

    /// Local maxima of the pattern of the least-norm equality solution.
    fn seed_working_set(&mut self) {
        if self.sys.bounds.is_empty() {
            return;
        }
        let w0 = least_norm_solution(self.sys);
        let vals: Vec<f64> = self
            .sys
            .bounds
            .iter()
            .map(|b| inner(&b.row, &w0).norm_sqr() / b.bound.max(f64::MIN_POSITIVE))
            .collect();
        for k in local_maxima(&vals) {
            self.working[k] = true;
        }
    }

    /// Adds violated bounds that are local maxima of the violation (and the
    /// worst one). Returns how many were added.
    fn add_violated(&mut self, w: &DVector<C64>, tol_ineq: f64) -> usize {
        let excess: Vec<f64> = self
            .sys
            .bounds
            .iter()
            .map(|b| inner(&b.row, w).norm_sqr() - b.bound)
            .collect();
        let threshold = 0.5 * tol_ineq;
        let mut added = 0;
        let worst = excess
            .iter()
            .enumerate()
            .filter(|(k, _)| !self.working[*k])
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k);
        let mut candidates = local_maxima(&excess);
        candidates.extend(worst);
        for k in candidates {
            if excess[k] > threshold && !self.working[k] {
                self.working[k] = true;
                added += 1;
            }
        }
        added
    }
}

/// One-shot solve with a fresh working set.
pub fn solve_weighted_l1(
    p: &[f64],
    sys: &ConstraintSystem,
    opts: &SolverOptions,
) -> Result<SubproblemSolution> {
    WeightedL1::new(sys).solve(p, opts)
}

pub fn weighted_l1(p: &[f64], w: &DVector<C64>) -> f64 {
    p.iter().zip(w.iter()).map(|(pi, wi)| pi * wi.norm()).sum()
}

/// Penalties divided by their maximum and floored at [`PENALTY_FLOOR`]; an
/// all-zero vector becomes all ones (plain `Σ|wᵢ|`).
fn normalized_penalty(p: &[f64]) -> Vec<f64> {
    let max = p.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![1.0; p.len()];
    }
    p.iter().map(|x| (x / max).max(PENALTY_FLOOR)).collect()
}

fn local_maxima(vals: &[f64]) -> Vec<usize> {
    let n = vals.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || vals[i] >= vals[i - 1];
            let right = i + 1 == n || vals[i] >= vals[i + 1];
            left && right
        })
        .collect()
}

struct ClarabelOutcome {
    x: Vec<f64>,
    z: Vec<f64>,
    status: ClarabelStatus,
    iterations: u32,
}

fn run_clarabel(prog: &ConeProgram, opts: &SolverOptions) -> ClarabelOutcome {
    let (a, b, cones) = prog.to_clarabel();
    let p = CscMatrix::zeros((prog.n_vars, prog.n_vars));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(opts.max_iterations)
        .tol_gap_abs(opts.tol_gap)
        .tol_gap_rel(opts.tol_gap)
        .tol_feas(opts.tol_eq.min(opts.tol_ineq))
        .max_threads(1)
        .build()
        .expect("static settings are valid");
    match DefaultSolver::new(&p, &prog.cost, &a, &b, &cones, settings) {
        Ok(mut solver) => {
            solver.solve();
            let sol = &solver.solution;
            ClarabelOutcome {
                x: sol.x.clone(),
                z: sol.z.clone(),
                status: sol.status,
                iterations: sol.iterations,
            }
        }
        Err(_) => ClarabelOutcome {
            x: vec![0.0; prog.n_vars],
            z: vec![0.0; prog.n_rows()],
            status: ClarabelStatus::NumericalError,
            iterations: 0,
        },
    }
}

fn certificate(prog: &ConeProgram, z: &[f64]) -> InfeasibilityCertificate {
    let rhs_dot = prog.rhs_dot(z);
    let scale = rhs_dot.abs().max(f64::MIN_POSITIVE);
    let at_z = prog.transpose_apply(z);
    let relative_residual = at_z.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    let mut cone_violation = 0.0f64;
    let mut offset = 0;
    for cone in &prog.cones {
        if let embedding::Cone::SecondOrder(d) = *cone {
            let head = z[offset];
            let tail = z[offset + 1..offset + d].iter().map(|v| v * v).sum::<f64>().sqrt();
            cone_violation = cone_violation.max(tail - head);
        }
        offset += cone.dim();
    }
    InfeasibilityCertificate {
        relative_residual,
        rhs_dot,
        cone_violation: cone_violation.max(0.0) / scale,
    }
}

/// Equality rows as columns of an `N × q` matrix `C` (so `Cᴴw = b`).
fn equality_matrix(sys: &ConstraintSystem) -> (DMatrix<C64>, DVector<C64>) {
    let q = sys.equalities.len();
    let c = DMatrix::from_fn(sys.dim(), q, |i, k| sys.equalities[k].row[i]);
    let b = DVector::from_iterator(q, sys.equalities.iter().map(|e| e.rhs));
    (c, b)
}

/// `w = C·(CᴴC)⁻¹·b`.
pub(crate) fn least_norm_solution(sys: &ConstraintSystem) -> DVector<C64> {
    let (c, b) = equality_matrix(sys);
    let gram = c.adjoint() * &c;
    match gram.lu().solve(&b) {
        Some(y) => c * y,
        None => DVector::zeros(sys.dim()),
    }
}

/// Interior-point iterates leave entries around 1e-8 of the largest weight
/// where the exact optimum is zero. Those below [`RESIDUE_CUTOFF`] are set
/// to zero and the equalities re-polished; the result is kept only if it
/// stays feasible and no more expensive.
fn clean_residue(
    sys: &ConstraintSystem,
    w: &DVector<C64>,
    p: &[f64],
    opts: &SolverOptions,
) -> Option<(DVector<C64>, crate::constraints::FeasibilityReport)> {
    let cutoff = RESIDUE_CUTOFF * w.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if !w.iter().any(|x| x.norm() > 0.0 && x.norm() < cutoff) {
        return None;
    }
    let zeroed = w.map(|x| if x.norm() < cutoff { C64::new(0.0, 0.0) } else { x });
    let clean = polish_equalities(sys, zeroed);
    let rep = check_feasibility(&clean, sys, opts.tol_eq, opts.tol_ineq);
    let cheaper = weighted_l1(p, &clean) <= weighted_l1(p, w) * (1.0 + opts.tol_gap);
    (rep.pass && cheaper).then_some((clean, rep))
}

/// Removes the equality residual with a correction confined to the support,
/// `δ = D²C·(CᴴD²C)⁻¹·r`, `D = diag|w|`. Zero weights stay zero.
fn polish_equalities(sys: &ConstraintSystem, w: DVector<C64>) -> DVector<C64> {
    let (c, b) = equality_matrix(sys);
    let r = &b - c.adjoint() * &w;
    if r.iter().all(|x| x.norm() == 0.0) {
        return w;
    }
    let d2 = DVector::from_iterator(w.len(), w.iter().map(|x| C64::new(x.norm_sqr(), 0.0)));
    let dc = DMatrix::from_fn(c.nrows(), c.ncols(), |i, k| d2[i] * c[(i, k)]);
    let gram = c.adjoint() * &dc;
    match gram.lu().solve(&r) {
        Some(y) => {
            let polished = &w + dc * y;
            let before: f64 = r.iter().map(|x| x.norm()).fold(0.0, f64::max);
            let after: f64 = (&b - c.adjoint() * &polished)
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max);
            if after < before {
                polished
            } else {
                w
            }
        }
        None => w,
    }
}
