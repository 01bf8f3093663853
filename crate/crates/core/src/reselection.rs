//! Argumentative reselection: alternating weighted-l1 solves that drive K
//! beams onto disjoint element subsets.
//!
//! Each outer iteration visits the beams in order. Beam `k` is penalized on
//! every element by the summed moduli of the other beams' current weights,
//! `pₖ = Σ_{j≠k} |w_j|`, and re-solved as `min |wₖ|ᵀpₖ  s.t.  wₖ ∈ Cₖ`. The
//! overlap cost `J = ½ Σ_{i≠j} |wᵢ|ᵀ|w_j|` is then recorded. Every inner step
//! can only lower `J`, so the recorded sequence is non-increasing and bounded
//! below by zero.

use std::time::{Duration, Instant};

use log::{debug, warn};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, CouplingModel, C64};
use crate::constraints::{check_feasibility, compile, BeamSpec, ConstraintSystem, FeasibilityReport};
use crate::error::{Error, Result};
use crate::solver::{
    weighted_l1, InfeasibilityCertificate, SolveStatus, SolverOptions, WeightedL1,
};

pub const DEFAULT_DISJOINT_COST_THRESHOLD: f64 = 1e-8;

/// Complex excitation of one beam together with the relative cutoff below
/// which an element counts as unused.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: DVector<C64>,
    zero_threshold: f64,
}

impl WeightVector {
    pub fn new(values: DVector<C64>, zero_threshold: f64) -> Result<Self> {
        if !(zero_threshold > 0.0 && zero_threshold < 1e-3) {
            return Err(Error::Domain(format!(
                "zero threshold {zero_threshold} outside (0, 1e-3)"
            )));
        }
        Ok(Self {
            values,
            zero_threshold,
        })
    }

    pub fn values(&self) -> &DVector<C64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<C64> {
        self.values
    }

    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|w| w.norm()).collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    pub fn support(&self) -> Vec<bool> {
        support_at(&self.values, self.zero_threshold)
    }

    pub fn support_size(&self) -> usize {
        self.support().iter().filter(|x| **x).count()
    }
}

fn support_at(values: &DVector<C64>, threshold: f64) -> Vec<bool> {
    let cut = threshold * values.iter().map(|w| w.norm()).fold(0.0, f64::max);
    values.iter().map(|w| w.norm() > cut).collect()
}

fn check_lengths(weights: &[WeightVector]) -> Result<usize> {
    let n = weights.first().map(WeightVector::len).unwrap_or(0);
    if weights.iter().any(|w| w.len() != n) {
        return Err(Error::Domain("weight vectors differ in length".into()));
    }
    Ok(n)
}

/// Index pairs `(i, j)`, `i < j`, in the order used by per-pair reports.
pub fn beam_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect()
}

/// `½ Σ_{i≠j} |wᵢ|ᵀ|w_j|`, i.e. the sum of `|wᵢ|ᵀ|w_j|` over pairs.
pub fn pairwise_cost(weights: &[WeightVector]) -> Result<f64> {
    if weights.len() < 2 {
        return Err(Error::Domain("pairwise cost needs at least two beams".into()));
    }
    check_lengths(weights)?;
    Ok(pair_costs(weights).iter().sum())
}

fn pair_costs(weights: &[WeightVector]) -> Vec<f64> {
    let moduli: Vec<Vec<f64>> = weights.iter().map(WeightVector::moduli).collect();
    beam_pairs(weights.len())
        .into_iter()
        .map(|(i, j)| moduli[i].iter().zip(&moduli[j]).map(|(a, b)| a * b).sum())
        .collect()
}

/// `pₖ = Σ_{j≠k} |w_j|` elementwise (`k` is zero-based).
pub fn penalizing_vector(weights: &[WeightVector], k: usize) -> Result<Vec<f64>> {
    let n = check_lengths(weights)?;
    if k >= weights.len() {
        return Err(Error::Domain(format!("beam index {k} out of range")));
    }
    let mut p = vec![0.0; n];
    for (_, w) in weights.iter().enumerate().filter(|(j, _)| *j != k) {
        for (pi, wi) in p.iter_mut().zip(w.values().iter()) {
            *pi += wi.norm();
        }
    }
    Ok(p)
}

/// Shared-element count for every beam pair (order of [`beam_pairs`]), with
/// supports taken at the given relative threshold.
pub fn shared_count(weights: &[WeightVector], threshold: f64) -> Result<Vec<usize>> {
    check_lengths(weights)?;
    let supports: Vec<Vec<bool>> = weights
        .iter()
        .map(|w| support_at(w.values(), threshold))
        .collect();
    Ok(beam_pairs(weights.len())
        .into_iter()
        .map(|(i, j)| {
            supports[i]
                .iter()
                .zip(&supports[j])
                .filter(|(a, b)| **a && **b)
                .count()
        })
        .collect())
}

/// Elements outside every beam's support.
pub fn uncovered_count(weights: &[WeightVector]) -> usize {
    let supports: Vec<Vec<bool>> = weights.iter().map(WeightVector::support).collect();
    let n = weights.first().map(WeightVector::len).unwrap_or(0);
    (0..n).filter(|&i| supports.iter().all(|s| !s[i])).count()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `randn + j·randn` per element, from the run seed.
    RandomComplexNormal,
    AllOnes,
    UserSupplied(Vec<DVector<C64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReselectionOptions {
    /// Stop once `J⁽ˡ⁻¹⁾ − J⁽ˡ⁾ < epsilon`.
    pub epsilon: f64,
    pub max_outer_iterations: usize,
    pub init: Init,
    pub seed: u64,
    /// A pair counts as disjoint when `|wᵢ|ᵀ|w_j| < threshold·max|wᵢ|·max|w_j|`.
    pub disjoint_cost_threshold: f64,
    /// Relative support cutoff. `None` uses `√disjoint_cost_threshold`, the
    /// largest value for which a disjoint pair can never share an element.
    pub zero_threshold: Option<f64>,
}

impl Default for ReselectionOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_outer_iterations: 100,
            init: Init::RandomComplexNormal,
            seed: 0,
            disjoint_cost_threshold: DEFAULT_DISJOINT_COST_THRESHOLD,
            zero_threshold: None,
        }
    }
}

impl ReselectionOptions {
    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
            .unwrap_or_else(|| self.disjoint_cost_threshold.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::Config("max_outer_iterations must be >= 1".into()));
        }
        if !(self.disjoint_cost_threshold > 0.0 && self.disjoint_cost_threshold < 1.0) {
            return Err(Error::Config(format!(
                "disjoint_cost_threshold must lie in (0, 1), got {}",
                self.disjoint_cost_threshold
            )));
        }
        let z = self.zero_threshold();
        if !(z > 0.0 && z < 1e-3) {
            return Err(Error::Config(format!("zero_threshold {z} outside (0, 1e-3)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisStatus {
    Disjoint,
    ConvergedNonzero,
    IterationCap,
    SubproblemFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub weights: Vec<WeightVector>,
    /// `J⁽⁰⁾ = ∞`, then one entry per completed outer iteration.
    pub cost_history: Vec<f64>,
    /// Per outer iteration, shared counts in [`beam_pairs`] order.
    pub shared_history: Vec<Vec<usize>>,
    pub status: SynthesisStatus,
    pub outer_iterations: usize,
    /// Beam whose subproblem could not be solved.
    pub failed_beam: Option<usize>,
    pub certificate: Option<InfeasibilityCertificate>,
    pub feasibility: Vec<FeasibilityReport>,
    /// Inner steps where the solver's answer was worse than the incumbent and
    /// the incumbent was kept.
    pub incumbent_kept: usize,
    pub solver_iterations: u64,
    pub elapsed: Duration,
}

impl SynthesisResult {
    pub fn final_cost(&self) -> f64 {
        *self.cost_history.last().expect("history starts with J0")
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.weights.iter().map(WeightVector::support_size).collect()
    }

    pub fn uncovered(&self) -> usize {
        uncovered_count(&self.weights)
    }

    pub fn final_shared(&self) -> Vec<usize> {
        shared_count(
            &self.weights,
            self.weights.first().map(|w| w.zero_threshold()).unwrap_or(1e-4),
        )
        .unwrap_or_default()
    }
}

/// Compiled problem: one constraint system per beam on a shared geometry.
#[derive(Debug, Clone)]
pub struct BeamSet {
    pub systems: Vec<ConstraintSystem>,
}

impl BeamSet {
    pub fn compile(specs: &[BeamSpec], geom: &ArrayGeometry, coupling: &CouplingModel) -> Result<Self> {
        if specs.len() < 2 {
            return Err(Error::Spec(format!(
                "reselection needs at least 2 beams, got {}",
                specs.len()
            )));
        }
        let systems = specs
            .iter()
            .map(|s| compile(s, geom, coupling))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { systems })
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.systems[0].dim()
    }
}

/// Compiles the beam specs and runs the reselection loop.
pub fn run(
    specs: &[BeamSpec],
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    solver_opts: &SolverOptions,
    opts: &ReselectionOptions,
) -> Result<SynthesisResult> {
    let set = BeamSet::compile(specs, geom, coupling)?;
    run_compiled(&set, solver_opts, opts)
}

fn initial_weights(n: usize, k: usize, opts: &ReselectionOptions) -> Result<Vec<DVector<C64>>> {
    match &opts.init {
        Init::AllOnes => Ok(vec![DVector::from_element(n, C64::new(1.0, 0.0)); k]),
        Init::RandomComplexNormal => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            Ok((0..k)
                .map(|_| {
                    DVector::from_iterator(
                        n,
                        (0..n).map(|_| {
                            let re: f64 = StandardNormal.sample(&mut rng);
                            let im: f64 = StandardNormal.sample(&mut rng);
                            C64::new(re, im)
                        }),
                    )
                })
                .collect())
        }
        Init::UserSupplied(ws) => {
            if ws.len() != k || ws.iter().any(|w| w.len() != n) {
                return Err(Error::Domain(format!(
                    "user-supplied weights must be {k} vectors of length {n}"
                )));
            }
            Ok(ws.clone())
        }
    }
}

/// Per-pair disjointness test against `threshold·max|wᵢ|·max|w_j|`.
pub fn is_disjoint(weights: &[WeightVector], threshold: f64) -> bool {
    let maxima: Vec<f64> = weights.iter().map(WeightVector::max_modulus).collect();
    beam_pairs(weights.len())
        .into_iter()
        .zip(pair_costs(weights))
        .all(|((i, j), cost)| cost <= threshold * maxima[i] * maxima[j])
}

pub fn run_compiled(
    set: &BeamSet,
    solver_opts: &SolverOptions,
    opts: &ReselectionOptions,
) -> Result<SynthesisResult> {
    opts.validate()?;
    solver_opts.validate()?;
    if set.len() < 2 {
        return Err(Error::Spec("reselection needs at least 2 beams".into()));
    }
    let started = Instant::now();
    let (n, k_beams) = (set.dim(), set.len());
    let zero = opts.zero_threshold();
    let wrap = |v: DVector<C64>| WeightVector::new(v, zero);

    let mut weights = initial_weights(n, k_beams, opts)?
        .into_iter()
        .map(wrap)
        .collect::<Result<Vec<_>>>()?;
    // whether weights[k] is known to satisfy Cₖ
    let mut feasible = vec![false; k_beams];
    let mut solvers: Vec<WeightedL1> = set.systems.iter().map(WeightedL1::new).collect();

    let mut cost_history = vec![f64::INFINITY];
    let mut shared_history = Vec::new();
    let mut incumbent_kept = 0;
    let mut solver_iterations = 0u64;
    let mut failed_beam = None;
    let mut certificate = None;
    let mut stopped_by_epsilon = false;

    'outer: for l in 1..=opts.max_outer_iterations {
        for k in 0..k_beams {
            let p = penalizing_vector(&weights, k)?;
            let sol = solvers[k].solve(&p, solver_opts)?;
            solver_iterations += u64::from(sol.iterations);
            let incumbent = feasible[k].then(|| weighted_l1(&p, weights[k].values()));
            match sol.status {
                SolveStatus::Optimal => {
                    if incumbent.is_some_and(|v| v < sol.objective) {
                        incumbent_kept += 1;
                        debug!("beam {k}: solver objective {} above incumbent", sol.objective);
                    } else {
                        weights[k] = wrap(sol.w)?;
                        feasible[k] = true;
                    }
                }
                SolveStatus::Infeasible => {
                    failed_beam = Some(k);
                    certificate = sol.certificate;
                    break 'outer;
                }
                SolveStatus::MaxIterations => {
                    if feasible[k] {
                        warn!("beam {k}: subproblem stopped early, keeping incumbent");
                        incumbent_kept += 1;
                    } else {
                        failed_beam = Some(k);
                        break 'outer;
                    }
                }
            }
        }
        let cost = pairwise_cost(&weights)?;
        let previous = *cost_history.last().expect("non-empty");
        cost_history.push(cost);
        shared_history.push(shared_count(&weights, zero)?);
        debug!("outer {l}: J = {cost:.6e}, shared = {:?}", shared_history.last());
        if previous - cost < opts.epsilon {
            stopped_by_epsilon = true;
            break;
        }
    }

    let status = if failed_beam.is_some() {
        SynthesisStatus::SubproblemFailure
    } else if is_disjoint(&weights, opts.disjoint_cost_threshold) {
        SynthesisStatus::Disjoint
    } else if stopped_by_epsilon {
        SynthesisStatus::ConvergedNonzero
    } else {
        SynthesisStatus::IterationCap
    };
    let feasibility = set
        .systems
        .iter()
        .zip(&weights)
        .map(|(sys, w)| check_feasibility(w.values(), sys, solver_opts.tol_eq, solver_opts.tol_ineq))
        .collect();
    Ok(SynthesisResult {
        weights,
        outer_iterations: cost_history.len() - 1,
        cost_history,
        shared_history,
        status,
        failed_beam,
        certificate,
        feasibility,
        incumbent_kept,
        solver_iterations,
        elapsed: started.elapsed(),
    })
}

/// Outcome of [`relax_until_disjoint`].
#[derive(Debug, Clone)]
pub struct Relaxation {
    /// Total shift applied to every side-lobe level, in dB.
    pub relaxed_by_db: f64,
    pub specs: Vec<BeamSpec>,
    pub result: SynthesisResult,
    pub attempts: usize,
}

/// Trial-and-error relaxation: loosen every side-lobe level by `step_db`
/// until the run ends disjoint, at most `max_attempts` runs.
pub fn relax_until_disjoint(
    specs: &[BeamSpec],
    geom: &ArrayGeometry,
    coupling: &CouplingModel,
    solver_opts: &SolverOptions,
    opts: &ReselectionOptions,
    step_db: f64,
    max_attempts: usize,
) -> Result<Relaxation> {
    if step_db.is_nan() || step_db <= 0.0 || max_attempts == 0 {
        return Err(Error::Config("relaxation needs step_db > 0 and max_attempts >= 1".into()));
    }
    let mut shift = 0.0;
    let mut last = None;
    for attempt in 1..=max_attempts {
        let relaxed: Vec<BeamSpec> = specs.iter().map(|s| s.relaxed(shift)).collect();
        if relaxed
            .iter()
            .flat_map(|s| &s.sidelobes)
            .any(|r| r.level_db > 0.0)
        {
            break;
        }
        let result = run(&relaxed, geom, coupling, solver_opts, opts)?;
        let done = result.status == SynthesisStatus::Disjoint;
        last = Some(Relaxation {
            relaxed_by_db: shift,
            specs: relaxed,
            result,
            attempts: attempt,
        });
        if done {
            break;
        }
        shift += step_db;
    }
    last.ok_or_else(|| Error::Config("no relaxation attempt could be made".into()))
}
