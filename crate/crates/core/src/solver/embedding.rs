//! Real embedding of the complex weighted-l1 subproblem as a second-order
//! cone program.
//!
//! Variables are stacked as `x = [Re w (N), Im w (N), t (N)]`, where `t` is
//! the epigraph of the element moduli. The program is written in the form
//! `minimize qᵀx  s.t.  A·x + s = b,  s ∈ K`:
//!
//! * a complex equality `cᴴw = β` gives two rows of the zero cone,
//!   `[Re c, Im c]·(Re w, Im w) = Re β` and `[-Im c, Re c]·(Re w, Im w) = Im β`;
//! * each element gives one 3-dimensional cone `(tᵢ, Re wᵢ, Im wᵢ)`;
//! * each magnitude bound `|cᴴw|² ≤ τ` gives one 3-dimensional cone
//!   `(√τ, Re cᴴw, Im cᴴw)`.
//!
//! The mapping back is `w = x[..N] + j·x[N..2N]`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::SupportedConeT;
use nalgebra::DVector;

use crate::array::C64;
use crate::constraints::ConstraintSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Zero(d) | Cone::SecondOrder(d) => d,
        }
    }

    fn to_clarabel(self) -> SupportedConeT<f64> {
        match self {
            Cone::Zero(d) => SupportedConeT::ZeroConeT(d),
            Cone::SecondOrder(d) => SupportedConeT::SecondOrderConeT(d),
        }
    }
}

/// One real constraint row: sparse coefficients over `x` plus the rhs.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Real cone program equivalent to a [`ConstraintSystem`] with a per-element
/// cost vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeProgram {
    pub n_vars: usize,
    pub cost: Vec<f64>,
    pub rows: Vec<Row>,
    pub cones: Vec<Cone>,
}

impl ConeProgram {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn to_clarabel(&self) -> (CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_vars];
        for (r, row) in self.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                cols[j].push((r, v));
            }
        }
        let mut colptr = Vec::with_capacity(self.n_vars + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in &cols {
            for &(r, v) in col {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(self.rows.len(), self.n_vars, colptr, rowval, nzval);
        let b = self.rows.iter().map(|r| r.rhs).collect();
        let cones = self.cones.iter().map(|c| c.to_clarabel()).collect();
        (a, b, cones)
    }

    /// `Aᵀz` for a dual vector `z`.
    pub fn transpose_apply(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vars];
        for (row, &zi) in self.rows.iter().zip(z) {
            for &(j, v) in &row.coeffs {
                out[j] += v * zi;
            }
        }
        out
    }

    pub fn rhs_dot(&self, z: &[f64]) -> f64 {
        self.rows.iter().zip(z).map(|(r, zi)| r.rhs * zi).sum()
    }
}

/// Real coefficient rows of `Re(cᴴw)` and `Im(cᴴw)` over `(Re w, Im w)`.
pub(crate) fn real_rows(c: &DVector<C64>) -> [Vec<(usize, f64)>; 2] {
    let n = c.len();
    let mut re = Vec::with_capacity(2 * n);
    let mut im = Vec::with_capacity(2 * n);
    for (i, ci) in c.iter().enumerate() {
        re.push((i, ci.re));
        re.push((n + i, ci.im));
        im.push((i, -ci.im));
        im.push((n + i, ci.re));
    }
    [re, im]
}

/// Builds the cone program over every bound in the system, with zero cost.
pub fn real_embedding(sys: &ConstraintSystem) -> ConeProgram {
    let all: Vec<usize> = (0..sys.bounds.len()).collect();
    embed_subset(sys, &vec![0.0; sys.dim()], &all, 1.0)
}

/// Builds the cone program with cost `p` on the epigraph variables and only
/// the bounds listed in `bounds`. Every bound radius is scaled by `shrink`.
pub(crate) fn embed_subset(
    sys: &ConstraintSystem,
    p: &[f64],
    bounds: &[usize],
    shrink: f64,
) -> ConeProgram {
    let n = sys.dim();
    let mut rows = Vec::with_capacity(2 * sys.equalities.len() + 3 * (n + bounds.len()));
    let mut cones = Vec::with_capacity(1 + n + bounds.len());

    for eq in &sys.equalities {
        let [re, im] = real_rows(&eq.row);
        rows.push(Row {
            coeffs: re,
            rhs: eq.rhs.re,
        });
        rows.push(Row {
            coeffs: im,
            rhs: eq.rhs.im,
        });
    }
    cones.push(Cone::Zero(2 * sys.equalities.len()));

    for i in 0..n {
        for col in [2 * n + i, i, n + i] {
            rows.push(Row {
                coeffs: vec![(col, -1.0)],
                rhs: 0.0,
            });
        }
        cones.push(Cone::SecondOrder(3));
    }

    for &k in bounds {
        let b = &sys.bounds[k];
        let [re, im] = real_rows(&b.row);
        rows.push(Row {
            coeffs: Vec::new(),
            rhs: b.bound.sqrt() * shrink,
        });
        for coeffs in [re, im] {
            rows.push(Row {
                coeffs: coeffs.into_iter().map(|(j, v)| (j, -v)).collect(),
                rhs: 0.0,
            });
        }
        cones.push(Cone::SecondOrder(3));
    }

    let mut cost = vec![0.0; 3 * n];
    cost[2 * n..].copy_from_slice(p);
    ConeProgram {
        n_vars: 3 * n,
        cost,
        rows,
        cones,
    }
}

pub fn to_complex(x: &[f64], n: usize) -> DVector<C64> {
    DVector::from_iterator(n, (0..n).map(|i| C64::new(x[i], x[n + i])))
}

/// Inverse of [`to_complex`], with the epigraph set to the element moduli.
pub fn from_complex(w: &DVector<C64>) -> Vec<f64> {
    let n = w.len();
    let mut x = vec![0.0; 3 * n];
    for (i, wi) in w.iter().enumerate() {
        x[i] = wi.re;
        x[n + i] = wi.im;
        x[2 * n + i] = wi.norm();
    }
    x
}
