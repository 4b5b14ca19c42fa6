//! Linear solves and constrained quadratic subproblem minimization.
//!
//! All functions are pure; nothing here holds state between calls.

mod subproblem;

use serde::Serialize;
use thiserror::Error;

use crate::core::{CoreError, SymMatrix, Vector};

pub use subproblem::{
    check_sigma_scaling_inequality, reference_min, solve_prox_subproblem,
    solve_prox_subproblem_operator, solve_tr_subproblem, InnerConfig,
};

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("right-hand side outside the range of the matrix (residual {residual:.3e} > {threshold:.3e})")]
    Range { residual: f64, threshold: f64 },
    #[error("operator is not positive semi-definite: {detail}")]
    NotPsd { detail: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("inner solver reached its budget at accuracy {achieved} < requested {wanted}")]
    InnerSolver {
        wanted: f64,
        achieved: f64,
        best: Box<SubproblemSolution>,
    },
    #[error("unsupported subproblem structure: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// How a subproblem solution was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemMethod {
    /// Unconstrained pseudo-inverse Newton system.
    Direct,
    /// l2-ball constraint via the secular equation on the eigenbasis.
    Secular,
    /// Coordinate-wise closed form (diagonal metric, separable terms).
    Separable,
    /// Accelerated proximal gradient on the model.
    ProxGradient,
    /// Conjugate gradient on the Newton system.
    ConjugateGradient,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// Certified fraction of the achievable model decrease, in (0, 1].
    pub theta_achieved: f64,
    pub method: SubproblemMethod,
    pub inner_iters: usize,
    /// Multiplier of an active l2 trust-region constraint, when that route ran.
    pub lagrange_multiplier: Option<f64>,
    /// False when certification was skipped and the target accuracy is
    /// reported as-is.
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubproblemSolution {
    pub step: Vector,
    /// Model value at `step`; equals `QuadraticModel::evaluate(step)`.
    pub model_value: f64,
    pub certificate: Certificate,
}

/// Symmetric PSD operator given by its matrix-vector product.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &Vector) -> Vector;
}

impl LinearOperator for SymMatrix {
    fn dim(&self) -> usize {
        self.dim()
    }
    fn apply(&self, v: &Vector) -> Vector {
        self.matvec(v)
    }
}

/// Operator built from a closure.
pub struct FnOperator<F: Fn(&Vector) -> Vector> {
    f: F,
    dim: usize,
}

impl<F: Fn(&Vector) -> Vector> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { f, dim }
    }
}

impl<F: Fn(&Vector) -> Vector> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, v: &Vector) -> Vector {
        (self.f)(v)
    }
}

/// Relative cutoff under which eigenvalues are treated as zero by the
/// pseudo-inverse.
const RANK_CUTOFF: f64 = 1e-12;
/// Residual acceptance threshold for range membership.
const RANGE_TOL: f64 = 1e-8;

/// Minimum-norm solution of `H x = b` for symmetric PSD `H` via the
/// eigendecomposition pseudo-inverse. Components of `b` outside the numerical
/// range of `H` make the system inconsistent and are reported as an error.
pub fn psd_solve(h: &SymMatrix, b: &Vector) -> Result<Vector, LinalgError> {
    if h.dim() != b.dim() {
        return Err(LinalgError::Dimension {
            expected: h.dim(),
            got: b.dim(),
        });
    }
    let (vals, q) = h.eigen();
    let vmax = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cutoff = RANK_CUTOFF * vmax.max(1e-300);
    let bhat = q.transpose() * b.as_dvector();
    let mut what = bhat.clone();
    for (i, v) in vals.iter().enumerate() {
        if *v > cutoff {
            what[i] = bhat[i] / v;
        } else {
            what[i] = 0.0;
        }
    }
    let x = Vector::from_dvector(&q * what);
    let residual = h.matvec(&x).sub(b).norm_l2();
    let threshold = RANGE_TOL * b.norm_l2().max(1e-300);
    if residual > threshold {
        return Err(LinalgError::Range {
            residual,
            threshold,
        });
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vector,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Conjugate gradient for `H x = b` with `H` symmetric PSD, touching `H` only
/// through matrix-vector products.
pub fn cg_solve(
    op: &dyn LinearOperator,
    b: &Vector,
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome, LinalgError> {
    let n = op.dim();
    if b.dim() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            got: b.dim(),
        });
    }
    let bnorm = b.norm_l2();
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            solution: Vector::zeros(n),
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        });
    }
    let mut x = Vector::zeros(n);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    let mut iterations = 0;
    for _ in 0..max_iter {
        if rs.sqrt() <= rel_tol * bnorm {
            break;
        }
        let hp = op.apply(&p);
        let php = p.dot(&hp);
        let pnorm2 = p.dot(&p);
        if php < -1e-12 * pnorm2 {
            return Err(LinalgError::NotPsd {
                detail: format!("curvature p'Hp = {php:.3e} for ||p||^2 = {pnorm2:.3e}"),
            });
        }
        if php <= 1e-300 {
            // Singular direction; no further progress possible.
            break;
        }
        let alpha = rs / php;
        x = x.add_scaled(alpha, &p);
        r = r.add_scaled(-alpha, &hp);
        let rs_new = r.dot(&r);
        p = r.add_scaled(rs_new / rs, &p);
        rs = rs_new;
        iterations += 1;
    }
    let rel_residual = rs.sqrt() / bnorm;
    Ok(CgOutcome {
        solution: x,
        iterations,
        rel_residual,
        converged: rel_residual <= rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_solve_identity() {
        let x = psd_solve(
            &SymMatrix::identity(2),
            &Vector::from_slice(&[3.0, 4.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(x.as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn psd_solve_zeroes_null_direction() {
        let h = SymMatrix::diagonal(&[2.0, 0.0]);
        let x = psd_solve(&h, &Vector::from_slice(&[4.0, 0.0]).unwrap()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn psd_solve_detects_out_of_range() {
        let h = SymMatrix::diagonal(&[2.0, 0.0]);
        let r = psd_solve(&h, &Vector::from_slice(&[4.0, 1.0]).unwrap());
        assert!(matches!(r, Err(LinalgError::Range { .. })));
    }

    #[test]
    fn psd_solve_matches_closed_form_2x2() {
        // H = [[4,2],[2,2]], det = 4, inverse = 1/4 [[2,-2],[-2,4]].
        let h = SymMatrix::from_fn_upper(2, |i, j| match (i, j) {
            (0, 0) => 4.0,
            (1, 1) => 2.0,
            _ => 2.0,
        });
        let b = Vector::from_slice(&[2.0, 0.0]).unwrap();
        let x = psd_solve(&h, &b).unwrap();
        let expected = [1.0, -1.0]; // 1/4 * (2*2, -2*2)
        assert!((x[0] - expected[0]).abs() < 1e-12);
        assert!((x[1] - expected[1]).abs() < 1e-12);
    }

    #[test]
    fn cg_identity_converges_immediately() {
        let h = SymMatrix::identity(3);
        let b = Vector::from_slice(&[1.0, -2.0, 0.5]).unwrap();
        let out = cg_solve(&h, &b, 1e-12, 10).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 1);
        assert!(out.solution.sub(&b).norm_l2() < 1e-12);
    }

    #[test]
    fn cg_matches_dense_solve() {
        let h = SymMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = Vector::from_slice(&[1.0; 5]).unwrap();
        let out = cg_solve(&h, &b, 1e-10, 100).unwrap();
        let dense = psd_solve(&h, &b).unwrap();
        assert!(out.solution.sub(&dense).norm_l2() < 1e-8);
    }

    #[test]
    fn cg_finite_termination_three_eigenvalues() {
        // Distinct eigenvalues {1, 2, 3} with multiplicity; CG needs at most 3 steps.
        let h = SymMatrix::diagonal(&[1.0, 2.0, 3.0, 2.0, 1.0]);
        let b = Vector::from_slice(&[1.0, 1.0, 1.0, -1.0, 2.0]).unwrap();
        let out = cg_solve(&h, &b, 1e-12, 3).unwrap();
        assert!(out.converged, "rel residual {}", out.rel_residual);
    }

    #[test]
    fn cg_rejects_indefinite() {
        let h = SymMatrix::diagonal(&[1.0, -1.0]);
        let b = Vector::from_slice(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            cg_solve(&h, &b, 1e-10, 10),
            Err(LinalgError::NotPsd { .. })
        ));
    }
}
