//! Shared domain types: vectors, symmetric matrices, norms, objective
//! interfaces, quadratic models, level-set domains and solve traces.
//!
//! Everything here is immutable after construction and safe to share across
//! threads.

mod matrix;
mod model;
mod objective;
mod trace;
mod vector;

use serde::Serialize;
use thiserror::Error;

pub use matrix::SymMatrix;
pub(crate) use matrix::power_iteration_lambda_max;
pub use model::QuadraticModel;
pub use objective::{
    level_set_contains, CompositeObjective, ConditionClass, LevelSetDomain, Objective, ProxTerm,
    StabilityMeta,
};
pub use trace::{IterRecord, SolveTrace, TerminalStatus};
pub use vector::Vector;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("non-finite value encountered: {what}")]
    NonFinite { what: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("model anchor lies outside the domain of the prox term")]
    AnchorOutsideProxDomain,
}

/// Norm used for trust regions, stability measurements and diameters. The
/// metric kind is a semi-norm when the matrix is singular.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    L2,
    Linf,
    Metric(SymMatrix),
}

impl NormSpec {
    pub fn norm(&self, v: &Vector) -> f64 {
        match self {
            NormSpec::L2 => v.norm_l2(),
            NormSpec::Linf => v.norm_linf(),
            NormSpec::Metric(m) => m.quad_form(v).max(0.0).sqrt(),
        }
    }

    pub fn distance(&self, a: &Vector, b: &Vector) -> f64 {
        self.norm(&a.sub(b))
    }

    pub fn label(&self) -> &'static str {
        match self {
            NormSpec::L2 => "l2",
            NormSpec::Linf => "linf",
            NormSpec::Metric(_) => "metric",
        }
    }
}

impl Serialize for NormSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// v^T M v, the squared semi-norm induced by a PSD matrix.
pub fn weighted_norm_sq(v: &Vector, m: &SymMatrix) -> Result<f64, CoreError> {
    if v.dim() != m.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: m.dim(),
            got: v.dim(),
        });
    }
    Ok(m.quad_form(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_norm_identity() {
        let v = Vector::from_slice(&[1.0, 2.0]).unwrap();
        assert_eq!(weighted_norm_sq(&v, &SymMatrix::identity(2)).unwrap(), 5.0);
    }

    #[test]
    fn weighted_norm_diagonal_pick() {
        let v = Vector::from_slice(&[1.0, 0.0]).unwrap();
        let m = SymMatrix::diagonal(&[3.0, 7.0]);
        assert_eq!(weighted_norm_sq(&v, &m).unwrap(), 3.0);
    }

    #[test]
    fn weighted_norm_full_expansion() {
        // v = (1,1), M = [[2,1],[1,2]]: v'Mv = 2 + 1 + 1 + 2 = 6.
        let v = Vector::from_slice(&[1.0, 1.0]).unwrap();
        let m = SymMatrix::from_fn_upper(2, |i, j| if i == j { 2.0 } else { 1.0 });
        assert_eq!(weighted_norm_sq(&v, &m).unwrap(), 6.0);
    }

    #[test]
    fn weighted_norm_dim_mismatch() {
        let v = Vector::from_slice(&[1.0]).unwrap();
        assert!(weighted_norm_sq(&v, &SymMatrix::identity(2)).is_err());
    }

    #[test]
    fn linf_norm() {
        let v = Vector::from_slice(&[1.0, -3.0]).unwrap();
        assert_eq!(NormSpec::Linf.norm(&v), 3.0);
    }
}
