//! Test problems: generalized linear models over scalar links, quadratics,
//! the counterexamples, and LIBSVM ingestion.

mod counterexamples;
mod glm;
mod libsvm;
mod link;

use std::sync::Arc;

use thiserror::Error;

use crate::core::{
    CompositeObjective, ConditionClass, Objective, ProxTerm, StabilityMeta, SymMatrix, Vector,
};

pub use counterexamples::{
    make_counterexample, newton_ratio_power_even, CounterexampleKind, NegExpLinearObjective,
    PowerEvenObjective, TwoDimExpObjective,
};
pub use glm::{GlmObjective, RowNorm};
pub use libsvm::{load_libsvm, load_libsvm_with_link, parse_libsvm, LibsvmData};
pub use link::ScalarLink;

#[derive(Debug, Error)]
pub enum ObjectivesError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no usable data rows")]
    EmptyData,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// f(x) = 1/2 x' Q x for a PSD matrix Q. Constant Hessian, so the stability
/// ratio is identically one.
pub struct Quadratic {
    q: SymMatrix,
}

impl Quadratic {
    pub fn new(q: SymMatrix) -> Self {
        Self { q }
    }

    /// 1/2 ||x||^2
    pub fn isotropic(dim: usize) -> Self {
        Self {
            q: SymMatrix::identity(dim),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self {
            q: SymMatrix::diagonal(entries),
        }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.q.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * self.q.quad_form(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.q.matvec(x)
    }

    fn hessian(&self, _x: &Vector) -> SymMatrix {
        self.q.clone()
    }

    fn hvp(&self, _x: &Vector, v: &Vector) -> Vector {
        self.q.matvec(v)
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(Vector::zeros(self.dim()))
    }

    fn stability_metadata(&self) -> Option<StabilityMeta> {
        Some(StabilityMeta {
            exact_c: Some(1.0),
            condition: None,
            interval: None,
        })
    }

    fn name(&self) -> &str {
        "quadratic"
    }
}

/// A named problem instance: composite objective plus the canonical start.
pub struct ZooProblem {
    pub name: String,
    pub composite: CompositeObjective,
    pub x0: Vector,
}

/// Canonical instances used across tests and the experiment harness.
pub mod zoo {
    use super::*;

    pub fn quadratic(dim: usize) -> ZooProblem {
        ZooProblem {
            name: "quadratic".into(),
            composite: CompositeObjective::smooth_only(Arc::new(Quadratic::isotropic(dim))),
            x0: Vector::new(vec![3.0; dim]).unwrap(),
        }
    }

    /// 1/2 (x1^2 + kappa x2^2); gradient descent needs ~kappa iterations.
    pub fn stiff_quadratic(kappa: f64) -> ZooProblem {
        ZooProblem {
            name: "stiff_quadratic".into(),
            composite: CompositeObjective::smooth_only(Arc::new(Quadratic::diagonal(&[
                1.0, kappa,
            ]))),
            x0: Vector::from_slice(&[1.0, 1.0]).unwrap(),
        }
    }

    pub fn power_even(k: u32, x0: f64) -> Result<ZooProblem, ObjectivesError> {
        Ok(ZooProblem {
            name: format!("power_even_k{k}"),
            composite: CompositeObjective::smooth_only(Arc::new(PowerEvenObjective::new(k)?)),
            x0: Vector::new(vec![x0]).map_err(|e| ObjectivesError::InvalidParams(e.to_string()))?,
        })
    }

    pub fn two_dim_exp(k: f64) -> ZooProblem {
        ZooProblem {
            name: "two_dim_exp".into(),
            composite: CompositeObjective::smooth_only(Arc::new(TwoDimExpObjective)),
            x0: Vector::from_slice(&[k, -k]).unwrap(),
        }
    }

    pub fn neg_exp_linear(x0: f64) -> ZooProblem {
        ZooProblem {
            name: "neg_exp_linear".into(),
            composite: CompositeObjective::smooth_only(Arc::new(NegExpLinearObjective)),
            x0: Vector::new(vec![x0]).unwrap(),
        }
    }

    /// f(x) = log(1+e^-x) + log(1+e^x), minimized at 0 with value 2 ln 2.
    /// The sub-level set from x0 = s is exactly [-s, s].
    pub fn logistic_pair(s: f64) -> ZooProblem {
        let smooth = GlmObjective::from_rows(
            vec![vec![1.0], vec![-1.0]],
            ScalarLink::Logistic,
            None,
        )
        .expect("static rows")
        .with_f_star(2.0 * 2.0f64.ln(), Vector::zeros(1))
        .with_meta(StabilityMeta {
            exact_c: None,
            condition: Some(ConditionClass::QuasiSelfConcordant { k: 1.0 }),
            interval: Some((-s, s)),
        })
        .with_name("logistic_pair");
        ZooProblem {
            name: "logistic_pair".into(),
            composite: CompositeObjective::smooth_only(Arc::new(smooth)),
            x0: Vector::new(vec![s]).unwrap(),
        }
    }

    /// u ln u restricted to [a, b] via a box indicator; the smooth extension
    /// has its minimum -1/e at u = 1/e.
    pub fn entropy_interval(a: f64, b: f64) -> Result<ZooProblem, ObjectivesError> {
        if !(a > 0.0 && b > a) {
            return Err(ObjectivesError::InvalidParams(
                "entropy interval needs 0 < a < b".into(),
            ));
        }
        let link = ScalarLink::Entropy;
        let inv_e = 1.0 / std::f64::consts::E;
        let smooth = GlmObjective::one_dim(link)
            .with_f_star(-inv_e, Vector::new(vec![inv_e]).unwrap())
            .with_meta(StabilityMeta {
                exact_c: link.class_c_on(a, b),
                condition: link.condition_class_on(a, b),
                interval: Some((a, b)),
            })
            .with_name("entropy");
        let u_star = inv_e.clamp(a, b);
        let composite = CompositeObjective::new(
            Arc::new(smooth),
            ProxTerm::box_indicator(
                Vector::new(vec![a]).unwrap(),
                Vector::new(vec![b]).unwrap(),
            )
            .map_err(|e| ObjectivesError::InvalidParams(e.to_string()))?,
        )
        .with_f_star(u_star * u_star.ln());
        Ok(ZooProblem {
            name: "entropy_interval".into(),
            composite,
            x0: Vector::new(vec![b]).unwrap(),
        })
    }

    /// e^u - u restricted to [a, b]; smooth minimum 1 at u = 0.
    pub fn exp_shift_interval(a: f64, b: f64) -> Result<ZooProblem, ObjectivesError> {
        if b <= a {
            return Err(ObjectivesError::InvalidParams("need a < b".into()));
        }
        let link = ScalarLink::ExpShift;
        let smooth = GlmObjective::one_dim(link)
            .with_f_star(1.0, Vector::zeros(1))
            .with_meta(StabilityMeta {
                exact_c: link.class_c_on(a, b),
                condition: link.condition_class_on(a, b),
                interval: Some((a, b)),
            })
            .with_name("exp_shift");
        let u_star = 0.0f64.clamp(a, b);
        let composite = CompositeObjective::new(
            Arc::new(smooth),
            ProxTerm::box_indicator(
                Vector::new(vec![a]).unwrap(),
                Vector::new(vec![b]).unwrap(),
            )
            .map_err(|e| ObjectivesError::InvalidParams(e.to_string()))?,
        )
        .with_f_star(u_star.exp() - u_star);
        Ok(ZooProblem {
            name: "exp_shift_interval".into(),
            composite,
            x0: Vector::new(vec![b]).unwrap(),
        })
    }

    /// u^q restricted to [a, b] with a > 0 and q in (1, 2].
    pub fn robust_q_interval(a: f64, b: f64, q: f64) -> Result<ZooProblem, ObjectivesError> {
        if !(a > 0.0 && b > a) {
            return Err(ObjectivesError::InvalidParams(
                "robust interval needs 0 < a < b".into(),
            ));
        }
        if !(q > 1.0 && q <= 2.0) {
            return Err(ObjectivesError::InvalidParams("q must lie in (1, 2]".into()));
        }
        let link = ScalarLink::RobustQ { q };
        let smooth = GlmObjective::one_dim(link)
            .with_meta(StabilityMeta {
                exact_c: link.class_c_on(a, b),
                condition: link.condition_class_on(a, b),
                interval: Some((a, b)),
            })
            .with_name("robust_q");
        let composite = CompositeObjective::new(
            Arc::new(smooth),
            ProxTerm::box_indicator(
                Vector::new(vec![a]).unwrap(),
                Vector::new(vec![b]).unwrap(),
            )
            .map_err(|e| ObjectivesError::InvalidParams(e.to_string()))?,
        )
        .with_f_star(a.powf(q));
        Ok(ZooProblem {
            name: "robust_q_interval".into(),
            composite,
            x0: Vector::new(vec![b]).unwrap(),
        })
    }

    /// All smooth 1-D interval instances with closed-form class constants,
    /// used by derivative and bound sweeps in tests.
    pub fn interval_instances() -> Vec<ZooProblem> {
        vec![
            entropy_interval(1.0, 4.0).unwrap(),
            exp_shift_interval(-2.0, 2.0).unwrap(),
            robust_q_interval(1.0, 4.0, 1.5).unwrap(),
            logistic_pair(2.0),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_composite_minimum_is_left_endpoint() {
        let p = zoo::entropy_interval(1.0, 4.0).unwrap();
        // 1/e < 1 so the constrained minimum sits at u = 1 with value 0.
        assert_eq!(p.composite.f_star, Some(0.0));
        assert_eq!(p.composite.smooth.f_star(), Some(-(1.0f64 / std::f64::consts::E)));
    }

    #[test]
    fn logistic_pair_symmetric_minimum() {
        let p = zoo::logistic_pair(2.0);
        let at0 = p.composite.value(&Vector::zeros(1));
        assert!((at0 - 2.0 * 2.0f64.ln()).abs() < 1e-15);
        // Level set from x0 = 2 is [-2, 2]: endpoints are on the boundary.
        let dom = crate::core::LevelSetDomain::new(
            p.composite.clone(),
            p.x0.clone(),
            crate::core::NormSpec::L2,
        )
        .unwrap();
        assert!(dom.contains(&Vector::new(vec![-2.0]).unwrap()));
        assert!(!dom.contains(&Vector::new(vec![2.2]).unwrap()));
    }
}
