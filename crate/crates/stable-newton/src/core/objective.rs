use std::sync::Arc;

use serde::Serialize;

use super::{CoreError, NormSpec, SymMatrix, Vector};

/// Twice differentiable convex function with analytic derivatives.
///
/// Implementations must be pure: repeated evaluation at the same point yields
/// the same result, and evaluation never mutates observable state. `value`
/// may return `+inf` outside the natural domain of the function; `gradient`
/// and `hessian` must only be queried where `value` is finite.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> SymMatrix;

    /// Hessian-vector product. The default forms the dense Hessian; matrix
    /// aware implementations override this with a cheaper path.
    fn hvp(&self, x: &Vector, v: &Vector) -> Vector {
        self.hessian(x).matvec(v)
    }

    /// Minimum value, when known analytically or bootstrapped.
    fn f_star(&self) -> Option<f64> {
        None
    }

    fn minimizer(&self) -> Option<Vector> {
        None
    }

    /// Declared stability information for this function class, if any.
    fn stability_metadata(&self) -> Option<StabilityMeta> {
        None
    }

    /// Subsampled Hessian estimate for objectives built on a data matrix;
    /// `None` when the objective has no row structure to sketch.
    fn sketched_hessian(&self, x: &Vector, rows: usize, seed: u64) -> Option<SymMatrix> {
        let _ = (x, rows, seed);
        None
    }

    fn name(&self) -> &str {
        "objective"
    }
}

/// Sufficient-condition classes with closed-form stability bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ConditionClass {
    /// L-Lipschitz gradient and mu-strongly convex.
    SmoothStronglyConvex { l: f64, mu: f64 },
    /// M-Lipschitz Hessian and mu-strongly convex.
    LipschitzHessianStronglyConvex { m: f64, mu: f64 },
    /// k-self-concordant with L-Lipschitz gradient.
    SelfConcordantSmooth { k: f64, l: f64 },
    /// k-quasi-self-concordant.
    QuasiSelfConcordant { k: f64 },
}

/// Per-class stability facts an objective can declare about itself.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityMeta {
    /// Exact stability constant on the declared interval, when closed form.
    pub exact_c: Option<f64>,
    /// Condition class whose bound formula applies (with the domain diameter).
    pub condition: Option<ConditionClass>,
    /// Declared 1-D interval the constants refer to.
    pub interval: Option<(f64, f64)>,
}

/// Proximable convex term `g` of a composite objective. Indicator kinds
/// return 0 inside their set and `+inf` outside; a tiny slack absorbs
/// floating-point drift of feasible iterates.
#[derive(Debug, Clone)]
pub enum ProxTerm {
    Zero,
    L1 { lambda: f64 },
    BoxIndicator { lo: Vector, hi: Vector },
    BallIndicator { center: Vector, radius: f64, norm: NormSpec },
}

const INDICATOR_SLACK: f64 = 1e-12;

impl ProxTerm {
    pub fn l1(lambda: f64) -> Result<Self, CoreError> {
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(CoreError::InvalidParam(format!(
                "l1 weight must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(ProxTerm::L1 { lambda })
    }

    pub fn box_indicator(lo: Vector, hi: Vector) -> Result<Self, CoreError> {
        if lo.dim() != hi.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
            return Err(CoreError::InvalidParam("empty box".into()));
        }
        Ok(ProxTerm::BoxIndicator { lo, hi })
    }

    pub fn ball_indicator(center: Vector, radius: f64, norm: NormSpec) -> Result<Self, CoreError> {
        if radius <= 0.0 || !radius.is_finite() {
            return Err(CoreError::InvalidParam(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(ProxTerm::BallIndicator {
            center,
            radius,
            norm,
        })
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            ProxTerm::Zero => 0.0,
            ProxTerm::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxTerm::BoxIndicator { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi.iter())).all(|(v, (a, b))| {
                    let slack = INDICATOR_SLACK * (1.0 + a.abs().max(b.abs()));
                    *v >= a - slack && *v <= b + slack
                });
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxTerm::BallIndicator {
                center,
                radius,
                norm,
            } => {
                let d = norm.norm(&x.sub(center));
                if d <= radius * (1.0 + INDICATOR_SLACK) + INDICATOR_SLACK {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProxTerm::Zero) || matches!(self, ProxTerm::L1 { lambda } if *lambda == 0.0)
    }

    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            ProxTerm::BoxIndicator { .. } | ProxTerm::BallIndicator { .. }
        )
    }
}

/// F = f + g with f smooth convex and g proximable convex (possibly
/// extended-valued).
#[derive(Clone)]
pub struct CompositeObjective {
    pub smooth: Arc<dyn Objective>,
    pub nonsmooth: ProxTerm,
    /// Minimum of F, when known analytically or bootstrapped to high accuracy.
    pub f_star: Option<f64>,
}

impl CompositeObjective {
    pub fn new(smooth: Arc<dyn Objective>, nonsmooth: ProxTerm) -> Self {
        Self {
            smooth,
            nonsmooth,
            f_star: None,
        }
    }

    pub fn smooth_only(smooth: Arc<dyn Objective>) -> Self {
        let f_star = smooth.f_star();
        Self {
            smooth,
            nonsmooth: ProxTerm::Zero,
            f_star,
        }
    }

    pub fn with_f_star(mut self, f_star: f64) -> Self {
        self.f_star = Some(f_star);
        self
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn smooth_value(&self, x: &Vector) -> f64 {
        self.smooth.value(x)
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.smooth.value(x) + self.nonsmooth.value(x)
    }
}

/// Sub-level set of a composite objective anchored at `x0`, the region where
/// all stability constants are measured.
#[derive(Clone)]
pub struct LevelSetDomain {
    pub objective: CompositeObjective,
    pub x0: Vector,
    level: f64,
    pub norm: NormSpec,
    diameter_estimate: Option<f64>,
}

const LEVEL_SET_TOL: f64 = 1e-12;

impl LevelSetDomain {
    pub fn new(objective: CompositeObjective, x0: Vector, norm: NormSpec) -> Result<Self, CoreError> {
        if x0.dim() != objective.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: objective.dim(),
                got: x0.dim(),
            });
        }
        let level = objective.value(&x0);
        if !level.is_finite() {
            return Err(CoreError::InvalidParam(
                "anchor point has non-finite objective value".into(),
            ));
        }
        Ok(Self {
            objective,
            x0,
            level,
            norm,
            diameter_estimate: None,
        })
    }

    pub fn with_diameter(mut self, d: f64) -> Self {
        self.diameter_estimate = Some(d);
        self
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.objective.value(x) <= self.level + LEVEL_SET_TOL
    }

    /// Diameter in the domain's norm: analytic for box and ball indicator
    /// domains, otherwise whatever estimate was recorded (sampling fills it).
    pub fn diameter_estimate(&self) -> Option<f64> {
        if let Some(d) = self.diameter_estimate {
            return Some(d);
        }
        match &self.objective.nonsmooth {
            ProxTerm::BoxIndicator { lo, hi } => {
                let edges = hi.sub(lo);
                Some(self.norm.norm(&edges))
            }
            ProxTerm::BallIndicator { radius, norm, .. } if norm == &self.norm => {
                Some(2.0 * radius)
            }
            _ => None,
        }
    }

    pub(crate) fn record_diameter(&mut self, d: f64) {
        let cur = self.diameter_estimate.unwrap_or(0.0);
        self.diameter_estimate = Some(cur.max(d));
    }
}

/// True iff `x` lies in the sub-level set, with absolute tolerance to absorb
/// roundoff at the boundary.
pub fn level_set_contains(dom: &LevelSetDomain, x: &Vector) -> bool {
    dom.contains(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Quadratic;

    fn half_x_sq() -> Arc<dyn Objective> {
        Arc::new(Quadratic::isotropic(1))
    }

    #[test]
    fn level_set_membership() {
        let comp = CompositeObjective::smooth_only(half_x_sq());
        let x0 = Vector::from_slice(&[2.0]).unwrap();
        let dom = LevelSetDomain::new(comp, x0.clone(), NormSpec::L2).unwrap();
        assert!(dom.contains(&x0));
        assert!(dom.contains(&Vector::from_slice(&[1.0]).unwrap()));
        assert!(!dom.contains(&Vector::from_slice(&[3.0]).unwrap()));
    }

    #[test]
    fn box_indicator_values() {
        let g = ProxTerm::box_indicator(
            Vector::from_slice(&[-1.0]).unwrap(),
            Vector::from_slice(&[1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(g.value(&Vector::from_slice(&[0.5]).unwrap()), 0.0);
        assert_eq!(g.value(&Vector::from_slice(&[1.5]).unwrap()), f64::INFINITY);
    }

    #[test]
    fn l1_value() {
        let g = ProxTerm::l1(0.5).unwrap();
        assert_eq!(g.value(&Vector::from_slice(&[1.0, -3.0]).unwrap()), 2.0);
    }

    #[test]
    fn box_diameter_in_norm() {
        let comp = CompositeObjective::new(
            half_x_sq(),
            ProxTerm::box_indicator(
                Vector::from_slice(&[-2.0]).unwrap(),
                Vector::from_slice(&[2.0]).unwrap(),
            )
            .unwrap(),
        );
        let dom = LevelSetDomain::new(comp, Vector::from_slice(&[1.0]).unwrap(), NormSpec::L2)
            .unwrap();
        assert_eq!(dom.diameter_estimate(), Some(4.0));
    }
}
