use crate::core::{Objective, SymMatrix, Vector};

use super::ObjectivesError;

/// f(x) = x^(2k), one-dimensional. A full Newton step decreases the value by
/// the fixed factor `newton_ratio_power_even(k)` regardless of x, so the
/// method is linearly and not quadratically convergent here.
pub struct PowerEvenObjective {
    k: u32,
}

impl PowerEvenObjective {
    pub fn new(k: u32) -> Result<Self, ObjectivesError> {
        if k < 1 {
            return Err(ObjectivesError::InvalidParams("k must be >= 1".into()));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

impl Objective for PowerEvenObjective {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &Vector) -> f64 {
        x[0].powi(2 * self.k as i32)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let p = 2 * self.k as i32;
        Vector::from_slice(&[f64::from(p) * x[0].powi(p - 1)]).expect("finite by construction")
    }

    fn hessian(&self, x: &Vector) -> SymMatrix {
        let p = 2 * self.k as i32;
        SymMatrix::diagonal(&[f64::from(p) * f64::from(p - 1) * x[0].powi(p - 2)])
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(Vector::zeros(1))
    }

    fn name(&self) -> &str {
        "power_even"
    }
}

/// Per-step value ratio of a full Newton step on x^(2k):
/// (1 - 1/(2k - 1))^(2k).
pub fn newton_ratio_power_even(k: u32) -> f64 {
    let p = 2.0 * f64::from(k);
    (1.0 - 1.0 / (p - 1.0)).powi(2 * k as i32)
}

/// f(x, y) = exp(-x) + x + exp(-y) + y - 2, minimized at the origin with
/// value 0. Started from (k, -k), exact line search along the Newton
/// direction stalls while a unit-radius max-norm trust region contracts at a
/// constant rate.
pub struct TwoDimExpObjective;

impl Objective for TwoDimExpObjective {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Vector) -> f64 {
        (-x[0]).exp() + x[0] + (-x[1]).exp() + x[1] - 2.0
    }

    fn gradient(&self, x: &Vector) -> Vector {
        Vector::new(vec![1.0 - (-x[0]).exp(), 1.0 - (-x[1]).exp()])
            .expect("finite by construction")
    }

    fn hessian(&self, x: &Vector) -> SymMatrix {
        SymMatrix::diagonal(&[(-x[0]).exp(), (-x[1]).exp()])
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(Vector::zeros(2))
    }

    fn name(&self) -> &str {
        "two_dim_exp"
    }
}

/// f(x) = exp(-x) + x - 1, minimized at 0 with value 0. A unit Newton step
/// from x0 = k lands at k + 1 - e^k, far past the minimum; a damped step is
/// required for global convergence.
pub struct NegExpLinearObjective;

impl Objective for NegExpLinearObjective {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &Vector) -> f64 {
        (-x[0]).exp() + x[0] - 1.0
    }

    fn gradient(&self, x: &Vector) -> Vector {
        Vector::new(vec![1.0 - (-x[0]).exp()]).expect("finite by construction")
    }

    fn hessian(&self, x: &Vector) -> SymMatrix {
        SymMatrix::diagonal(&[(-x[0]).exp()])
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(Vector::zeros(1))
    }

    fn name(&self) -> &str {
        "neg_exp_linear"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CounterexampleKind {
    PowerEven { k: u32 },
    TwoDimExp,
    NegExpLinear,
}

pub fn make_counterexample(
    kind: CounterexampleKind,
) -> Result<std::sync::Arc<dyn Objective>, ObjectivesError> {
    Ok(match kind {
        CounterexampleKind::PowerEven { k } => std::sync::Arc::new(PowerEvenObjective::new(k)?),
        CounterexampleKind::TwoDimExp => std::sync::Arc::new(TwoDimExpObjective),
        CounterexampleKind::NegExpLinear => std::sync::Arc::new(NegExpLinearObjective),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_even_derivatives_at_three() {
        // f = x^4: f(3) = 81, f'(3) = 108, f''(3) = 108.
        let f = PowerEvenObjective::new(2).unwrap();
        let x = Vector::from_slice(&[3.0]).unwrap();
        assert_eq!(f.value(&x), 81.0);
        assert_eq!(f.gradient(&x)[0], 108.0);
        assert_eq!(f.hessian(&x).get(0, 0), 108.0);
    }

    #[test]
    fn two_dim_minimum_at_origin() {
        let f = TwoDimExpObjective;
        let zero = Vector::zeros(2);
        assert_eq!(f.value(&zero), 0.0);
        assert_eq!(f.gradient(&zero).norm_l2(), 0.0);
    }

    #[test]
    fn neg_exp_linear_stationary_at_zero() {
        let f = NegExpLinearObjective;
        let zero = Vector::zeros(1);
        assert_eq!(f.value(&zero), 0.0);
        assert_eq!(f.gradient(&zero)[0], 0.0);
        assert_eq!(f.hessian(&zero).get(0, 0), 1.0);
    }

    #[test]
    fn ratio_formula_edge_cases() {
        assert_eq!(newton_ratio_power_even(1), 0.0);
        assert!((newton_ratio_power_even(2) - 16.0 / 81.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_k_rejected() {
        assert!(PowerEvenObjective::new(0).is_err());
    }
}
