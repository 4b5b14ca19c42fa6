use super::{CoreError, ProxTerm, SymMatrix, Vector};

/// Quadratic model of one solver iteration, in step coordinates:
///
/// ```text
/// Q(dx) = <grad, dx> + (sigma/2) dx' metric dx + g(anchor + dx) - g(anchor)
/// ```
///
/// Subtracting `g(anchor)` pins `Q(0) = 0` exactly.
#[derive(Clone)]
pub struct QuadraticModel {
    pub anchor: Vector,
    pub grad: Vector,
    pub metric: SymMatrix,
    pub sigma: f64,
    pub prox: ProxTerm,
    g_at_anchor: f64,
}

impl QuadraticModel {
    pub fn new(
        anchor: Vector,
        grad: Vector,
        metric: SymMatrix,
        sigma: f64,
        prox: ProxTerm,
    ) -> Result<Self, CoreError> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(CoreError::InvalidParam(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        let n = anchor.dim();
        if grad.dim() != n || metric.dim() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: grad.dim().max(metric.dim()),
            });
        }
        let g_at_anchor = prox.value(&anchor);
        if !g_at_anchor.is_finite() {
            return Err(CoreError::AnchorOutsideProxDomain);
        }
        Ok(Self {
            anchor,
            grad,
            metric,
            sigma,
            prox,
            g_at_anchor,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn evaluate(&self, step: &Vector) -> f64 {
        self.smooth_part(step) + self.prox_part(step)
    }

    /// Linear plus quadratic part without the prox difference.
    pub fn smooth_part(&self, step: &Vector) -> f64 {
        self.grad.dot(step) + 0.5 * self.sigma * self.metric.quad_form(step)
    }

    pub fn prox_part(&self, step: &Vector) -> f64 {
        self.prox.value(&self.anchor.add_scaled(1.0, step)) - self.g_at_anchor
    }

    /// Gradient of the smooth part: grad + sigma * metric * step.
    pub fn smooth_gradient(&self, step: &Vector) -> Vector {
        self.grad.add_scaled(self.sigma, &self.metric.matvec(step))
    }

    /// Same model with a different sigma.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self, CoreError> {
        Self::new(
            self.anchor.clone(),
            self.grad.clone(),
            self.metric.clone(),
            sigma,
            self.prox.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_step_is_exactly_zero() {
        let model = QuadraticModel::new(
            Vector::from_slice(&[0.3, -0.7]).unwrap(),
            Vector::from_slice(&[1.0, 2.0]).unwrap(),
            SymMatrix::diagonal(&[2.0, 3.0]),
            1.7,
            ProxTerm::l1(0.4).unwrap(),
        )
        .unwrap();
        assert_eq!(model.evaluate(&Vector::zeros(2)), 0.0);
    }

    #[test]
    fn anchor_outside_indicator_rejected() {
        let prox = ProxTerm::box_indicator(
            Vector::from_slice(&[0.0]).unwrap(),
            Vector::from_slice(&[1.0]).unwrap(),
        )
        .unwrap();
        let r = QuadraticModel::new(
            Vector::from_slice(&[2.0]).unwrap(),
            Vector::from_slice(&[1.0]).unwrap(),
            SymMatrix::identity(1),
            1.0,
            prox,
        );
        assert!(r.is_err());
    }

    #[test]
    fn evaluate_matches_hand_expansion() {
        // Q(dx) = 1*dx + 0.5*2*dx^2 at sigma=1, metric=[2]
        let model = QuadraticModel::new(
            Vector::zeros(1),
            Vector::from_slice(&[1.0]).unwrap(),
            SymMatrix::diagonal(&[2.0]),
            1.0,
            ProxTerm::Zero,
        )
        .unwrap();
        let dx = Vector::from_slice(&[-0.5]).unwrap();
        assert!((model.evaluate(&dx) - (-0.5 + 0.25)).abs() < 1e-15);
    }
}
