//! The Newton family: exact, trust-region, approximate/proximal,
//! backtracking-adaptive and affine-invariant trust-region descent, plus
//! first-order and line-search baselines for comparison.
//!
//! Guarantee-relevant preconditions on sigma are warned about and not
//! enforced: running with a too-small sigma is exactly what the
//! counterexample experiments need to show.

mod affine_tr;
mod approx_prox;
mod backtracking;
mod baselines;
mod newton;
mod runner;

use thiserror::Error;

use crate::core::{CoreError, NormSpec, SolveTrace};
use crate::linalg::{InnerConfig, LinalgError};
use crate::stability::{ApproxScheme, StabilityError};

pub use affine_tr::affine_invariant_tr;
pub use approx_prox::approx_prox_newton;
pub use backtracking::backtracking_newton;
pub use baselines::{exact_line_search_newton, gradient_descent_baseline};
pub use newton::{exact_newton, trust_region_newton};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("non-descent step at iteration {iter} although sigma = {sigma} >= declared c = {declared_c}; the declared constant is too small")]
    DescentViolation {
        iter: usize,
        sigma: f64,
        declared_c: f64,
        trace: Box<SolveTrace>,
    },
    #[error("starting point lies outside the domain")]
    StartOutsideDomain,
    #[error("inner subproblem solver failed: {source}")]
    Inner {
        source: LinalgError,
        trace: Box<SolveTrace>,
    },
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Acceptance thresholds and sigma update factors of the backtracking
/// strategy.
#[derive(Debug, Clone, Copy)]
pub struct BacktrackingParams {
    pub sigma0: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl Default for BacktrackingParams {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            zeta1: 0.9,
            zeta2: 0.1,
            eta1: 2.0,
            eta2: 2.0,
        }
    }
}

impl BacktrackingParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.sigma0 > 0.0
            && self.zeta1 > self.zeta2
            && (0.0..1.0).contains(&self.zeta1)
            && (0.0..1.0).contains(&self.zeta2)
            && self.eta2 >= self.eta1
            && self.eta1 > 1.0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig(
                "backtracking needs zeta1 > zeta2 in [0,1) and eta2 >= eta1 > 1".into(),
            ))
        }
    }
}

/// Shared solver configuration. `sigma` is the inverse step-size multiplier
/// in front of the quadratic model term.
#[derive(Clone)]
pub struct SolverConfig {
    pub sigma: f64,
    /// Trust-region radius; `None` leaves the step unconstrained.
    pub radius: Option<f64>,
    pub norm: NormSpec,
    /// Requested fraction of the attainable model decrease per inner solve.
    pub theta: f64,
    pub max_iter: usize,
    /// Stop when F - F* falls to this level (requires a known optimum).
    pub gap_tol: f64,
    /// Fallback stop on the Hessian-norm step length, which is affine
    /// invariant.
    pub decrement_tol: f64,
    pub approx_scheme: ApproxScheme,
    pub backtracking: Option<BacktrackingParams>,
    /// Stability constant the caller believes in; sigma below it only warns.
    pub declared_c: Option<f64>,
    pub seed: u64,
    pub record_points: bool,
    pub monitor_eta: bool,
    pub inner: InnerConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            radius: None,
            norm: NormSpec::L2,
            theta: 1.0,
            max_iter: 500,
            gap_tol: 1e-12,
            decrement_tol: 1e-9,
            approx_scheme: ApproxScheme::ExactHessian,
            backtracking: None,
            declared_c: None,
            seed: 0,
            record_points: false,
            monitor_eta: false,
            inner: InnerConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_radius(mut self, radius: f64, norm: NormSpec) -> Self {
        self.radius = Some(radius);
        self.norm = norm;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_gap_tol(mut self, tol: f64) -> Self {
        self.gap_tol = tol;
        self
    }

    pub fn with_scheme(mut self, scheme: ApproxScheme) -> Self {
        self.approx_scheme = scheme;
        self
    }

    pub fn recording_points(mut self) -> Self {
        self.record_points = true;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) {
                return Err(SolverError::InvalidConfig(format!(
                    "radius must be positive, got {r}"
                )));
            }
        }
        if let Some(bt) = &self.backtracking {
            bt.validate()?;
        }
        Ok(())
    }
}

/// Grid argmin of d(r)^2 / r, the quantity the trust-region rate depends on.
pub fn optimal_radius(r_grid: &[f64], d_values: &[f64]) -> Result<f64, SolverError> {
    if r_grid.is_empty() || r_grid.len() != d_values.len() {
        return Err(SolverError::InvalidConfig(
            "radius grid and d values must be nonempty and aligned".into(),
        ));
    }
    let mut best = (r_grid[0], f64::INFINITY);
    for (r, d) in r_grid.iter().zip(d_values.iter()) {
        if !(*r > 0.0) || !(*d >= 1.0) {
            return Err(SolverError::InvalidConfig(
                "radii must be positive and d(r) >= 1".into(),
            ));
        }
        let score = d * d / r;
        if score < best.1 {
            best = (*r, score);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimal_radius_exponential_curve() {
        // d(r) = e^r: minimizing e^(2r)/r gives r = 1/2.
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.01).collect();
        let d: Vec<f64> = grid.iter().map(|r| r.exp()).collect();
        let r = optimal_radius(&grid, &d).unwrap();
        assert!((r - 0.5).abs() <= 0.01 + 1e-12);
    }

    #[test]
    fn optimal_radius_constant_curve_takes_largest() {
        let grid = [0.1, 0.5, 1.0, 2.0];
        let d = [3.0; 4];
        assert_eq!(optimal_radius(&grid, &d).unwrap(), 2.0);
    }

    #[test]
    fn optimal_radius_linear_curve() {
        // d(r) = 1 + r: (1+r)^2/r is minimized at r = 1.
        let grid: Vec<f64> = (1..=300).map(|i| i as f64 * 0.01).collect();
        let d: Vec<f64> = grid.iter().map(|r| 1.0 + r).collect();
        let r = optimal_radius(&grid, &d).unwrap();
        assert!((r - 1.0).abs() <= 0.01 + 1e-12);
    }

    #[test]
    fn backtracking_params_validation() {
        assert!(BacktrackingParams::default().validate().is_ok());
        let bad = BacktrackingParams {
            zeta1: 0.1,
            zeta2: 0.9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
