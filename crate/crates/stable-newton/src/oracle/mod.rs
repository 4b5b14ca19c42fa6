//! Independent verifiers: exhaustive grid minimization, finite differences,
//! rate fitting and closed-form 1-D stability constants.
//!
//! Nothing here calls into `linalg` or `solvers`; these are the reference
//! implementations the test suite checks those modules against.

use serde::Serialize;
use thiserror::Error;

use crate::core::{NormSpec, Objective, QuadraticModel, SolveTrace, Vector};
use crate::objectives::ScalarLink;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid oracle supports dimension <= 3, got {0}")]
    DimTooLarge(usize),
    #[error("evaluation left the objective's domain near {0}")]
    EvaluationOutsideDomain(String),
    #[error("too few usable points: {got} < {needed}")]
    TooFewPoints { got: usize, needed: usize },
    #[error("stability undefined: second derivative vanishes on the interval")]
    StabilityUndefined,
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// Bounded search region for the grid oracle: a box, optionally intersected
/// with a norm ball on the step.
#[derive(Debug, Clone)]
pub struct GridDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub ball: Option<(NormSpec, f64)>,
}

impl GridDomain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
            ball: None,
        }
    }

    pub fn with_ball(mut self, norm: NormSpec, radius: f64) -> Self {
        self.ball = Some((norm, radius));
        self
    }
}

/// Exhaustive minimization of a quadratic model over a grid. The returned
/// value is within (local Lipschitz constant of Q) * resolution of the true
/// constrained minimum. Infinite model values (outside the prox domain) are
/// skipped.
pub fn grid_minimize_quadratic(
    model: &QuadraticModel,
    domain: &GridDomain,
    resolution: f64,
) -> Result<(Vector, f64), OracleError> {
    let dim = model.dim();
    if dim > 3 {
        return Err(OracleError::DimTooLarge(dim));
    }
    if domain.lo.len() != dim || domain.hi.len() != dim {
        return Err(OracleError::Invalid("domain dimension mismatch".into()));
    }
    if !(resolution > 0.0) {
        return Err(OracleError::Invalid("resolution must be positive".into()));
    }
    let counts: Vec<usize> = (0..dim)
        .map(|i| {
            let w = domain.hi[i] - domain.lo[i];
            (w / resolution).ceil() as usize + 1
        })
        .collect();
    let mut idx = vec![0usize; dim];
    let mut best: Option<(Vector, f64)> = None;
    let mut point = vec![0.0; dim];
    loop {
        for i in 0..dim {
            let steps = (counts[i] - 1).max(1) as f64;
            let t = idx[i] as f64 / steps;
            point[i] = domain.lo[i] + t * (domain.hi[i] - domain.lo[i]);
        }
        let candidate = Vector::from_slice(&point).expect("grid points are finite");
        let feasible = match &domain.ball {
            Some((norm, r)) => norm.norm(&candidate) <= r * (1.0 + 1e-12),
            None => true,
        };
        if feasible {
            let v = model.evaluate(&candidate);
            if v.is_finite() && best.as_ref().map(|(_, b)| v < *b).unwrap_or(true) {
                best = Some((candidate, v));
            }
        }
        // Odometer increment over the grid indices.
        let mut carry = true;
        for i in 0..dim {
            if carry {
                idx[i] += 1;
                if idx[i] >= counts[i] {
                    idx[i] = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }
    best.ok_or(OracleError::TooFewPoints { got: 0, needed: 1 })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdReport {
    pub grad_err: f64,
    pub hess_err: f64,
}

/// Central-difference check of the analytic gradient and Hessian at `x`.
/// Requires `x` to be interior to the domain by a margin larger than `h`.
pub fn finite_diff_check(obj: &dyn Objective, x: &Vector, h: f64) -> Result<FdReport, OracleError> {
    let n = obj.dim();
    if x.dim() != n {
        return Err(OracleError::Invalid("point dimension mismatch".into()));
    }
    if !(h > 0.0) {
        return Err(OracleError::Invalid("step must be positive".into()));
    }
    let probe = |p: &Vector| -> Result<f64, OracleError> {
        let v = obj.value(p);
        if !v.is_finite() {
            return Err(OracleError::EvaluationOutsideDomain(format!("{p}")));
        }
        Ok(v)
    };
    let shift = |i: usize, delta: f64| {
        let mut entries = x.as_slice().to_vec();
        entries[i] += delta;
        Vector::new(entries).expect("finite shift")
    };

    let grad_a = obj.gradient(x);
    let mut grad_err_sq = 0.0;
    for i in 0..n {
        let plus = probe(&shift(i, h))?;
        let minus = probe(&shift(i, -h))?;
        let fd = (plus - minus) / (2.0 * h);
        grad_err_sq += (fd - grad_a[i]).powi(2);
    }
    let grad_err = grad_err_sq.sqrt() / (1.0 + grad_a.norm_l2());

    let hess_a = obj.hessian(x);
    let mut hess_err_sq = 0.0;
    let mut hess_norm_sq = 0.0;
    for j in 0..n {
        // Domain check at the shifted points before querying derivatives.
        probe(&shift(j, h))?;
        probe(&shift(j, -h))?;
        let gp = obj.gradient(&shift(j, h));
        let gm = obj.gradient(&shift(j, -h));
        for i in 0..n {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            hess_err_sq += (fd - hess_a.get(i, j)).powi(2);
            hess_norm_sq += hess_a.get(i, j).powi(2);
        }
    }
    let hess_err = hess_err_sq.sqrt() / (1.0 + hess_norm_sq.sqrt());
    Ok(FdReport { grad_err, hess_err })
}

/// Measured convergence behavior of a trace.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    /// gap_{t+1} / gap_t between consecutive accepted iterations.
    pub per_step_factors: Vec<f64>,
    /// Worst (largest) factor over the tail of the run.
    pub geometric_factor: f64,
    /// r^2 of the least-squares line through (t, ln gap_t).
    pub r_squared: f64,
}

/// Fit per-step contraction factors to a trace. Gaps at or below the noise
/// floor of f64 arithmetic are excluded; at least 5 usable accepted
/// iterations are required.
pub fn fit_rate(
    trace: &SolveTrace,
    f_star: f64,
    tail_fraction: f64,
) -> Result<RateFit, OracleError> {
    if !(0.0 < tail_fraction && tail_fraction <= 1.0) {
        return Err(OracleError::Invalid(
            "tail fraction must lie in (0, 1]".into(),
        ));
    }
    let floor = 1e2 * f64::EPSILON * f_star.abs().max(1.0);
    let gaps: Vec<f64> = trace
        .accepted()
        .map(|r| r.composite_value - f_star)
        .take_while(|g| *g > floor)
        .collect();
    if gaps.len() < 5 {
        return Err(OracleError::TooFewPoints {
            got: gaps.len(),
            needed: 5,
        });
    }
    let per_step_factors: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let tail_len = ((per_step_factors.len() as f64) * tail_fraction).ceil() as usize;
    let tail = &per_step_factors[per_step_factors.len() - tail_len..];
    let geometric_factor = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let logs: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let n = logs.len() as f64;
    let tbar = (logs.len() as f64 - 1.0) / 2.0;
    let ybar = logs.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (t, y) in logs.iter().enumerate() {
        sxy += (t as f64 - tbar) * (y - ybar);
        sxx += (t as f64 - tbar).powi(2);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, y) in logs.iter().enumerate() {
        let pred = ybar + slope * (t as f64 - tbar);
        ss_res += (y - pred).powi(2);
        ss_tot += (y - ybar).powi(2);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(RateFit {
        per_step_factors,
        geometric_factor,
        r_squared,
    })
}

/// Exact 1-D stability constant of a scalar link on [a, b]: the ratio of the
/// extreme second derivatives, from their known monotonicity or peak.
pub fn scalar_stability_exact(link: ScalarLink, a: f64, b: f64) -> Result<f64, OracleError> {
    if !(b > a) {
        return Err(OracleError::Invalid("need a < b".into()));
    }
    let (min, max) = link.d2_range_on(a, b);
    if !(min > 0.0) || !min.is_finite() {
        return Err(OracleError::StabilityUndefined);
    }
    Ok(max / min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{ProxTerm, SymMatrix};

    fn model_1d(grad: f64, h: f64, sigma: f64, prox: ProxTerm) -> QuadraticModel {
        QuadraticModel::new(
            Vector::zeros(1),
            Vector::from_slice(&[grad]).unwrap(),
            SymMatrix::diagonal(&[h]),
            sigma,
            prox,
        )
        .unwrap()
    }

    #[test]
    fn grid_finds_unconstrained_quadratic_min() {
        // Q(d) = d + d^2/2 on [-2, 2]: minimum -1/2 at d = -1.
        let m = model_1d(1.0, 1.0, 1.0, ProxTerm::Zero);
        let dom = GridDomain {
            lo: vec![-2.0],
            hi: vec![2.0],
            ball: None,
        };
        let (p, v) = grid_minimize_quadratic(&m, &dom, 1e-4).unwrap();
        assert!((p[0] + 1.0).abs() < 2e-4);
        assert!((v + 0.5).abs() < 1e-7);
    }

    #[test]
    fn grid_respects_boundary() {
        let m = model_1d(1.0, 1.0, 1.0, ProxTerm::Zero);
        let dom = GridDomain {
            lo: vec![-0.5],
            hi: vec![2.0],
            ball: None,
        };
        let (p, _) = grid_minimize_quadratic(&m, &dom, 1e-4).unwrap();
        assert!((p[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_high_dimension() {
        let m = QuadraticModel::new(
            Vector::zeros(4),
            Vector::zeros(4),
            SymMatrix::identity(4),
            1.0,
            ProxTerm::Zero,
        )
        .unwrap();
        assert!(matches!(
            grid_minimize_quadratic(&m, &GridDomain::cube(4, 1.0), 0.1),
            Err(OracleError::DimTooLarge(4))
        ));
    }

    #[test]
    fn fd_exact_on_quadratics() {
        let obj = crate::objectives::Quadratic::diagonal(&[1.0, 3.0]);
        let x = Vector::from_slice(&[0.7, -0.2]).unwrap();
        let rep = finite_diff_check(&obj, &x, 1e-6).unwrap();
        assert!(rep.grad_err <= 1e-9, "grad err {}", rep.grad_err);
        assert!(rep.hess_err <= 1e-9, "hess err {}", rep.hess_err);
    }

    #[test]
    fn fd_domain_margin_violation() {
        let obj = crate::objectives::GlmObjective::one_dim(ScalarLink::Entropy);
        let x = Vector::from_slice(&[5e-7]).unwrap();
        assert!(matches!(
            finite_diff_check(&obj, &x, 1e-6),
            Err(OracleError::EvaluationOutsideDomain(_))
        ));
    }

    #[test]
    fn fit_rate_recovers_synthetic_halving() {
        let mut trace = SolveTrace::new("synthetic", Some(0.0), Vector::zeros(1), false);
        for t in 0..20 {
            trace.push(
                crate::core::IterRecord {
                    iter: t,
                    f_value: 0.5f64.powi(t as i32),
                    composite_value: 0.5f64.powi(t as i32),
                    gap: Some(0.5f64.powi(t as i32)),
                    step_norm: 0.0,
                    sigma: 1.0,
                    rho: None,
                    accepted: true,
                    wall_time: 0.0,
                    theta_achieved: None,
                },
                &Vector::zeros(1),
            );
        }
        let fit = fit_rate(&trace, 0.0, 0.5).unwrap();
        assert!((fit.geometric_factor - 0.5).abs() < 1e-12);
        assert!(fit.r_squared > 0.999999);
    }

    #[test]
    fn scalar_stability_closed_forms() {
        assert!((scalar_stability_exact(ScalarLink::Entropy, 1.0, 4.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(
            (scalar_stability_exact(ScalarLink::RobustQ { q: 1.5 }, 1.0, 4.0).unwrap() - 2.0)
                .abs()
                < 1e-12
        );
        // exp link on [-1, 1]: ratio e^2.
        assert!(
            (scalar_stability_exact(ScalarLink::ExpShift, -1.0, 1.0).unwrap()
                - std::f64::consts::E.powi(2))
            .abs()
                < 1e-12
        );
    }

    #[test]
    fn scalar_stability_undefined_through_zero() {
        assert!(matches!(
            scalar_stability_exact(ScalarLink::PowerEven { k: 2 }, -1.0, 1.0),
            Err(OracleError::StabilityUndefined)
        ));
    }
}
