use crate::core::{
    power_iteration_lambda_max, NormSpec, ProxTerm, QuadraticModel, SymMatrix, Vector,
};

use super::{
    psd_solve, Certificate, LinalgError, LinearOperator, SubproblemMethod, SubproblemSolution,
};

/// Budgets and certification switches for the inner subproblem solvers.
#[derive(Debug, Clone)]
pub struct InnerConfig {
    /// Certify the achieved accuracy against a high-accuracy reference solve.
    pub certify: bool,
    /// Skip certification above this dimension; the requested accuracy is
    /// then reported as-is.
    pub certify_dim_cap: usize,
    pub max_iter: usize,
    pub reference_max_iter: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            certify: true,
            certify_dim_cap: 200,
            max_iter: 25_000,
            reference_max_iter: 150_000,
        }
    }
}

// ---------------------------------------------------------------------------
// Feasible structure of one subproblem, in step coordinates.
// ---------------------------------------------------------------------------

/// Prox/constraint structure of a subproblem: an optional shifted l1 term,
/// one merged box, and any number of l2 balls. Trust regions and indicator
/// prox terms are folded into the same representation.
struct StepProx {
    /// lambda of `lambda * ||anchor + step||_1`.
    l1: Option<f64>,
    anchor: Vector,
    /// Elementwise bounds on the step, if any box-like piece is present.
    boxed: Option<(Vec<f64>, Vec<f64>)>,
    /// (center, radius) of l2 balls on the step.
    balls: Vec<(Vector, f64)>,
}

impl StepProx {
    fn build(
        prox: &ProxTerm,
        anchor: &Vector,
        norm: &NormSpec,
        radius: Option<f64>,
    ) -> Result<Self, LinalgError> {
        let n = anchor.dim();
        let mut out = StepProx {
            l1: None,
            anchor: anchor.clone(),
            boxed: None,
            balls: Vec::new(),
        };
        let merge_box = |lo: Vec<f64>, hi: Vec<f64>, out: &mut StepProx| {
            let (mlo, mhi) = out
                .boxed
                .get_or_insert((vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]));
            for i in 0..n {
                mlo[i] = mlo[i].max(lo[i]);
                mhi[i] = mhi[i].min(hi[i]);
            }
        };
        match prox {
            ProxTerm::Zero => {}
            ProxTerm::L1 { lambda } if *lambda == 0.0 => {}
            ProxTerm::L1 { lambda } => out.l1 = Some(*lambda),
            ProxTerm::BoxIndicator { lo, hi } => {
                let lo = lo.iter().zip(anchor.iter()).map(|(l, a)| l - a).collect();
                let hi = hi.iter().zip(anchor.iter()).map(|(h, a)| h - a).collect();
                merge_box(lo, hi, &mut out);
            }
            ProxTerm::BallIndicator {
                center,
                radius: r,
                norm: bn,
            } => match bn {
                NormSpec::L2 => out.balls.push((center.sub(anchor), *r)),
                NormSpec::Linf => {
                    let lo = center.iter().zip(anchor.iter()).map(|(c, a)| c - a - r).collect();
                    let hi = center.iter().zip(anchor.iter()).map(|(c, a)| c - a + r).collect();
                    merge_box(lo, hi, &mut out);
                }
                NormSpec::Metric(_) => {
                    return Err(LinalgError::Unsupported(
                        "metric-norm ball prox terms".into(),
                    ))
                }
            },
        }
        if let Some(r) = radius {
            if !(r > 0.0) {
                return Err(LinalgError::Invalid(format!(
                    "trust radius must be positive, got {r}"
                )));
            }
            if r.is_finite() {
                match norm {
                    NormSpec::L2 => out.balls.push((Vector::zeros(n), r)),
                    NormSpec::Linf => merge_box(vec![-r; n], vec![r; n], &mut out),
                    NormSpec::Metric(_) => {
                        return Err(LinalgError::Unsupported(
                            "metric-norm trust regions".into(),
                        ))
                    }
                }
            }
        }
        if let Some((lo, hi)) = &out.boxed {
            for i in 0..n {
                // The zero step must stay feasible: the model anchor lies in
                // every indicator set by construction.
                if lo[i] > hi[i] + 1e-12 || lo[i] > 1e-9 || hi[i] < -1e-9 {
                    return Err(LinalgError::Invalid(
                        "indicator pieces exclude the current point".into(),
                    ));
                }
            }
        }
        Ok(out)
    }

    fn is_free(&self) -> bool {
        self.l1.is_none() && self.boxed.is_none() && self.balls.is_empty()
    }

    /// Separable pieces only (no l2 balls)?
    fn is_separable(&self) -> bool {
        self.balls.is_empty()
    }

    fn is_single_origin_ball(&self) -> bool {
        self.l1.is_none()
            && self.boxed.is_none()
            && self.balls.len() == 1
            && self.balls[0].0.norm_l2() == 0.0
    }

    /// Nonnegative violation of the indicator pieces at `step`.
    fn infeasibility(&self, step: &Vector) -> f64 {
        let mut v: f64 = 0.0;
        if let Some((lo, hi)) = &self.boxed {
            for i in 0..step.dim() {
                v = v.max(lo[i] - step[i]).max(step[i] - hi[i]);
            }
        }
        for (c, r) in &self.balls {
            v = v.max(step.sub(c).norm_l2() - r);
        }
        v.max(0.0)
    }

    /// Scale of the feasible region, for step-size heuristics.
    fn extent(&self) -> f64 {
        let mut e = f64::INFINITY;
        if let Some((lo, hi)) = &self.boxed {
            for i in 0..lo.len() {
                let w = hi[i] - lo[i];
                if w.is_finite() {
                    e = e.min(w);
                }
            }
        }
        for (_, r) in &self.balls {
            e = e.min(2.0 * r);
        }
        if e.is_finite() {
            e
        } else {
            1.0
        }
    }

    fn soft(t: f64, s: f64) -> f64 {
        t.signum() * (t.abs() - s).max(0.0)
    }

    /// Prox of the separable pieces (shifted l1 plus box), exact per
    /// coordinate: 1-D convexity makes clamp-after-soft-threshold optimal.
    fn separable_prox(&self, z: &Vector, tau: f64) -> Vector {
        let n = z.dim();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut u = match self.l1 {
                Some(lambda) => Self::soft(z[i] + self.anchor[i], lambda * tau) - self.anchor[i],
                None => z[i],
            };
            if let Some((lo, hi)) = &self.boxed {
                u = u.clamp(lo[i], hi[i]);
            }
            out.push(u);
        }
        Vector::new(out).expect("prox of finite input is finite")
    }

    fn project_ball(z: &Vector, center: &Vector, r: f64) -> Vector {
        let d = z.sub(center);
        let n = d.norm_l2();
        if n <= r {
            z.clone()
        } else {
            center.add_scaled(r / n, &d)
        }
    }

    fn has_separable_piece(&self) -> bool {
        self.l1.is_some() || self.boxed.is_some()
    }

    /// Proximal map of the full structure. Closed form when a single piece is
    /// present; a cyclic Dykstra-style splitting otherwise.
    fn prox(&self, z: &Vector, tau: f64) -> Vector {
        match (self.has_separable_piece(), self.balls.len()) {
            (_, 0) => self.separable_prox(z, tau),
            (false, 1) => Self::project_ball(z, &self.balls[0].0, self.balls[0].1),
            _ => self.dykstra_prox(z, tau),
        }
    }

    fn dykstra_prox(&self, z: &Vector, tau: f64) -> Vector {
        let n = z.dim();
        let n_pieces = usize::from(self.has_separable_piece()) + self.balls.len();
        let mut corrections = vec![Vector::zeros(n); n_pieces];
        let mut u = z.clone();
        for _ in 0..100 {
            let prev = u.clone();
            let mut idx = 0;
            if self.has_separable_piece() {
                let y = self.separable_prox(&u.add_scaled(1.0, &corrections[idx]), tau);
                corrections[idx] = u.add_scaled(1.0, &corrections[idx]).sub(&y);
                u = y;
                idx += 1;
            }
            for (c, r) in &self.balls {
                let y = Self::project_ball(&u.add_scaled(1.0, &corrections[idx]), c, *r);
                corrections[idx] = u.add_scaled(1.0, &corrections[idx]).sub(&y);
                u = y;
                idx += 1;
            }
            if u.sub(&prev).norm_l2() <= 1e-14 * (1.0 + u.norm_l2()) {
                break;
            }
        }
        u
    }

    /// Push a nearly feasible point exactly onto the indicator sets.
    fn polish(&self, step: &Vector) -> Vector {
        if self.boxed.is_none() && self.balls.is_empty() {
            return step.clone();
        }
        let mut u = step.clone();
        for _ in 0..32 {
            if let Some((lo, hi)) = &self.boxed {
                let entries: Vec<f64> = (0..u.dim()).map(|i| u[i].clamp(lo[i], hi[i])).collect();
                u = Vector::new(entries).expect("clamp of finite input");
            }
            for (c, r) in &self.balls {
                u = Self::project_ball(&u, c, *r);
            }
            if self.infeasibility(&u) <= 1e-13 {
                break;
            }
        }
        u
    }
}

// ---------------------------------------------------------------------------
// Model access shared by the dense and operator paths.
// ---------------------------------------------------------------------------

trait ModelLike {
    fn dim(&self) -> usize;
    fn anchor(&self) -> &Vector;
    fn grad(&self) -> &Vector;
    fn sigma(&self) -> f64;
    fn prox_term(&self) -> &ProxTerm;
    fn metric_apply(&self, v: &Vector) -> Vector;
    fn metric_quad(&self, v: &Vector) -> f64;
    fn metric_dense(&self) -> Option<&SymMatrix>;
    fn metric_diagonal(&self) -> Option<Vec<f64>>;
    fn metric_lambda_max(&self) -> f64;

    fn evaluate(&self, step: &Vector) -> f64;

    /// grad + sigma * metric * step
    fn smooth_gradient(&self, step: &Vector) -> Vector {
        self.grad().add_scaled(self.sigma(), &self.metric_apply(step))
    }
}

impl ModelLike for QuadraticModel {
    fn dim(&self) -> usize {
        self.anchor.dim()
    }
    fn anchor(&self) -> &Vector {
        &self.anchor
    }
    fn grad(&self) -> &Vector {
        &self.grad
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn prox_term(&self) -> &ProxTerm {
        &self.prox
    }
    fn metric_apply(&self, v: &Vector) -> Vector {
        self.metric.matvec(v)
    }
    fn metric_quad(&self, v: &Vector) -> f64 {
        self.metric.quad_form(v)
    }
    fn metric_dense(&self) -> Option<&SymMatrix> {
        Some(&self.metric)
    }
    fn metric_diagonal(&self) -> Option<Vec<f64>> {
        self.metric
            .is_diagonal(0.0)
            .then(|| self.metric.diagonal_entries())
    }
    fn metric_lambda_max(&self) -> f64 {
        self.metric.lambda_max_estimate()
    }
    fn evaluate(&self, step: &Vector) -> f64 {
        QuadraticModel::evaluate(self, step)
    }
}

/// Subproblem whose metric is only available through matrix-vector products.
pub struct OperatorModel<'a> {
    pub anchor: Vector,
    pub grad: Vector,
    pub op: &'a dyn LinearOperator,
    pub sigma: f64,
    pub prox: ProxTerm,
    g_at_anchor: f64,
}

impl<'a> OperatorModel<'a> {
    pub fn new(
        anchor: Vector,
        grad: Vector,
        op: &'a dyn LinearOperator,
        sigma: f64,
        prox: ProxTerm,
    ) -> Result<Self, LinalgError> {
        let g_at_anchor = prox.value(&anchor);
        if !g_at_anchor.is_finite() {
            return Err(LinalgError::Invalid(
                "anchor lies outside the prox domain".into(),
            ));
        }
        if sigma <= 0.0 {
            return Err(LinalgError::Invalid("sigma must be positive".into()));
        }
        Ok(Self {
            anchor,
            grad,
            op,
            sigma,
            prox,
            g_at_anchor,
        })
    }
}

impl ModelLike for OperatorModel<'_> {
    fn dim(&self) -> usize {
        self.anchor.dim()
    }
    fn anchor(&self) -> &Vector {
        &self.anchor
    }
    fn grad(&self) -> &Vector {
        &self.grad
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn prox_term(&self) -> &ProxTerm {
        &self.prox
    }
    fn metric_apply(&self, v: &Vector) -> Vector {
        self.op.apply(v)
    }
    fn metric_quad(&self, v: &Vector) -> f64 {
        v.dot(&self.op.apply(v))
    }
    fn metric_dense(&self) -> Option<&SymMatrix> {
        None
    }
    fn metric_diagonal(&self) -> Option<Vec<f64>> {
        None
    }
    fn metric_lambda_max(&self) -> f64 {
        power_iteration_lambda_max(self.dim(), |v| self.op.apply(v))
    }
    fn evaluate(&self, step: &Vector) -> f64 {
        self.grad.dot(step)
            + 0.5 * self.sigma * self.metric_quad(step)
            + self.prox.value(&self.anchor.add_scaled(1.0, step))
            - self.g_at_anchor
    }
}

// ---------------------------------------------------------------------------
// Public entry points.
// ---------------------------------------------------------------------------

/// Minimize a smooth quadratic model over a trust region. The prox term must
/// be absent or an indicator; l1-regularized models go through
/// [`solve_prox_subproblem`].
pub fn solve_tr_subproblem(
    model: &QuadraticModel,
    norm: &NormSpec,
    radius: f64,
    theta: f64,
    inner: &InnerConfig,
) -> Result<SubproblemSolution, LinalgError> {
    if matches!(model.prox, ProxTerm::L1 { lambda } if lambda > 0.0) {
        return Err(LinalgError::Unsupported(
            "trust-region solve with an l1 prox term; use the proximal entry point".into(),
        ));
    }
    solve_engine(model, norm, Some(radius), theta, inner)
}

/// Minimize a composite quadratic model, optionally inside a trust region
/// (`radius = None` means unconstrained). The returned step carries a
/// certificate of the achieved fraction of the attainable model decrease.
pub fn solve_prox_subproblem(
    model: &QuadraticModel,
    norm: &NormSpec,
    radius: Option<f64>,
    theta: f64,
    inner: &InnerConfig,
) -> Result<SubproblemSolution, LinalgError> {
    solve_engine(model, norm, radius, theta, inner)
}

/// Matrix-free variant: the metric enters only through products.
pub fn solve_prox_subproblem_operator(
    model: &OperatorModel,
    norm: &NormSpec,
    radius: Option<f64>,
    theta: f64,
    inner: &InnerConfig,
) -> Result<SubproblemSolution, LinalgError> {
    solve_engine(model, norm, radius, theta, inner)
}

/// High-accuracy minimum of the model over the given region, used as the
/// certified reference value.
pub fn reference_min(
    model: &QuadraticModel,
    norm: &NormSpec,
    radius: Option<f64>,
    inner: &InnerConfig,
) -> Result<f64, LinalgError> {
    let mut cfg = inner.clone();
    cfg.certify = false;
    let sol = solve_engine(model, norm, radius, 1.0, &cfg)?;
    let sp = StepProx::build(&model.prox, &model.anchor, norm, radius)?;
    let (fista_best, _) = fista(model, &sp, None, cfg.reference_max_iter, 2000);
    Ok(sol.model_value.min(model.evaluate(&fista_best)))
}

/// Verify that scaling sigma up cannot improve the attainable model minimum
/// faster than the scaling factor: `min Q^alpha <= 1/(alpha beta) min
/// Q^(1/beta)` for `alpha * beta >= 1` over a convex region. A violation
/// indicates a subproblem solver bug and is returned as `false` with
/// diagnostics.
pub fn check_sigma_scaling_inequality(
    model: &QuadraticModel,
    norm: &NormSpec,
    radius: Option<f64>,
    alpha: f64,
    beta: f64,
    inner: &InnerConfig,
) -> Result<bool, LinalgError> {
    if alpha <= 0.0 || beta <= 0.0 || alpha * beta < 1.0 - 1e-12 {
        return Err(LinalgError::Invalid(format!(
            "need alpha, beta > 0 with alpha*beta >= 1, got {alpha}, {beta}"
        )));
    }
    let m_alpha = reference_min(&model.with_sigma(alpha)?, norm, radius, inner)?;
    let m_recip = reference_min(&model.with_sigma(1.0 / beta)?, norm, radius, inner)?;
    let scale = 1.0f64.max(m_alpha.abs()).max(m_recip.abs());
    let ok = m_alpha <= m_recip / (alpha * beta) + 1e-8 * scale;
    if !ok {
        log::warn!(
            "sigma scaling inequality violated: min Q^{alpha} = {m_alpha} > {} = min Q^(1/{beta}) / (alpha beta)",
            m_recip / (alpha * beta)
        );
    }
    Ok(ok)
}

// ---------------------------------------------------------------------------
// Engine.
// ---------------------------------------------------------------------------

fn solve_engine(
    m: &dyn ModelLike,
    norm: &NormSpec,
    radius: Option<f64>,
    theta: f64,
    inner: &InnerConfig,
) -> Result<SubproblemSolution, LinalgError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(LinalgError::Invalid(format!(
            "theta must lie in (0, 1], got {theta}"
        )));
    }
    let sp = StepProx::build(m.prox_term(), m.anchor(), norm, radius)?;
    let certifying = inner.certify && m.dim() <= inner.certify_dim_cap;

    let mut qstar_ref: Option<f64> = None;
    let (raw_step, method, iters) = if sp.is_free() {
        match m.metric_dense() {
            Some(h) => {
                let w = psd_solve(h, m.grad())?;
                (w.scale(-1.0 / m.sigma()), SubproblemMethod::Direct, 1)
            }
            None => {
                let out = super::cg_solve(
                    &super::FnOperator::new(m.dim(), |v| m.metric_apply(v).scale(m.sigma())),
                    &m.grad().scale(-1.0),
                    1e-12,
                    (20 * m.dim()).max(200),
                )?;
                let its = out.iterations;
                (out.solution, SubproblemMethod::ConjugateGradient, its)
            }
        }
    } else if sp.is_single_origin_ball() && m.metric_dense().is_some() {
        let (step, lambda, its) = secular_ball(
            m.metric_dense().expect("checked dense"),
            m.grad(),
            m.sigma(),
            sp.balls[0].1,
        )?;
        return finish(
            m,
            &sp,
            step,
            SubproblemMethod::Secular,
            its,
            Some(lambda),
            theta,
            certifying,
            qstar_ref,
            inner,
        );
    } else if sp.is_separable() && m.metric_diagonal().is_some() {
        let step = separable_exact(m, &sp, &m.metric_diagonal().expect("checked diagonal"))?;
        (step, SubproblemMethod::Separable, 1)
    } else {
        // Iterative route; an early-stop target needs the reference first.
        let target = if certifying && theta < 1.0 {
            let q = fista_reference(m, &sp, inner);
            qstar_ref = Some(q);
            Some(theta * q)
        } else {
            None
        };
        let (step, its) = fista(m, &sp, target, inner.max_iter, 200);
        if !step.is_finite() || m.evaluate(&step) < -1e140 {
            return Err(LinalgError::Unsupported(
                "subproblem appears unbounded below".into(),
            ));
        }
        (step, SubproblemMethod::ProxGradient, its)
    };

    finish(
        m, &sp, raw_step, method, iters, None, theta, certifying, qstar_ref, inner,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    m: &dyn ModelLike,
    sp: &StepProx,
    raw_step: Vector,
    method: SubproblemMethod,
    iters: usize,
    lagrange: Option<f64>,
    theta: f64,
    certifying: bool,
    qstar_ref: Option<f64>,
    inner: &InnerConfig,
) -> Result<SubproblemSolution, LinalgError> {
    let step = sp.polish(&raw_step);
    let value = m.evaluate(&step);
    let (theta_achieved, certified) = if certifying {
        let qs = match qstar_ref {
            Some(q) => q,
            None => fista_reference(m, sp, inner).min(value),
        };
        let scale = 1.0 + qs.abs();
        let theta_achieved = if qs >= -1e-14 * scale {
            // No decrease attainable; the zero step is optimal.
            1.0
        } else if value <= qs + 1e-12 * scale {
            1.0
        } else {
            (value / qs).clamp(1e-16, 1.0)
        };
        (theta_achieved, true)
    } else {
        (theta, false)
    };
    let solution = SubproblemSolution {
        step,
        model_value: value,
        certificate: Certificate {
            theta_achieved,
            method,
            inner_iters: iters,
            lagrange_multiplier: lagrange,
            certified,
        },
    };
    if certified && theta_achieved + 1e-9 < theta {
        return Err(LinalgError::InnerSolver {
            wanted: theta,
            achieved: theta_achieved,
            best: Box::new(solution),
        });
    }
    Ok(solution)
}

/// Exact minimizer for a diagonal metric with separable prox structure.
fn separable_exact(
    m: &dyn ModelLike,
    sp: &StepProx,
    diag: &[f64],
) -> Result<Vector, LinalgError> {
    let n = m.dim();
    let g = m.grad();
    let lambda = sp.l1.unwrap_or(0.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let kappa = m.sigma() * diag[i];
        let a = sp.anchor[i];
        let (lo, hi) = match &sp.boxed {
            Some((lo, hi)) => (lo[i], hi[i]),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let d = if kappa > 0.0 {
            // Minimize kappa/2 d^2 + g d + lambda |a + d|: soft-threshold in
            // the shifted variable, then clamp (1-D convexity).
            let w = StepProx::soft(kappa * a - g[i], lambda) / kappa;
            (w - a).clamp(lo, hi)
        } else {
            // Flat curvature: piecewise linear coordinate objective.
            let q = |d: f64| g[i] * d + lambda * (a + d).abs();
            let mut candidates = vec![];
            if lo.is_finite() {
                candidates.push(lo);
            }
            if hi.is_finite() {
                candidates.push(hi);
            }
            let kink = (-a).clamp(lo, hi);
            if kink.is_finite() {
                candidates.push(kink);
            }
            if !lo.is_finite() || !hi.is_finite() {
                // Unbounded directions must have nonnegative slope away from
                // the kink, otherwise the subproblem has no minimizer.
                if g[i].abs() > lambda + 1e-15 {
                    return Err(LinalgError::Unsupported(
                        "separable subproblem unbounded along a flat direction".into(),
                    ));
                }
            }
            candidates
                .into_iter()
                .min_by(|x, y| q(*x).total_cmp(&q(*y)))
                .unwrap_or(0.0)
        };
        out.push(d);
    }
    Ok(Vector::new(out).expect("separable minimizer is finite"))
}

/// l2-ball trust-region solve via the secular equation on the eigenbasis of
/// the metric. Returns the step, the multiplier of the ball constraint, and
/// the root-finding iteration count.
fn secular_ball(
    h: &SymMatrix,
    grad: &Vector,
    sigma: f64,
    r: f64,
) -> Result<(Vector, f64, usize), LinalgError> {
    let (vals, q) = h.eigen();
    let svals: Vec<f64> = vals.iter().map(|v| sigma * v.max(0.0)).collect();
    let vmax = svals.iter().fold(0.0f64, |a, b| a.max(*b));
    let cutoff = 1e-12 * vmax.max(1e-300);
    let ghat = q.transpose() * grad.as_dvector();
    let gnorm = grad.norm_l2();

    // Interior candidate: pseudo-inverse Newton step, valid when the gradient
    // has no component in the numerical null space.
    let in_range = svals
        .iter()
        .zip(ghat.iter())
        .all(|(s, g)| *s > cutoff || g.abs() <= 1e-10 * gnorm.max(1.0));
    if in_range {
        let w = nalgebra::DVector::from_iterator(
            svals.len(),
            svals
                .iter()
                .zip(ghat.iter())
                .map(|(s, g)| if *s > cutoff { g / s } else { 0.0 }),
        );
        let step = Vector::from_dvector(-(&q * w));
        if step.norm_l2() <= r * (1.0 + 1e-12) {
            return Ok((step, 0.0, 0));
        }
    }
    if gnorm == 0.0 {
        return Ok((Vector::zeros(grad.dim()), 0.0, 0));
    }

    // Boundary: solve ||(sigma H + mu I)^-1 g||_2 = r for mu > 0.
    let phi = |mu: f64| -> f64 {
        svals
            .iter()
            .zip(ghat.iter())
            .map(|(s, g)| (g / (s + mu)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let dphi = |mu: f64| -> f64 {
        let p = phi(mu);
        let num: f64 = svals
            .iter()
            .zip(ghat.iter())
            .map(|(s, g)| g * g / (s + mu).powi(3))
            .sum();
        -num / p
    };
    let mut lo = 0.0;
    let mut hi = gnorm / r;
    // phi(hi) <= r holds since each (s + hi) >= hi = ||g||/r.
    let mut mu = 0.5 * hi;
    let mut iters = 0;
    for _ in 0..200 {
        iters += 1;
        let p = phi(mu);
        if (p - r).abs() <= 1e-13 * r {
            break;
        }
        if p > r {
            lo = mu;
        } else {
            hi = mu;
        }
        // Newton step on 1/phi - 1/r, the nearly linear form of the equation.
        let psi = 1.0 / p - 1.0 / r;
        let dpsi = -dphi(mu) / (p * p);
        let newton = mu - psi / dpsi;
        mu = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-16 * hi.max(1.0) {
            break;
        }
    }
    let w = nalgebra::DVector::from_iterator(
        svals.len(),
        svals.iter().zip(ghat.iter()).map(|(s, g)| g / (s + mu)),
    );
    let step = Vector::from_dvector(-(&q * w));
    Ok((step, mu, iters))
}

/// Accelerated proximal gradient on the model, tracking the best iterate.
/// Stops at the target value, on stall, or at the budget.
fn fista(
    m: &dyn ModelLike,
    sp: &StepProx,
    target: Option<f64>,
    budget: usize,
    stall_window: usize,
) -> (Vector, usize) {
    let n = m.dim();
    let lmax = m.sigma() * m.metric_lambda_max();
    let tau = if lmax > 1e-300 {
        1.0 / (1.02 * lmax)
    } else {
        // Linear smooth part: any step works; scale to the feasible region.
        10.0 * sp.extent() / m.grad().norm_l2().max(1e-12)
    };
    let mut x = Vector::zeros(n);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut best = x.clone();
    let mut best_val = 0.0f64; // value at the zero step, exactly
    let mut since_improve = 0usize;
    let mut iters = 0usize;
    for _ in 0..budget {
        iters += 1;
        let g = m.smooth_gradient(&y);
        let z = y.add_scaled(-tau, &g);
        let xn = sp.prox(&z, tau);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = xn.add_scaled(beta, &xn.sub(&x));
        x = xn;
        t = t_next;
        let infeas = sp.infeasibility(&x);
        let val = m.evaluate(&x);
        if val.is_finite() && infeas <= 1e-6 * (1.0 + sp.extent()) {
            if val < best_val - 1e-15 * (1.0 + best_val.abs()) {
                best = x.clone();
                best_val = val;
                since_improve = 0;
            } else {
                since_improve += 1;
            }
        } else {
            since_improve += 1;
        }
        if let Some(tgt) = target {
            if best_val <= tgt {
                break;
            }
        }
        if since_improve > stall_window {
            break;
        }
        if best_val < -1e140 {
            break;
        }
    }
    (best, iters)
}

fn fista_reference(m: &dyn ModelLike, sp: &StepProx, inner: &InnerConfig) -> f64 {
    let (step, _) = fista(m, sp, None, inner.reference_max_iter, 2000);
    m.evaluate(&sp.polish(&step))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(
        grad: &[f64],
        metric: SymMatrix,
        sigma: f64,
        prox: ProxTerm,
    ) -> QuadraticModel {
        QuadraticModel::new(
            Vector::zeros(grad.len()),
            Vector::from_slice(grad).unwrap(),
            metric,
            sigma,
            prox,
        )
        .unwrap()
    }

    fn inner() -> InnerConfig {
        InnerConfig::default()
    }

    #[test]
    fn interior_newton_point_inside_ball() {
        let m = model(&[1.0, 0.0], SymMatrix::identity(2), 1.0, ProxTerm::Zero);
        let sol = solve_tr_subproblem(&m, &NormSpec::L2, 2.0, 1.0, &inner()).unwrap();
        assert!((sol.step[0] + 1.0).abs() < 1e-10);
        assert!(sol.step[1].abs() < 1e-10);
        assert!(sol.certificate.theta_achieved >= 1.0 - 1e-12);
    }

    #[test]
    fn boundary_active_steepest_direction() {
        let m = model(&[3.0, 0.0], SymMatrix::identity(2), 1.0, ProxTerm::Zero);
        let sol = solve_tr_subproblem(&m, &NormSpec::L2, 1.0, 1.0, &inner()).unwrap();
        assert!((sol.step[0] + 1.0).abs() < 1e-9);
        assert!(sol.step[1].abs() < 1e-9);
        let mu = sol.certificate.lagrange_multiplier.unwrap();
        assert!(mu > 0.0);
        // Stationarity: (sigma H + mu I) d = -g.
        assert!(((1.0 + mu) * sol.step[0] + 3.0).abs() < 1e-8);
    }

    #[test]
    fn soft_threshold_prox_newton_target() {
        // minimize 2 d + d^2/2 + |d|: subgradient 0 at d = -1.
        let m = model(&[2.0], SymMatrix::identity(1), 1.0, ProxTerm::l1(1.0).unwrap());
        let sol = solve_prox_subproblem(&m, &NormSpec::L2, None, 1.0, &inner()).unwrap();
        assert!((sol.step[0] + 1.0).abs() < 1e-12);
        assert_eq!(sol.certificate.method, SubproblemMethod::Separable);
    }

    #[test]
    fn l1_zero_lambda_reduces_to_tr() {
        let m1 = model(&[3.0, 0.0], SymMatrix::identity(2), 1.0, ProxTerm::Zero);
        let m2 = model(
            &[3.0, 0.0],
            SymMatrix::identity(2),
            1.0,
            ProxTerm::l1(0.0).unwrap(),
        );
        let a = solve_tr_subproblem(&m1, &NormSpec::L2, 1.0, 1.0, &inner()).unwrap();
        let b = solve_prox_subproblem(&m2, &NormSpec::L2, Some(1.0), 1.0, &inner()).unwrap();
        assert!(a.step.sub(&b.step).norm_l2() < 1e-9);
    }

    #[test]
    fn tr_rejects_l1_models() {
        let m = model(&[1.0], SymMatrix::identity(1), 1.0, ProxTerm::l1(0.5).unwrap());
        assert!(matches!(
            solve_tr_subproblem(&m, &NormSpec::L2, 1.0, 1.0, &inner()),
            Err(LinalgError::Unsupported(_))
        ));
    }

    #[test]
    fn sigma_scaling_equality_at_one() {
        let m = model(&[1.0], SymMatrix::identity(1), 1.0, ProxTerm::Zero);
        assert!(check_sigma_scaling_inequality(
            &m,
            &NormSpec::L2,
            Some(1.0),
            1.0,
            1.0,
            &inner()
        )
        .unwrap());
    }

    #[test]
    fn sigma_scaling_closed_form_1d() {
        // Q^2 on [-1,1]: min(d + d^2) = -1/4; Q^1: min(d + d^2/2) = -1/2.
        let m = model(&[1.0], SymMatrix::identity(1), 1.0, ProxTerm::Zero);
        assert!(check_sigma_scaling_inequality(
            &m,
            &NormSpec::Linf,
            Some(1.0),
            2.0,
            1.0,
            &inner()
        )
        .unwrap());
    }

    #[test]
    fn theta_half_stops_early_but_certified() {
        let m = model(
            &[2.0, -1.5],
            SymMatrix::from_fn_upper(2, |i, j| if i == j { 2.0 } else { 0.5 }),
            1.0,
            ProxTerm::l1(0.3).unwrap(),
        );
        let sol = solve_prox_subproblem(&m, &NormSpec::Linf, Some(0.4), 0.5, &inner()).unwrap();
        assert!(sol.certificate.theta_achieved >= 0.5 - 1e-9);
        assert!(sol.model_value < 0.0);
        assert!(sol.step.norm_linf() <= 0.4 * (1.0 + 1e-9));
    }

    #[test]
    fn operator_route_matches_dense() {
        let h = SymMatrix::from_fn_upper(3, |i, j| if i == j { 3.0 } else { 0.4 });
        let grad = Vector::from_slice(&[1.0, -2.0, 0.5]).unwrap();
        let dense = model(grad.as_slice(), h.clone(), 1.3, ProxTerm::Zero);
        let om = OperatorModel::new(Vector::zeros(3), grad, &h, 1.3, ProxTerm::Zero).unwrap();
        let a = solve_prox_subproblem(&dense, &NormSpec::L2, None, 1.0, &inner()).unwrap();
        let b = solve_prox_subproblem_operator(&om, &NormSpec::L2, None, 1.0, &inner()).unwrap();
        assert!(a.step.sub(&b.step).norm_l2() < 1e-8);
    }
}
