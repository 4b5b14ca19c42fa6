use serde::Serialize;

use crate::core::ConditionClass;

/// Coordinate-wise scalar loss with analytic first and second derivatives.
///
/// `Entropy` and `RobustQ` are defined on positive arguments only: `value`
/// returns `+inf` at `u <= 0` (the convex extension), while derivative
/// queries there are a caller bug and panic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScalarLink {
    /// log(1 + exp(-u))
    Logistic,
    /// exp(u) - u
    ExpShift,
    /// u ln u, on [a, b] with a > 0
    Entropy,
    /// u^q for q in (1, 2], on [a, b] with a > 0
    RobustQ { q: f64 },
    /// u^(2k)
    PowerEven { k: u32 },
    /// exp(-u) + u - 1
    NegExpLinear,
}

impl ScalarLink {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            // Stable at large |u|: log(1+e^-u) = log1p(e^-|u|) + max(-u, 0).
            ScalarLink::Logistic => (-u.abs()).exp().ln_1p() + (-u).max(0.0),
            ScalarLink::ExpShift => u.exp() - u,
            ScalarLink::Entropy => {
                if u <= 0.0 {
                    f64::INFINITY
                } else {
                    u * u.ln()
                }
            }
            ScalarLink::RobustQ { q } => {
                if u <= 0.0 {
                    f64::INFINITY
                } else {
                    u.powf(*q)
                }
            }
            ScalarLink::PowerEven { k } => u.powi(2 * *k as i32),
            ScalarLink::NegExpLinear => (-u).exp() + u - 1.0,
        }
    }

    pub fn d1(&self, u: f64) -> f64 {
        match self {
            ScalarLink::Logistic => -1.0 / (1.0 + u.exp()),
            ScalarLink::ExpShift => u.exp() - 1.0,
            ScalarLink::Entropy => {
                self.assert_positive(u);
                u.ln() + 1.0
            }
            ScalarLink::RobustQ { q } => {
                self.assert_positive(u);
                q * u.powf(q - 1.0)
            }
            ScalarLink::PowerEven { k } => {
                let p = 2 * *k as i32;
                f64::from(p) * u.powi(p - 1)
            }
            ScalarLink::NegExpLinear => 1.0 - (-u).exp(),
        }
    }

    pub fn d2(&self, u: f64) -> f64 {
        match self {
            ScalarLink::Logistic => {
                // s(1-s) with s the sigmoid, computed via e^-|u| to avoid overflow.
                let e = (-u.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            ScalarLink::ExpShift => u.exp(),
            ScalarLink::Entropy => {
                self.assert_positive(u);
                1.0 / u
            }
            ScalarLink::RobustQ { q } => {
                self.assert_positive(u);
                q * (q - 1.0) * u.powf(q - 2.0)
            }
            ScalarLink::PowerEven { k } => {
                let p = 2 * *k as i32;
                f64::from(p) * f64::from(p - 1) * u.powi(p - 2)
            }
            ScalarLink::NegExpLinear => (-u).exp(),
        }
    }

    fn assert_positive(&self, u: f64) {
        assert!(
            u > 0.0,
            "{:?} derivatives are undefined at u = {u}; keep iterates inside the declared domain",
            self
        );
    }

    /// Closed-form stability constant of this link on [a, b], when the class
    /// has one.
    pub fn class_c_on(&self, a: f64, b: f64) -> Option<f64> {
        if b < a {
            return None;
        }
        match self {
            ScalarLink::Logistic | ScalarLink::ExpShift | ScalarLink::NegExpLinear => {
                Some((b - a).exp())
            }
            ScalarLink::Entropy => (a > 0.0).then(|| b / a),
            ScalarLink::RobustQ { q } => (a > 0.0).then(|| (b / a).powf(2.0 - q)),
            ScalarLink::PowerEven { k } => {
                if *k == 1 {
                    Some(1.0)
                } else if a > 0.0 {
                    Some((b / a).powi(2 * *k as i32 - 2))
                } else if b < 0.0 {
                    Some((a / b).powi(2 * *k as i32 - 2))
                } else {
                    // Second derivative vanishes at 0; no finite constant.
                    None
                }
            }
        }
    }

    /// Sufficient-condition class this link satisfies on [a, b].
    pub fn condition_class_on(&self, a: f64, b: f64) -> Option<ConditionClass> {
        match self {
            ScalarLink::Logistic | ScalarLink::ExpShift | ScalarLink::NegExpLinear => {
                Some(ConditionClass::QuasiSelfConcordant { k: 1.0 })
            }
            ScalarLink::Entropy => (a > 0.0).then(|| ConditionClass::LipschitzHessianStronglyConvex {
                m: 1.0 / (a * a),
                mu: 1.0 / b,
            }),
            ScalarLink::RobustQ { q } => (a > 0.0).then(|| {
                ConditionClass::LipschitzHessianStronglyConvex {
                    m: q * (q - 1.0) * (2.0 - q) * a.powf(q - 3.0),
                    mu: q * (q - 1.0) * b.powf(q - 2.0),
                }
            }),
            ScalarLink::PowerEven { .. } => None,
        }
    }

    /// Exact range of the second derivative on [a, b], using monotonicity or
    /// the known peak. Returns (min, max).
    pub fn d2_range_on(&self, a: f64, b: f64) -> (f64, f64) {
        match self {
            // Peak 1/4 at u = 0, symmetric, decreasing in |u|.
            ScalarLink::Logistic => {
                let max = if a <= 0.0 && b >= 0.0 {
                    0.25
                } else {
                    self.d2(if a.abs() < b.abs() { a } else { b })
                };
                let min = self.d2(if a.abs() > b.abs() { a } else { b });
                (min, max)
            }
            ScalarLink::ExpShift => (self.d2(a), self.d2(b)),
            ScalarLink::NegExpLinear => (self.d2(b), self.d2(a)),
            ScalarLink::Entropy | ScalarLink::RobustQ { .. } => {
                if a <= 0.0 {
                    (0.0, f64::INFINITY)
                } else if matches!(self, ScalarLink::RobustQ { q } if *q == 2.0) {
                    (self.d2(a), self.d2(a))
                } else {
                    (self.d2(b), self.d2(a))
                }
            }
            ScalarLink::PowerEven { k } => {
                if *k == 1 {
                    (2.0, 2.0)
                } else if a <= 0.0 && b >= 0.0 {
                    (0.0, self.d2(a).max(self.d2(b)))
                } else {
                    let lo = self.d2(if a.abs() < b.abs() { a } else { b });
                    let hi = self.d2(if a.abs() > b.abs() { a } else { b });
                    (lo, hi)
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ScalarLink::Logistic => "logistic".into(),
            ScalarLink::ExpShift => "exp_shift".into(),
            ScalarLink::Entropy => "entropy".into(),
            ScalarLink::RobustQ { q } => format!("robust_q({q})"),
            ScalarLink::PowerEven { k } => format!("power_even({k})"),
            ScalarLink::NegExpLinear => "neg_exp_linear".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_is_stable_at_extremes() {
        let l = ScalarLink::Logistic;
        assert!((l.value(800.0) - 0.0).abs() < 1e-300);
        assert!((l.value(-800.0) - 800.0).abs() < 1e-9);
        assert!(l.d2(800.0) >= 0.0 && l.d2(800.0).is_finite());
    }

    #[test]
    fn entropy_outside_domain() {
        let l = ScalarLink::Entropy;
        assert_eq!(l.value(-1.0), f64::INFINITY);
        assert_eq!(l.value(0.0), f64::INFINITY);
        assert!((l.value(1.0) - 0.0).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn entropy_derivative_outside_domain_panics() {
        ScalarLink::Entropy.d2(-1.0);
    }

    #[test]
    fn class_constants() {
        assert!((ScalarLink::Entropy.class_c_on(1.0, 4.0).unwrap() - 4.0).abs() < 1e-15);
        assert!(
            (ScalarLink::RobustQ { q: 1.5 }.class_c_on(1.0, 4.0).unwrap() - 2.0).abs() < 1e-12
        );
        assert!(
            (ScalarLink::Logistic.class_c_on(-2.0, 2.0).unwrap() - 4.0f64.exp()).abs() < 1e-9
        );
    }

    #[test]
    fn d2_range_logistic_straddles_zero() {
        let (lo, hi) = ScalarLink::Logistic.d2_range_on(-2.0, 2.0);
        assert_eq!(hi, 0.25);
        assert!((lo - ScalarLink::Logistic.d2(2.0)).abs() < 1e-15);
    }
}
