use serde::Serialize;

use super::Vector;

/// One solver iteration. Row 0 is the starting point (zero step). For
/// backtracking runs, rejected attempts appear with `accepted = false` and
/// the point unchanged.
#[derive(Debug, Clone, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Smooth objective value f(x).
    pub f_value: f64,
    /// Composite value F(x) = f(x) + g(x).
    pub composite_value: f64,
    /// F(x) - F*, when the optimum is known.
    pub gap: Option<f64>,
    /// Norm of the attempted step, in the solver's norm.
    pub step_norm: f64,
    pub sigma: f64,
    /// Progress ratio of backtracking iterations; absent elsewhere.
    pub rho: Option<f64>,
    pub accepted: bool,
    /// Seconds since the start of the solve.
    pub wall_time: f64,
    /// Certified fraction of the achievable model decrease, when the inner
    /// subproblem solver reports one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_achieved: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Converged,
    MaxIter,
    DomainViolation,
    NumericalFailure,
}

/// Full record of one solver run.
#[derive(Clone, Serialize)]
pub struct SolveTrace {
    pub solver: String,
    pub records: Vec<IterRecord>,
    pub status: TerminalStatus,
    pub f_star: Option<f64>,
    pub final_point: Vector,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Iterates x_0, x_1, ... when point recording was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vector>>,
    /// Largest two-sided metric mismatch seen by the eta monitor, when it ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_observed: Option<f64>,
}

impl SolveTrace {
    pub fn new(solver: &str, f_star: Option<f64>, x0: Vector, record_points: bool) -> Self {
        Self {
            solver: solver.to_string(),
            records: Vec::new(),
            status: TerminalStatus::MaxIter,
            f_star,
            final_point: x0,
            warnings: Vec::new(),
            points: if record_points { Some(Vec::new()) } else { None },
            eta_observed: None,
        }
    }

    pub fn push(&mut self, rec: IterRecord, x: &Vector) {
        debug_assert!(self
            .records
            .last()
            .map(|r| rec.iter > r.iter)
            .unwrap_or(true));
        self.records.push(rec);
        self.final_point = x.clone();
        if let Some(p) = &mut self.points {
            p.push(x.clone());
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn gap_of(&self, rec: &IterRecord) -> Option<f64> {
        rec.gap
    }

    /// Records of accepted iterations, in order.
    pub fn accepted(&self) -> impl Iterator<Item = &IterRecord> {
        self.records.iter().filter(|r| r.accepted)
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map(|r| r.iter).unwrap_or(0)
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.gap)
    }

    /// CSV with the fixed column order
    /// `iter,f,F,gap,step_norm,sigma,rho,accepted`; inapplicable gap and rho
    /// render as empty fields. Wall time is intentionally not included so
    /// reruns are byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,f,F,gap,step_norm,sigma,rho,accepted\n");
        for r in &self.records {
            let gap = r.gap.map(|g| format!("{g}")).unwrap_or_default();
            let rho = r.rho.map(|g| format!("{g}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.iter, r.f_value, r.composite_value, gap, r.step_norm, r.sigma, rho, r.accepted
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trace serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iter: usize, f: f64) -> IterRecord {
        IterRecord {
            iter,
            f_value: f,
            composite_value: f,
            gap: Some(f),
            step_norm: 0.1,
            sigma: 1.0,
            rho: None,
            accepted: true,
            wall_time: 0.0,
            theta_achieved: None,
        }
    }

    #[test]
    fn csv_columns_and_empty_rho() {
        let mut t = SolveTrace::new("exact_newton", Some(0.0), Vector::zeros(1), false);
        t.push(rec(0, 1.0), &Vector::zeros(1));
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,f,F,gap,step_norm,sigma,rho,accepted");
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 8);
        assert_eq!(row.split(',').nth(6).unwrap(), "");
    }
}
