use nalgebra::{DMatrix, DVector};

use crate::core::{Objective, StabilityMeta, SymMatrix, Vector};

use super::{ObjectivesError, ScalarLink};

/// Row normalization norm. The trust-region norm pairs with its dual; rows
/// are normalized in the dual so that per-sample arguments move by at most
/// the step norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowNorm {
    L2,
    Linf,
}

/// Generalized linear objective `f(x) = sum_i phi(a_i' x)` with labels folded
/// into the rows. Rows are normalized to unit dual norm on construction.
pub struct GlmObjective {
    a: DMatrix<f64>,
    link: ScalarLink,
    f_star: Option<f64>,
    minimizer: Option<Vector>,
    meta: Option<StabilityMeta>,
    name: String,
}

impl GlmObjective {
    /// Build from dense rows. When `normalize` is set, each row is scaled to
    /// unit norm; zero rows are dropped with a warning.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        link: ScalarLink,
        normalize: Option<RowNorm>,
    ) -> Result<Self, ObjectivesError> {
        if rows.is_empty() {
            return Err(ObjectivesError::EmptyData);
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(ObjectivesError::InvalidParams(
                "rows must be nonempty and of equal length".into(),
            ));
        }
        let mut kept = Vec::with_capacity(rows.len());
        let mut dropped = 0usize;
        for (i, row) in rows.into_iter().enumerate() {
            let norm = match normalize {
                Some(RowNorm::L2) => row.iter().map(|v| v * v).sum::<f64>().sqrt(),
                Some(RowNorm::Linf) => row.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                None => 1.0,
            };
            if normalize.is_some() && norm <= 0.0 {
                log::warn!("dropping all-zero data row {i}");
                dropped += 1;
                continue;
            }
            kept.push(row.into_iter().map(|v| v / norm).collect::<Vec<_>>());
        }
        if kept.is_empty() {
            return Err(ObjectivesError::EmptyData);
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} zero rows");
        }
        let m = kept.len();
        let a = DMatrix::from_fn(m, n, |i, j| kept[i][j]);
        Ok(Self {
            a,
            link,
            f_star: None,
            minimizer: None,
            meta: None,
            name: format!("glm_{}", link.label()),
        })
    }

    /// One-dimensional instance f(x) = phi(x).
    pub fn one_dim(link: ScalarLink) -> Self {
        Self::from_rows(vec![vec![1.0]], link, None).expect("static row")
    }

    pub fn with_f_star(mut self, f_star: f64, minimizer: Vector) -> Self {
        self.f_star = Some(f_star);
        self.minimizer = Some(minimizer);
        self
    }

    pub fn with_meta(mut self, meta: StabilityMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn link(&self) -> ScalarLink {
        self.link
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.a.row(i).iter().copied().collect()
    }

    fn arguments(&self, x: &Vector) -> DVector<f64> {
        &self.a * x.as_dvector()
    }
}

impl Objective for GlmObjective {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.arguments(x).iter().map(|u| self.link.value(*u)).sum()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let u = self.arguments(x);
        let w = DVector::from_iterator(u.len(), u.iter().map(|ui| self.link.d1(*ui)));
        Vector::from_dvector(self.a.transpose() * w)
    }

    fn hessian(&self, x: &Vector) -> SymMatrix {
        let u = self.arguments(x);
        let mut scaled = self.a.clone();
        for (i, ui) in u.iter().enumerate() {
            let w = self.link.d2(*ui);
            scaled.row_mut(i).scale_mut(w);
        }
        let h = self.a.transpose() * scaled;
        // A' diag(w) A is symmetric up to roundoff; mirror the upper triangle.
        SymMatrix::from_dense(h).expect("glm hessian is symmetric")
    }

    fn hvp(&self, x: &Vector, v: &Vector) -> Vector {
        let u = self.arguments(x);
        let av = &self.a * v.as_dvector();
        let w = DVector::from_iterator(
            u.len(),
            u.iter().zip(av.iter()).map(|(ui, avi)| self.link.d2(*ui) * avi),
        );
        Vector::from_dvector(self.a.transpose() * w)
    }

    fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    fn minimizer(&self) -> Option<Vector> {
        self.minimizer.clone()
    }

    /// Uniform row subsample without replacement, rescaled by m/s so the
    /// estimate is unbiased.
    fn sketched_hessian(&self, x: &Vector, rows: usize, seed: u64) -> Option<SymMatrix> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let m = self.a.nrows();
        let s = rows.clamp(1, m);
        let mut idx: Vec<usize> = (0..m).collect();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx.truncate(s);
        let u = self.arguments(x);
        let scale = m as f64 / s as f64;
        let n = self.a.ncols();
        Some(SymMatrix::from_fn_upper(n, |p, q| {
            idx.iter()
                .map(|&i| {
                    scale * self.link.d2(u[i]) * self.a[(i, p)] * self.a[(i, q)]
                })
                .sum()
        }))
    }

    fn stability_metadata(&self) -> Option<StabilityMeta> {
        self.meta.clone()
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_normalized_to_unit_dual_norm() {
        let g = GlmObjective::from_rows(
            vec![vec![3.0, 4.0]],
            ScalarLink::Logistic,
            Some(RowNorm::L2),
        )
        .unwrap();
        let r = g.row(0);
        assert!((r[0] - 0.6).abs() < 1e-12 && (r[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn separability_matrix_vs_sum() {
        let g = GlmObjective::from_rows(
            vec![vec![1.0, 0.0], vec![0.6, 0.8], vec![0.0, -1.0]],
            ScalarLink::Logistic,
            None,
        )
        .unwrap();
        let x = Vector::from_slice(&[0.3, -0.7]).unwrap();
        let direct: f64 = (0..3)
            .map(|i| {
                let r = g.row(i);
                ScalarLink::Logistic.value(r[0] * x[0] + r[1] * x[1])
            })
            .sum();
        assert!((g.value(&x) - direct).abs() <= 1e-12);
    }

    #[test]
    fn hvp_matches_dense_hessian() {
        let g = GlmObjective::from_rows(
            vec![vec![1.0, 0.0], vec![0.6, 0.8]],
            ScalarLink::ExpShift,
            None,
        )
        .unwrap();
        let x = Vector::from_slice(&[0.2, 0.1]).unwrap();
        let v = Vector::from_slice(&[-1.0, 2.0]).unwrap();
        let dense = g.hessian(&x).matvec(&v);
        let fast = g.hvp(&x, &v);
        assert!(dense.sub(&fast).norm_l2() < 1e-12);
    }
}
