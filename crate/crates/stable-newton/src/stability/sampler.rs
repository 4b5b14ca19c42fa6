use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::core::{LevelSetDomain, ProxTerm, Vector};

use super::StabilityError;

/// How sample pairs are produced.
#[derive(Debug, Clone)]
pub enum SampleMode {
    /// Exhaustive 1-D grid when the problem is one-dimensional, random
    /// otherwise.
    Auto,
    Random,
    /// 1-D grid with the given resolution; default is 1e-3 times the domain
    /// width.
    Grid1D { resolution: Option<f64> },
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub pairs: usize,
    pub seed: u64,
    pub mode: SampleMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            pairs: 10_000,
            seed: 0,
            mode: SampleMode::Auto,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_pairs(mut self, pairs: usize) -> Self {
        self.pairs = pairs;
        self
    }

    pub(crate) fn use_grid(&self, dim: usize) -> bool {
        match self.mode {
            SampleMode::Auto => dim == 1,
            SampleMode::Random => false,
            SampleMode::Grid1D { .. } => dim == 1,
        }
    }

    pub(crate) fn grid_resolution(&self) -> Option<f64> {
        match self.mode {
            SampleMode::Grid1D { resolution } => resolution,
            _ => None,
        }
    }
}

pub(crate) fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Axis-aligned bounding box of the domain: exact for box and ball indicator
/// domains, probed along rays through the anchor otherwise. The box may
/// overestimate; membership is always re-checked by rejection.
pub(crate) fn bounding_box(dom: &LevelSetDomain) -> Result<(Vec<f64>, Vec<f64>), StabilityError> {
    match &dom.objective.nonsmooth {
        ProxTerm::BoxIndicator { lo, hi } => {
            Ok((lo.as_slice().to_vec(), hi.as_slice().to_vec()))
        }
        ProxTerm::BallIndicator { center, radius, .. } => {
            // The l2 and max-norm balls both fit in this box.
            let lo = center.iter().map(|c| c - radius).collect();
            let hi = center.iter().map(|c| c + radius).collect();
            Ok((lo, hi))
        }
        _ => probed_box(dom),
    }
}

fn probed_box(dom: &LevelSetDomain) -> Result<(Vec<f64>, Vec<f64>), StabilityError> {
    let n = dom.x0.dim();
    let mut rng = rng_for(0x5eed_b0c5);
    let mut dirs: Vec<Vector> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(Vector::new(e.clone()).expect("finite"));
        e[i] = -1.0;
        dirs.push(Vector::new(e).expect("finite"));
    }
    for _ in 0..(8 * n + 24) {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let v = Vector::new(raw).expect("finite");
        let norm = v.norm_l2();
        if norm > 1e-9 {
            dirs.push(v.scale(1.0 / norm));
        }
    }
    let mut lo = dom.x0.as_slice().to_vec();
    let mut hi = dom.x0.as_slice().to_vec();
    for d in &dirs {
        let t = ray_extent(dom, d)?;
        let boundary = dom.x0.add_scaled(t, d);
        for i in 0..n {
            lo[i] = lo[i].min(boundary[i]);
            hi[i] = hi[i].max(boundary[i]);
        }
    }
    for i in 0..n {
        let w = (hi[i] - lo[i]).max(1e-12);
        lo[i] -= 0.02 * w;
        hi[i] += 0.02 * w;
    }
    Ok((lo, hi))
}

/// Largest t with x0 + t*dir inside the sub-level set, by doubling then
/// bisection. Convexity makes membership along the ray an interval.
pub(crate) fn ray_extent(dom: &LevelSetDomain, dir: &Vector) -> Result<f64, StabilityError> {
    let mut t = 1e-6;
    if !dom.contains(&dom.x0.add_scaled(t, dir)) {
        return Ok(0.0);
    }
    let mut iter = 0;
    while dom.contains(&dom.x0.add_scaled(t * 2.0, dir)) {
        t *= 2.0;
        iter += 1;
        if iter > 220 {
            return Err(StabilityError::UnboundedDomain);
        }
    }
    let mut lo = t;
    let mut hi = t * 2.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dom.contains(&dom.x0.add_scaled(mid, dir)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// One point from the domain: rejection sampling in the bounding box with a
/// ray-sampling fallback when acceptance is poor.
pub(crate) fn sample_point(
    dom: &LevelSetDomain,
    bx: &(Vec<f64>, Vec<f64>),
    rng: &mut ChaCha12Rng,
) -> Result<Vector, StabilityError> {
    let n = dom.x0.dim();
    for _ in 0..500 {
        let raw: Vec<f64> = (0..n)
            .map(|i| bx.0[i] + rng.random::<f64>() * (bx.1[i] - bx.0[i]))
            .collect();
        let p = Vector::new(raw).expect("finite");
        if dom.contains(&p) {
            return Ok(p);
        }
    }
    // Fall back to a point on a random ray from the anchor; still uniform
    // enough for a max-estimator and always feasible.
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let v = Vector::new(raw).expect("finite");
    let norm = v.norm_l2();
    if norm <= 1e-12 {
        return Ok(dom.x0.clone());
    }
    let dir = v.scale(1.0 / norm);
    let t = ray_extent(dom, &dir)?;
    Ok(dom.x0.add_scaled(t * rng.random::<f64>(), &dir))
}

/// Members of the 1-D domain on a uniform grid over its bounding interval.
pub(crate) fn grid_points_1d(
    dom: &LevelSetDomain,
    resolution: Option<f64>,
) -> Result<Vec<Vector>, StabilityError> {
    let bx = bounding_box(dom)?;
    let (a, b) = (bx.0[0], bx.1[0]);
    let res = resolution.unwrap_or(1e-3 * (b - a).max(1e-9));
    let count = (((b - a) / res).ceil() as usize + 1).max(2);
    let mut out = Vec::new();
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        let p = Vector::new(vec![a + t * (b - a)]).expect("finite");
        if dom.contains(&p) {
            out.push(p);
        }
    }
    if out.len() < 2 {
        return Err(StabilityError::InsufficientSamples {
            found: out.len(),
            needed: 2,
        });
    }
    Ok(out)
}

/// Record the sampled diameter into a domain clone and return both the
/// points and the measured diameter.
pub(crate) fn sampled_diameter(points: &[Vector], norm: &crate::core::NormSpec) -> f64 {
    let mut d: f64 = 0.0;
    // Pairwise over a capped subset; the exact max is not required, only a
    // faithful estimate.
    let cap = points.len().min(400);
    for i in 0..cap {
        for j in (i + 1)..cap {
            d = d.max(norm.distance(&points[i], &points[j]));
        }
    }
    d
}
