//! Spherical k-means over unit vectors.
//!
//! Two initialisations share one Lloyd loop: a deterministic farthest-first
//! traversal (used for per-frame component clustering) and a seeded
//! k-means++ draw with restarts (used for prototype fitting and frame
//! summarisation). Assignment is by maximum cosine with ties going to the
//! lowest centroid index; centroids are normalised member means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{add_assign, dot, norm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KMeansError {
    #[error("invalid cluster count {k} for {points} points")]
    InvalidK { k: usize, points: usize },
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("max_iter must be at least 1")]
    InvalidMaxIter,
}

/// Tuning for the seeded variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Independent k-means++ restarts drawn from one seeded stream; the
    /// lowest-inertia run is kept (first wins on ties).
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            restarts: 4,
        }
    }
}

/// Output of a clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub dim: usize,
    /// Row-major `k x dim` unit centroids.
    pub centroids: Vec<f64>,
    pub labels: Vec<usize>,
    /// Sum over points of `1 - cos(point, centroid)`.
    pub inertia: f64,
    /// Inertia after each executed Lloyd iteration.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn centroid_vecs(&self) -> Vec<Vec<f64>> {
        self.centroids.chunks_exact(self.dim).map(<[f64]>::to_vec).collect()
    }
}

fn check_points<P: AsRef<[f64]>>(points: &[P], k: usize) -> Result<usize, KMeansError> {
    if k == 0 || k > points.len() {
        return Err(KMeansError::InvalidK {
            k,
            points: points.len(),
        });
    }
    let dim = points[0].as_ref().len();
    for (index, p) in points.iter().enumerate() {
        let found = p.as_ref().len();
        if found != dim {
            return Err(KMeansError::DimMismatch {
                index,
                expected: dim,
                found,
            });
        }
    }
    Ok(dim)
}

/// Deterministic spherical k-means: farthest-first seeding from point 0,
/// then Lloyd iterations until labels stop changing or `max_iter` is hit.
pub fn farthest_first_kmeans<P: AsRef<[f64]>>(
    points: &[P],
    k: usize,
    max_iter: usize,
) -> Result<KMeansResult, KMeansError> {
    let dim = check_points(points, k)?;
    if max_iter == 0 {
        return Err(KMeansError::InvalidMaxIter);
    }
    let seeds = farthest_first_seeds(points, k);
    Ok(lloyd(points, dim, gather(points, &seeds, dim), max_iter))
}

/// Seeded spherical k-means with k-means++ initialisation.
pub fn seeded_kmeans<P: AsRef<[f64]>>(
    points: &[P],
    k: usize,
    seed: u64,
    cfg: KMeansConfig,
) -> Result<KMeansResult, KMeansError> {
    let dim = check_points(points, k)?;
    if cfg.max_iter == 0 {
        return Err(KMeansError::InvalidMaxIter);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..cfg.restarts.max(1) {
        let seeds = plus_plus_seeds(points, k, &mut rng);
        let run = lloyd(points, dim, gather(points, &seeds, dim), cfg.max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn gather<P: AsRef<[f64]>>(points: &[P], idx: &[usize], dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * dim);
    for &i in idx {
        out.extend_from_slice(points[i].as_ref());
    }
    out
}

fn farthest_first_seeds<P: AsRef<[f64]>>(points: &[P], k: usize) -> Vec<usize> {
    let n = points.len();
    let mut seeds = vec![0usize];
    let mut chosen = vec![false; n];
    chosen[0] = true;
    let mut max_cos: Vec<f64> = points
        .iter()
        .map(|p| dot(p.as_ref(), points[0].as_ref()))
        .collect();
    while seeds.len() < k {
        let mut next = usize::MAX;
        let mut next_cos = f64::INFINITY;
        for i in 0..n {
            if !chosen[i] && max_cos[i] < next_cos {
                next = i;
                next_cos = max_cos[i];
            }
        }
        chosen[next] = true;
        seeds.push(next);
        if seeds.len() < k {
            let s = points[next].as_ref();
            for (i, p) in points.iter().enumerate() {
                let c = dot(p.as_ref(), s);
                if c > max_cos[i] {
                    max_cos[i] = c;
                }
            }
        }
    }
    seeds
}

fn plus_plus_seeds<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let first = rng.random_range(0..n);
    let mut seeds = vec![first];
    let mut chosen = vec![false; n];
    chosen[first] = true;
    // squared chord distance on the sphere is 2(1 - cos); the factor cancels
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| (1.0 - dot(p.as_ref(), points[first].as_ref())).max(0.0))
        .collect();
    while seeds.len() < k {
        let total: f64 = (0..n).filter(|&i| !chosen[i]).map(|i| dist[i]).sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = None;
            let mut last_positive = None;
            for i in (0..n).filter(|&i| !chosen[i]) {
                if dist[i] > 0.0 {
                    last_positive = Some(i);
                    cum += dist[i];
                    if cum > target {
                        pick = Some(i);
                        break;
                    }
                }
            }
            pick.or(last_positive).expect("positive mass")
        } else {
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        chosen[next] = true;
        seeds.push(next);
        let s = points[next].as_ref();
        for (i, p) in points.iter().enumerate() {
            let d = (1.0 - dot(p.as_ref(), s)).max(0.0);
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }
    seeds
}

/// Assign every point to its max-cosine centroid, lowest index on ties.
/// Returns the cosine to the assigned centroid alongside each label.
fn assign<P: AsRef<[f64]>>(points: &[P], centroids: &[f64], dim: usize, labels: &mut [usize], best: &mut [f64]) {
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        let mut bl = 0usize;
        let mut bc = f64::NEG_INFINITY;
        for (c, cen) in centroids.chunks_exact(dim).enumerate() {
            let s = dot(p, cen);
            if s > bc {
                bc = s;
                bl = c;
            }
        }
        labels[i] = bl;
        best[i] = bc;
    }
}

/// Give every empty cluster the point farthest from its own centroid,
/// taken only from clusters that keep at least one member.
fn reseed_empty(labels: &mut [usize], best: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut pick = usize::MAX;
        let mut pick_cos = f64::INFINITY;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] >= 2 && best[i] < pick_cos {
                pick = i;
                pick_cos = best[i];
            }
        }
        counts[labels[pick]] -= 1;
        counts[c] = 1;
        labels[pick] = c;
        best[pick] = 1.0;
    }
}

/// Recompute normalised centroids from labels and return the inertia.
fn update<P: AsRef<[f64]>>(points: &[P], labels: &[usize], centroids: &mut [f64], dim: usize) -> f64 {
    let k = centroids.len() / dim;
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        add_assign(&mut sums[l * dim..(l + 1) * dim], p.as_ref());
        counts[l] += 1;
    }
    let mut inertia = 0.0;
    for c in 0..k {
        let s = &sums[c * dim..(c + 1) * dim];
        let len = norm(s);
        let cen = &mut centroids[c * dim..(c + 1) * dim];
        if len > 1e-12 {
            for (d, v) in cen.iter_mut().zip(s) {
                *d = v / len;
            }
            // members' cosine sum to the normalised mean is |sum|
            inertia += (counts[c] as f64 - len).max(0.0);
        } else {
            // antipodal members cancel; keep the previous direction
            for (p, &l) in points.iter().zip(labels) {
                if l == c {
                    inertia += 1.0 - dot(p.as_ref(), cen);
                }
            }
        }
    }
    inertia
}

fn lloyd<P: AsRef<[f64]>>(points: &[P], dim: usize, mut centroids: Vec<f64>, max_iter: usize) -> KMeansResult {
    let n = points.len();
    let k = centroids.len() / dim;
    let mut labels = vec![0usize; n];
    let mut best = vec![0.0f64; n];
    assign(points, &centroids, dim, &mut labels, &mut best);
    reseed_empty(&mut labels, &mut best, k);
    let mut inertia = update(points, &labels, &mut centroids, dim);
    let mut trace = vec![inertia];
    let mut next = vec![0usize; n];
    while trace.len() < max_iter {
        assign(points, &centroids, dim, &mut next, &mut best);
        reseed_empty(&mut next, &mut best, k);
        if next == labels {
            break;
        }
        std::mem::swap(&mut labels, &mut next);
        inertia = update(points, &labels, &mut centroids, dim);
        trace.push(inertia);
    }
    KMeansResult {
        dim,
        centroids,
        labels,
        inertia,
        iterations: trace.len(),
        inertia_trace: trace,
    }
}
