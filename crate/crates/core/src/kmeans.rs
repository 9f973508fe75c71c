//! Seeded k-means with k-means++ initialization and restarts.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when the relative WCSS improvement of one iteration drops below
    /// this value.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iters: 300,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster ids numbered by first appearance.
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub wcss: f64,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs `cfg.restarts` seeded k-means++ / Lloyd runs and keeps the one with
/// the lowest within-cluster sum of squares (earliest restart on ties).
pub fn kmeans(points: ArrayView2<'_, f64>, k: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }
    let restarts = cfg.restarts.max(1);
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            let init = plus_plus(points, k, &mut rng);
            lloyd(points, init, cfg)
        })
        .collect();
    let mut best = runs
        .into_iter()
        .reduce(|best, run| if run.wcss < best.wcss { run } else { best })
        .expect("at least one restart");
    canonicalize(&mut best);
    Ok(best)
}

fn plus_plus(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut dist: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target just past the last positive weight
            pick.unwrap_or_else(|| dist.iter().rposition(|&d| d > 0.0).expect("positive weight"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(next)));
        }
    }
    let mut centroids = Array2::zeros((k, points.ncols()));
    for (c, &i) in chosen.iter().enumerate() {
        centroids.row_mut(c).assign(&points.row(i));
    }
    centroids
}

fn assign(points: ArrayView2<'_, f64>, centroids: &Array2<f64>) -> Vec<usize> {
    points
        .rows()
        .into_iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (c, centroid) in centroids.rows().into_iter().enumerate() {
                let d = sq_dist(p, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect()
}

/// Moves the point farthest from its centroid into each empty cluster,
/// taking only from clusters with more than one member.
fn fill_empty(points: ArrayView2<'_, f64>, labels: &mut [usize], centroids: &mut Array2<f64>) {
    let k = centroids.nrows();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let d = sq_dist(points.row(i), centroids.row(l));
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        let Some((i, _)) = donor else { return };
        counts[labels[i]] -= 1;
        counts[empty] += 1;
        labels[i] = empty;
        centroids.row_mut(empty).assign(&points.row(i));
    }
}

/// Recomputes centroids as member means and returns the WCSS about them.
fn update(points: ArrayView2<'_, f64>, labels: &[usize], centroids: &mut Array2<f64>) -> f64 {
    let k = centroids.nrows();
    let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
    let mut counts = vec![0usize; k];
    for (p, &l) in points.rows().into_iter().zip(labels) {
        sums.row_mut(l).zip_mut_with(&p, |s, x| *s += x);
        counts[l] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let inv = 1.0 / count as f64;
            centroids.row_mut(c).assign(&sums.row(c).mapv(|s| s * inv));
        }
    }
    points
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, centroids.row(l)))
        .sum()
}

fn lloyd(points: ArrayView2<'_, f64>, mut centroids: Array2<f64>, cfg: &KMeansConfig) -> KMeansResult {
    let mut labels = assign(points, &centroids);
    fill_empty(points, &mut labels, &mut centroids);
    let mut wcss = update(points, &labels, &mut centroids);
    for _ in 1..cfg.max_iters.max(1) {
        if wcss == 0.0 {
            break;
        }
        let mut next = assign(points, &centroids);
        fill_empty(points, &mut next, &mut centroids);
        let next_wcss = update(points, &next, &mut centroids);
        let improvement = (wcss - next_wcss) / wcss;
        labels = next;
        wcss = next_wcss;
        if improvement < cfg.tol {
            break;
        }
    }
    KMeansResult { labels, centroids, wcss }
}

fn canonicalize(result: &mut KMeansResult) {
    let k = result.centroids.nrows();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for l in result.labels.iter_mut() {
        if map[*l] == usize::MAX {
            map[*l] = next;
            next += 1;
        }
        *l = map[*l];
    }
    let old = result.centroids.clone();
    for (from, &to) in map.iter().enumerate() {
        if to != usize::MAX {
            result.centroids.row_mut(to).assign(&old.row(from));
        }
    }
}
