//! Laplacian eigendecomposition, eigengap cluster-count estimation and
//! k-means on the spectral embedding.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::eigen::{symmetric_eigen, SymmetricEigen};
use crate::error::{Error, Result};
use crate::graph::SparseAffinity;
use crate::kmeans::{kmeans, KMeansConfig};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `L = D - A`
    #[default]
    Unnormalized,
    /// `L = I - D^-1/2 A D^-1/2`
    #[serde(alias = "normalized")]
    NormalizedSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub k_max: usize,
    /// Fixed cluster count; skips eigengap estimation.
    pub k_oracle: Option<usize>,
    pub laplacian: LaplacianKind,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            k_max: 10,
            k_oracle: None,
            laplacian: LaplacianKind::Unnormalized,
            kmeans_restarts: 10,
            kmeans_max_iters: 300,
            kmeans_tol: 1e-6,
            seed: 0,
        }
    }
}

impl SpectralConfig {
    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            restarts: self.kmeans_restarts,
            max_iters: self.kmeans_max_iters,
            tol: self.kmeans_tol,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::Config("k_max must be >= 1".into()));
        }
        if self.k_oracle == Some(0) {
            return Err(Error::Config("k_oracle must be >= 1".into()));
        }
        if self.kmeans_restarts < 1 || self.kmeans_max_iters < 1 {
            return Err(Error::Config("k-means restarts and iterations must be >= 1".into()));
        }
        if !(self.kmeans_tol.is_finite() && self.kmeans_tol > 0.0) {
            return Err(Error::Config("kmeans_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterResult {
    pub labels: Vec<usize>,
    pub k_star: usize,
    /// The `min(k_max, n)` smallest Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub eigengaps: Vec<f64>,
}

pub fn laplacian(adjacency: &SparseMatrix, kind: LaplacianKind) -> Array2<f64> {
    let n = adjacency.n();
    let degrees = adjacency.row_sums();
    let mut l = Array2::<f64>::zeros((n, n));
    match kind {
        LaplacianKind::Unnormalized => {
            for (i, j, v) in adjacency.entries() {
                l[[i, j]] = -v;
            }
            for (i, d) in degrees.iter().enumerate() {
                l[[i, i]] += d;
            }
        }
        LaplacianKind::NormalizedSymmetric => {
            let inv_sqrt: Vec<f64> = degrees
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
                .collect();
            for (i, j, v) in adjacency.entries() {
                l[[i, j]] = -(inv_sqrt[i] * v * inv_sqrt[j]);
            }
            for i in 0..n {
                l[[i, i]] += 1.0;
            }
        }
    }
    l
}

/// Largest-eigengap estimate over the first `min(k_max, n)` eigenvalues.
///
/// Returns `k*` (1-based, smallest index on ties) and the gap vector
/// `[l2 - l1, ..., lM - lM-1]`.
pub fn estimate_k(eigenvalues: &[f64], k_max: usize) -> (usize, Vec<f64>) {
    let m = k_max.min(eigenvalues.len());
    let gaps: Vec<f64> = eigenvalues[..m].windows(2).map(|w| w[1] - w[0]).collect();
    let mut k_star = 1;
    let mut best = f64::NEG_INFINITY;
    for (i, &g) in gaps.iter().enumerate() {
        if g > best {
            best = g;
            k_star = i + 1;
        }
    }
    (k_star, gaps)
}

/// First component above this magnitude decides an eigenvector's sign.
const SIGN_EPS: f64 = 1e-10;

fn embedding_from(eig: &SymmetricEigen, k: usize) -> Array2<f64> {
    let mut h = eig.vectors.slice(s![.., ..k]).to_owned();
    for mut col in h.columns_mut() {
        let flip = col
            .iter()
            .find(|x| x.abs() > SIGN_EPS)
            .is_some_and(|&x| x < 0.0);
        if flip {
            col.mapv_inplace(|x| -x);
        }
    }
    h
}

/// Orthonormal eigenvectors of the `k` smallest eigenvalues, as columns,
/// each signed so its first non-negligible component is positive.
pub fn spectral_embed(l: &Array2<f64>, k: usize) -> Result<Array2<f64>> {
    let n = l.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidClusterCount { k, n });
    }
    Ok(embedding_from(&symmetric_eigen(l)?, k))
}

pub fn cluster(affinity: &SparseAffinity, cfg: &SpectralConfig) -> Result<ClusterResult> {
    cluster_graph(affinity.matrix(), cfg)
}

/// Spectral clustering of any symmetric nonnegative adjacency, including
/// graphs without edges (every vertex isolated).
pub fn cluster_graph(adjacency: &SparseMatrix, cfg: &SpectralConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let n = adjacency.n();
    if n == 0 {
        return Err(Error::InvalidClusterCount { k: 1, n });
    }
    if let Some(k) = cfg.k_oracle {
        if k > n {
            return Err(Error::InvalidClusterCount { k, n });
        }
    }
    let l = laplacian(adjacency, cfg.laplacian);
    let eig = symmetric_eigen(&l)?;
    let (estimated, eigengaps) = estimate_k(&eig.values, cfg.k_max);
    let k_star = cfg.k_oracle.unwrap_or(estimated);
    let m = cfg.k_max.min(n);
    let h = embedding_from(&eig, k_star);
    let labels = kmeans(h.view(), k_star, &cfg.kmeans())?.labels;
    Ok(ClusterResult {
        labels,
        k_star,
        eigenvalues: eig.values[..m].to_vec(),
        eigengaps,
    })
}
