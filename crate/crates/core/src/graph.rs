//! Sparse affinity graph construction from a kernel bank.
//!
//! Each kernel is shifted to be nonnegative and scaled by its Frobenius
//! norm, stripped of self-loops, pruned to each vertex's `c` strongest
//! neighbors and symmetrized. The per-kernel graphs are then fused into one
//! affinity normalized to unit Frobenius norm.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::kernels::{compute_kernel_bank, KernelId, KernelMatrix};
use crate::sparse::{RowBuilder, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Equal,
    Entropy,
}

/// How the row-wise pruned matrix `S` is made symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetrization {
    /// `(S + S^T) / 2`
    #[default]
    Average,
    /// elementwise `max(S, S^T)`
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub neighbors: usize,
    pub sparsify: bool,
    pub weighting: Weighting,
    pub symmetrization: Symmetrization,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            neighbors: 15,
            sparsify: true,
            weighting: Weighting::Equal,
            symmetrization: Symmetrization::Average,
        }
    }
}

/// Symmetric, nonnegative, zero-diagonal affinity with unit Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity {
    matrix: SparseMatrix,
}

impl SparseAffinity {
    /// Validates `matrix` and rescales it to unit Frobenius norm.
    pub fn new(mut matrix: SparseMatrix) -> Result<Self> {
        for (i, j, v) in matrix.entries() {
            if i == j {
                return Err(Error::Config(format!("affinity has self-loop at {i}")));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("affinity entry ({i}, {j}) = {v}")));
            }
        }
        if !matrix.is_symmetric() {
            return Err(Error::Config("affinity is not symmetric".into()));
        }
        let norm = matrix.frobenius_norm();
        if norm == 0.0 {
            return Err(Error::DisconnectedGraph);
        }
        matrix.scale(1.0 / norm);
        Ok(SparseAffinity { matrix })
    }

    pub fn from_dense(dense: &Array2<f64>) -> Result<Self> {
        if !dense.is_square() {
            return Err(Error::DimensionMismatch(format!("{:?} is not square", dense.dim())));
        }
        Self::new(SparseMatrix::from_dense(dense))
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.matrix.row_sums()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.matrix.to_dense()
    }

    /// Fraction of total edge weight joining vertices with the same label.
    pub fn within_mass_fraction(&self, labels: &[usize]) -> f64 {
        let (mut within, mut total) = (0.0, 0.0);
        for (i, j, v) in self.matrix.entries() {
            total += v;
            if labels[i] == labels[j] {
                within += v;
            }
        }
        within / total
    }
}

/// `(K - min K) / |K|_F`, with the norm of the unshifted kernel.
pub fn shift_scale(kernel: &KernelMatrix) -> Result<Array2<f64>> {
    let values = &kernel.values;
    if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row, col });
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateKernel);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(values.mapv(|v| (v - min) / norm))
}

pub fn remove_self_loops(mut adjacency: Array2<f64>) -> Array2<f64> {
    adjacency.diag_mut().fill(0.0);
    adjacency
}

/// Keeps the `c` largest off-diagonal entries of every row, then
/// symmetrizes.
///
/// Ties at the `c`-th value go to the smaller column index. The result has
/// at most `2c` entries per row.
pub fn knn_sparsify(
    adjacency: &Array2<f64>,
    c: usize,
    symmetrization: Symmetrization,
) -> Result<SparseMatrix> {
    if c < 1 {
        return Err(Error::InvalidNeighbors);
    }
    if !adjacency.is_square() {
        return Err(Error::DimensionMismatch(format!("{:?} is not square", adjacency.dim())));
    }
    let n = adjacency.nrows();
    let mut triplets = Vec::with_capacity(2 * n * c.min(n));
    let mut candidates: Vec<(usize, f64)> = Vec::with_capacity(n);
    for (i, row) in adjacency.rows().into_iter().enumerate() {
        candidates.clear();
        candidates.extend(
            row.iter()
                .copied()
                .enumerate()
                .filter(|&(j, v)| j != i && v > 0.0),
        );
        if candidates.len() > c {
            let order = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
            candidates.select_nth_unstable_by(c - 1, order);
            candidates.truncate(c);
        }
        for &(j, v) in &candidates {
            triplets.push((i, j, v));
            triplets.push((j, i, v));
        }
    }
    // Each position collects S_ij and/or S_ji.
    Ok(match symmetrization {
        Symmetrization::Average => {
            let summed = SparseMatrix::from_triplets(n, triplets, |a, b| a + b);
            let mut out = summed;
            out.scale(0.5);
            out
        }
        Symmetrization::Max => SparseMatrix::from_triplets(n, triplets, f64::max),
    })
}

/// Fusion weights for a set of per-kernel graphs.
///
/// Entropy weighting treats each graph's stored entries as a distribution
/// and weights graphs proportionally to the inverse of its Shannon entropy.
/// Graphs with no edges get weight zero.
pub fn fusion_weights(graphs: &[SparseMatrix], weighting: Weighting) -> Vec<f64> {
    let m = graphs.len();
    match weighting {
        Weighting::Equal => vec![1.0 / m as f64; m],
        Weighting::Entropy => {
            let inverse: Vec<f64> = graphs
                .iter()
                .map(|g| {
                    let total: f64 = g.values().iter().sum();
                    if total <= 0.0 {
                        return 0.0;
                    }
                    let entropy: f64 = g
                        .values()
                        .iter()
                        .map(|&v| {
                            let p = v / total;
                            -p * p.ln()
                        })
                        .sum();
                    if entropy > 0.0 {
                        1.0 / entropy
                    } else {
                        0.0
                    }
                })
                .collect();
            let sum: f64 = inverse.iter().sum();
            if sum > 0.0 {
                inverse.iter().map(|w| w / sum).collect()
            } else {
                vec![1.0 / m as f64; m]
            }
        }
    }
}

/// Weighted sum of the per-kernel graphs, scaled to unit Frobenius norm.
pub fn fuse(graphs: &[SparseMatrix], weighting: Weighting) -> Result<SparseAffinity> {
    let first = graphs.first().ok_or(Error::EmptyFusion)?;
    let n = first.n();
    if let Some(bad) = graphs.iter().find(|g| g.n() != n) {
        return Err(Error::DimensionMismatch(format!(
            "cannot fuse {n}x{n} with {0}x{0}",
            bad.n()
        )));
    }
    let weights = fusion_weights(graphs, weighting);
    let mut scratch = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut builder = RowBuilder::with_capacity(n, graphs.iter().map(SparseMatrix::nnz).max().unwrap_or(0));
    for i in 0..n {
        for (graph, &w) in graphs.iter().zip(&weights) {
            for (j, v) in graph.row(i) {
                if scratch[j] == 0.0 {
                    touched.push(j);
                }
                scratch[j] += w * v;
            }
        }
        touched.sort_unstable();
        for &j in &touched {
            if scratch[j] > 0.0 {
                builder.push(j, scratch[j]);
            }
            scratch[j] = 0.0;
        }
        touched.clear();
        builder.finish_row();
    }
    SparseAffinity::new(builder.build())
}

/// Per-kernel adjacency: shift and scale, drop self-loops, optionally prune.
pub fn kernel_adjacency(kernel: &KernelMatrix, cfg: &GraphConfig) -> Result<SparseMatrix> {
    let adjacency = remove_self_loops(shift_scale(kernel)?);
    if cfg.sparsify {
        knn_sparsify(&adjacency, cfg.neighbors, cfg.symmetrization)
    } else {
        Ok(SparseMatrix::from_dense(&adjacency))
    }
}

/// Full graph construction: kernel bank, per-kernel adjacency, fusion.
pub fn build_affinity(
    emb: &EmbeddingSet,
    bank: &[KernelId],
    cfg: &GraphConfig,
) -> Result<SparseAffinity> {
    if cfg.neighbors < 1 {
        return Err(Error::InvalidNeighbors);
    }
    let kernels = compute_kernel_bank(emb, bank)?;
    let graphs = kernels
        .into_par_iter()
        .map(|k| kernel_adjacency(&k, cfg))
        .collect::<Result<Vec<_>>>()?;
    fuse(&graphs, cfg.weighting)
}
