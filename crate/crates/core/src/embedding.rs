//! Speaker embedding matrices.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// An `n x d` matrix of speaker embeddings, one row per speech segment.
///
/// Construction rejects empty shapes and non-finite entries. Zero rows are
/// allowed here and rejected by the angle-based kernels that cannot handle
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    vectors: Array2<f64>,
}

impl EmbeddingSet {
    pub fn new(vectors: Array2<f64>) -> Result<Self> {
        let (rows, cols) = vectors.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyEmbeddings { rows, cols });
        }
        if let Some(((row, col), _)) = vectors.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { vectors })
    }

    /// Builds a set from row vectors. All rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} values, expected {d}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let vectors = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::new(vectors)
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.vectors.select(ndarray::Axis(0), rows))
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.vectors
    }
}
