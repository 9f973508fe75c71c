//! Compressed sparse row storage for square matrices.

use ndarray::Array2;

/// Square CSR matrix. Column indices within each row are strictly increasing
/// and only nonzero values are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseMatrix {
            n,
            indptr: vec![0; n + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Stores every nonzero entry of `dense`.
    pub fn from_dense(dense: &Array2<f64>) -> Self {
        assert!(dense.is_square(), "matrix must be square");
        let n = dense.nrows();
        let mut builder = RowBuilder::with_capacity(n, 0);
        for row in dense.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    builder.push(j, v);
                }
            }
            builder.finish_row();
        }
        builder.build()
    }

    /// Builds a matrix from `(row, col, value)` triplets. Entries sharing a
    /// position are combined with `merge`, left to right in the order they
    /// appear after a stable sort by position. Zero results are dropped.
    pub fn from_triplets(
        n: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        merge: impl Fn(f64, f64) -> f64,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut builder = RowBuilder::with_capacity(n, triplets.len());
        let mut iter = triplets.into_iter().peekable();
        for row in 0..n {
            while let Some(&(r, c, v)) = iter.peek() {
                if r != row {
                    break;
                }
                iter.next();
                let mut acc = v;
                while let Some(&(r2, c2, v2)) = iter.peek() {
                    if (r2, c2) != (r, c) {
                        break;
                    }
                    acc = merge(acc, v2);
                    iter.next();
                }
                if acc != 0.0 {
                    builder.push(c, acc);
                }
            }
            builder.finish_row();
        }
        assert!(iter.next().is_none(), "triplet row out of range");
        builder.build()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.indptr[i]..self.indptr[i + 1];
        match self.indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    /// All stored `(row, col, value)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, self.n));
        for (i, j, v) in self.entries() {
            out[[i, j]] = v;
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(i, j, v)| self.get(j, i) == v)
    }
}

/// Appends rows in order.
pub(crate) struct RowBuilder {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl RowBuilder {
    pub(crate) fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        RowBuilder {
            n,
            indptr,
            indices: Vec::with_capacity(nnz),
            values: Vec::with_capacity(nnz),
        }
    }

    /// Columns must be pushed in increasing order within a row.
    pub(crate) fn push(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.n);
        self.indices.push(col);
        self.values.push(value);
    }

    pub(crate) fn finish_row(&mut self) {
        self.indptr.push(self.indices.len());
    }

    pub(crate) fn build(self) -> SparseMatrix {
        assert_eq!(self.indptr.len(), self.n + 1, "wrong number of rows");
        SparseMatrix {
            n: self.n,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
        }
    }
}
