//! Dense symmetric eigendecomposition backed by faer.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{Mat, Par};
use ndarray::Array2;

use crate::error::{Error, Result};

/// Eigenvalues in ascending order; column `i` of `vectors` belongs to
/// `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Full eigendecomposition of a symmetric matrix. Only the lower triangle is
/// read. Runs sequentially so results do not depend on the thread pool.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<SymmetricEigen> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch(format!("{:?} is not square", matrix.dim())));
    }
    let n = matrix.nrows();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let a = Mat::<f64>::from_fn(n, n, |i, j| matrix[[i, j]]);
    let mut s = faer::diag::Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let par = Par::Seq;
    let scratch = evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    );
    let mut buffer = MemBuffer::new(scratch);
    evd::self_adjoint_evd(
        a.as_ref(),
        s.as_mut(),
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buffer),
        Default::default(),
    )
    .map_err(|_| Error::EigenNoConvergence { n })?;

    let values: Vec<f64> = s.column_vector().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNoConvergence { n });
    }
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| u[(i, j)]);
    Ok(SymmetricEigen { values, vectors })
}
