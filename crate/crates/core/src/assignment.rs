//! Optimal one-to-one assignment on integer weight matrices.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

/// Maximum-total-weight matching of rows to columns.
///
/// `weights[r][c]` must be nonnegative. Returns, for every row, the matched
/// column or `None` when the row has no column left (more rows than
/// columns).
pub fn max_weight_matching(weights: &[Vec<i64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let size = rows.max(cols);
    if size == 0 {
        return Vec::new();
    }
    let mut padded = Matrix::new(size, size, 0i64);
    for (r, row) in weights.iter().enumerate() {
        assert_eq!(row.len(), cols, "ragged weight matrix");
        for (c, &w) in row.iter().enumerate() {
            padded[(r, c)] = w;
        }
    }
    let (_, assignment) = kuhn_munkres(&padded);
    assignment
        .into_iter()
        .take(rows)
        .map(|c| (c < cols).then_some(c))
        .collect()
}
