use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A configs x splits table of scores (lower is better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub configs: Vec<String>,
    pub splits: Vec<String>,
    /// `values[config][split]`; `None` marks a failed cell.
    pub values: Vec<Vec<Option<f64>>>,
}

impl ResultTable {
    pub fn new(configs: Vec<String>, splits: Vec<String>) -> Self {
        let values = vec![vec![None; splits.len()]; configs.len()];
        ResultTable { configs, splits, values }
    }

    fn cell(&self, config: usize, split: usize) -> Result<f64> {
        self.values[config][split]
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::MissingCell {
                config: self.configs[config].clone(),
                split: self.splits[split].clone(),
            })
    }

    fn column(&self, split: usize) -> Result<Vec<f64>> {
        (0..self.configs.len()).map(|c| self.cell(c, split)).collect()
    }
}

/// Ascending ranks starting at 1; tied values share their mean rank.
pub fn rank_within(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank of each config across splits.
pub fn average_rank(table: &ResultTable) -> Result<Vec<f64>> {
    let mut sums = vec![0.0; table.configs.len()];
    for split in 0..table.splits.len() {
        for (sum, r) in sums.iter_mut().zip(rank_within(&table.column(split)?)) {
            *sum += r;
        }
    }
    let count = table.splits.len().max(1) as f64;
    Ok(sums.into_iter().map(|s| s / count).collect())
}

/// Each cell minus the minimum of its split.
pub fn deviation_from_min(table: &ResultTable) -> Result<ResultTable> {
    let mut out = table.clone();
    for split in 0..table.splits.len() {
        let column = table.column(split)?;
        let min = column.iter().copied().fold(f64::INFINITY, f64::min);
        for (c, v) in column.into_iter().enumerate() {
            out.values[c][split] = Some(v - min);
        }
    }
    Ok(out)
}
