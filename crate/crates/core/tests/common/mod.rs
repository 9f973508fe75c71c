//! Reference implementations and generators shared by the integration
//! tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use mksc::pipeline::{SpeakerTurn, Timeline};
use mksc::EmbeddingSet;
use ndarray::Array2;
use rand::Rng;

/// Grid unit of the DER oracle, in seconds.
pub const UNIT: f64 = 0.025;

/// Random embeddings with entries in [-1, 1) and no zero rows.
pub fn random_embeddings<R: Rng>(rng: &mut R, n: usize, d: usize) -> EmbeddingSet {
    let mut v: Array2<f64> = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
    for mut row in v.rows_mut() {
        if row.iter().all(|x: &f64| x.abs() < 1e-3) {
            row[0] = 1.0;
        }
    }
    EmbeddingSet::new(v).unwrap()
}

/// Dense affinity of `k` disjoint complete blocks of `m` vertices with edge
/// weights in [0.6, 1.0). Vertex `i` belongs to block `i / m`.
pub fn block_affinity<R: Rng>(rng: &mut R, k: usize, m: usize) -> Array2<f64> {
    let n = k * m;
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            if i / m == j / m {
                let w = rng.random_range(0.6..1.0);
                a[[i, j]] = w;
                a[[j, i]] = w;
            }
        }
    }
    a
}

/// A turn on the oracle grid: `(speaker, start, end)` in [`UNIT`]s.
pub type GridTurn = (usize, i64, i64);

pub fn grid_timeline(turns: &[GridTurn], prefix: &str) -> Timeline {
    Timeline::new(
        turns
            .iter()
            .map(|&(spk, s, e)| SpeakerTurn {
                recording_id: "rec".into(),
                start: s as f64 * UNIT,
                duration: (e - s) as f64 * UNIT,
                speaker: format!("{prefix}{spk}"),
            })
            .collect(),
    )
}

/// Random turns with starts and ends on multiples of 0.1 s.
pub fn random_grid_turns<R: Rng>(rng: &mut R, speakers: usize, count: usize) -> Vec<GridTurn> {
    (0..count)
        .map(|_| {
            let s = 4 * rng.random_range(0..100);
            let len = 4 * rng.random_range(1..20);
            (rng.random_range(0..speakers), s, s + len)
        })
        .collect()
}

fn active(turns: &[GridTurn], cell: i64) -> BTreeSet<usize> {
    turns.iter().filter(|&&(_, s, e)| s <= cell && cell < e).map(|t| t.0).collect()
}

/// `(missed, false_alarm, confusion, total_ref)` in seconds, by walking
/// every grid cell and trying every one-to-one speaker mapping.
pub fn der_oracle(reference: &[GridTurn], hypothesis: &[GridTurn], half_collar: i64, include_overlap: bool) -> (f64, f64, f64, f64) {
    let lo = reference.iter().chain(hypothesis).map(|t| t.1).min().unwrap_or(0) - half_collar - 1;
    let hi = reference.iter().chain(hypothesis).map(|t| t.2).max().unwrap_or(0) + half_collar + 1;
    let ref_speakers: Vec<usize> = reference.iter().map(|t| t.0).collect::<BTreeSet<_>>().into_iter().collect();
    let hyp_speakers: Vec<usize> = hypothesis.iter().map(|t| t.0).collect::<BTreeSet<_>>().into_iter().collect();

    // a boundary is any grid point where some reference speaker switches
    let boundaries: Vec<i64> = (lo..=hi)
        .filter(|&b| ref_speakers.iter().any(|&r| {
            let on = |c: i64| active(reference, c).contains(&r);
            on(b - 1) != on(b)
        }))
        .collect();

    let mut cells = Vec::new();
    for c in lo..hi {
        if boundaries.iter().any(|&b| b - half_collar <= c && c < b + half_collar) {
            continue;
        }
        let (r, h) = (active(reference, c), active(hypothesis, c));
        if !include_overlap && r.len() >= 2 {
            continue;
        }
        cells.push((r, h));
    }

    fn mappings(refs: &[usize], hyps: &[usize], used: &mut Vec<usize>, current: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if current.len() == refs.len() {
            out.push(current.clone());
            return;
        }
        current.push(None);
        mappings(refs, hyps, used, current, out);
        current.pop();
        for &h in hyps {
            if !used.contains(&h) {
                used.push(h);
                current.push(Some(h));
                mappings(refs, hyps, used, current, out);
                current.pop();
                used.pop();
            }
        }
    }
    let mut all = Vec::new();
    mappings(&ref_speakers, &hyp_speakers, &mut Vec::new(), &mut Vec::new(), &mut all);

    let correct_under = |m: &Vec<Option<usize>>| -> i64 {
        cells
            .iter()
            .map(|(r, h)| {
                ref_speakers
                    .iter()
                    .zip(m)
                    .filter(|(spk, mapped)| r.contains(spk) && mapped.is_some_and(|x| h.contains(&x)))
                    .count() as i64
            })
            .sum()
    };
    let correct = all.iter().map(correct_under).max().unwrap_or(0);

    let (mut missed, mut fa, mut overlap, mut total) = (0i64, 0i64, 0i64, 0i64);
    for (r, h) in &cells {
        let (nr, nh) = (r.len() as i64, h.len() as i64);
        missed += (nr - nh).max(0);
        fa += (nh - nr).max(0);
        overlap += nr.min(nh);
        total += nr;
    }
    let s = |u: i64| u as f64 * UNIT;
    (s(missed), s(fa), s(overlap - correct), s(total))
}
