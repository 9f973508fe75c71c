//! Ablation grids over pipeline settings, scored by DER.
//!
//! Every grid point is run on every recording. A recording acts as one
//! split of the result table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{KernelSelection, RunConfig};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::graph::Weighting;
use crate::pipeline::{diarize_recording, load_embeddings, read_rttm_file, EmbeddingFormat, Segment, Timeline};
use crate::scoring::{average_rank, deviation_from_min, score_recording, DerConfig, ResultTable};
use crate::spectral::LaplacianKind;

/// Neighbor counts of the default sweep.
pub const SWEEP_NEIGHBORS: [usize; 5] = [11, 13, 15, 17, 19];

/// One manifest line: `recording_id emb_path seg_path [ref_rttm_path]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub recording_id: String,
    pub embeddings: PathBuf,
    pub segments: PathBuf,
    pub reference: Option<PathBuf>,
}

/// Reads a manifest. Blank lines and `#` comments are skipped; relative
/// paths are taken relative to the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &str| base.join(p);
    let mut entries: Vec<ManifestEntry> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected 3 or 4 fields, found {}", fields.len()),
            });
        }
        if entries.iter().any(|e| e.recording_id == fields[0]) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("duplicate recording '{}'", fields[0]),
            });
        }
        entries.push(ManifestEntry {
            recording_id: fields[0].to_string(),
            embeddings: resolve(fields[1]),
            segments: resolve(fields[2]),
            reference: fields.get(3).map(|p| resolve(p)),
        });
    }
    Ok(entries)
}

/// A recording held in memory with its reference.
#[derive(Debug, Clone)]
pub struct BenchRecording {
    pub id: String,
    pub embeddings: EmbeddingSet,
    pub segments: Vec<Segment>,
    pub reference: Timeline,
}

impl BenchRecording {
    pub fn from_manifest(entry: &ManifestEntry, format: EmbeddingFormat, expected_dim: Option<usize>) -> Result<Self> {
        let reference_path = entry.reference.as_ref().ok_or_else(|| {
            Error::Config(format!("recording '{}' has no reference RTTM", entry.recording_id))
        })?;
        let (embeddings, segments) = load_embeddings(&entry.embeddings, &entry.segments, format, expected_dim)?;
        if segments.iter().any(|s| s.recording_id != entry.recording_id) {
            return Err(Error::InvalidSegment(format!(
                "segments file {} holds recordings other than '{}'",
                entry.segments.display(),
                entry.recording_id
            )));
        }
        Ok(BenchRecording {
            id: entry.recording_id.clone(),
            embeddings,
            segments,
            reference: read_rttm_file(reference_path)?.recording(&entry.recording_id),
        })
    }
}

/// Axes of the grid; each empty axis falls back to the base config value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchGrid {
    pub kernels: Vec<String>,
    pub neighbors: Vec<usize>,
    pub sparsify: Vec<bool>,
    pub laplacian: Vec<LaplacianKind>,
    pub weighting: Vec<Weighting>,
}

fn axis<T: Clone>(values: &[T], fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

fn kernels_label(sel: &KernelSelection) -> String {
    match sel {
        KernelSelection::Named(s) => s.clone(),
        KernelSelection::List(names) => names.join("+"),
    }
}

impl BenchGrid {
    /// Neighbor sweep with every other setting taken from the base config.
    pub fn neighbor_sweep(neighbors: &[usize]) -> Self {
        BenchGrid {
            neighbors: neighbors.to_vec(),
            ..Default::default()
        }
    }

    /// Grid points as `(name, config)`, kernels varying slowest.
    pub fn expand(&self, base: &RunConfig) -> Result<Vec<(String, RunConfig)>> {
        let kernels: Vec<KernelSelection> = if self.kernels.is_empty() {
            vec![base.kernels.clone()]
        } else {
            self.kernels.iter().cloned().map(KernelSelection::Named).collect()
        };
        let neighbors = axis(&self.neighbors, base.neighbors);
        let sparsify = axis(&self.sparsify, base.sparsify);
        let laplacian = axis(&self.laplacian, base.laplacian);
        let weighting = axis(&self.weighting, base.weighting);
        let mut out = Vec::new();
        for k in &kernels {
            for &c in &neighbors {
                for &s in &sparsify {
                    for &l in &laplacian {
                        for &w in &weighting {
                            let cfg = RunConfig {
                                kernels: k.clone(),
                                neighbors: c,
                                sparsify: s,
                                laplacian: l,
                                weighting: w,
                                ..base.clone()
                            };
                            cfg.pipeline()?;
                            let name = format!(
                                "{}/c{}/{}/{}/{}",
                                kernels_label(k),
                                c,
                                if s { "sparse" } else { "dense" },
                                match l {
                                    LaplacianKind::Unnormalized => "unnorm",
                                    LaplacianKind::NormalizedSymmetric => "norm",
                                },
                                match w {
                                    Weighting::Equal => "equal",
                                    Weighting::Entropy => "entropy",
                                }
                            );
                            out.push((name, cfg));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// DER table (configs x recordings) with rank and deviation summaries.
#[derive(Debug, Clone, Serialize)]
pub struct BenchOutcome {
    pub der: ResultTable,
    /// `None` when a failed cell leaves the ranking undefined.
    pub average_rank: Option<Vec<f64>>,
    pub deviation: Option<ResultTable>,
    /// `(config, recording, error)` for every failed cell.
    pub failures: Vec<(String, String, String)>,
}

fn run_cell(cfg: &RunConfig, rec: &BenchRecording) -> Result<f64> {
    let pipeline = cfg.pipeline()?;
    let out = diarize_recording(&rec.embeddings, &rec.segments, &pipeline)?;
    let der: DerConfig = cfg.der();
    Ok(score_recording(&rec.reference, &out.timeline, &rec.id, &der)?.der)
}

/// Runs every grid point on every recording. Failed cells are recorded and
/// the run continues.
pub fn run_grid(points: &[(String, RunConfig)], recordings: &[BenchRecording]) -> BenchOutcome {
    let mut der = ResultTable::new(
        points.iter().map(|(n, _)| n.clone()).collect(),
        recordings.iter().map(|r| r.id.clone()).collect(),
    );
    let cells: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|c| (0..recordings.len()).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(c, r)| run_cell(&points[c].1, &recordings[r]))
        .collect();
    let mut failures = Vec::new();
    for (&(c, r), result) in cells.iter().zip(results) {
        match result {
            Ok(v) => der.values[c][r] = Some(v),
            Err(e) => {
                log::error!("{} on {}: {e}", points[c].0, recordings[r].id);
                failures.push((points[c].0.clone(), recordings[r].id.clone(), e.to_string()));
            }
        }
    }
    BenchOutcome {
        average_rank: average_rank(&der).ok(),
        deviation: deviation_from_min(&der).ok(),
        der,
        failures,
    }
}

fn fmt_cell(v: Option<f64>, scale: f64) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{:.3}", v * scale))
}

impl ResultTable {
    /// Rows are configs, columns are splits; values times `scale`.
    pub fn to_tsv(&self, scale: f64) -> String {
        let mut out = String::from("config");
        for s in &self.splits {
            write!(out, "\t{s}").expect("string write");
        }
        out.push('\n');
        for (name, row) in self.configs.iter().zip(&self.values) {
            out.push_str(name);
            for &v in row {
                write!(out, "\t{}", fmt_cell(v, scale)).expect("string write");
            }
            out.push('\n');
        }
        out
    }

    /// Rows are splits, columns are configs; values times `scale`.
    pub fn to_tsv_transposed(&self, scale: f64) -> String {
        let mut out = String::from("split");
        for c in &self.configs {
            write!(out, "\t{c}").expect("string write");
        }
        out.push('\n');
        for (s, split) in self.splits.iter().enumerate() {
            out.push_str(split);
            for row in &self.values {
                write!(out, "\t{}", fmt_cell(row[s], scale)).expect("string write");
            }
            out.push('\n');
        }
        out
    }
}

impl BenchOutcome {
    pub fn ranks_tsv(&self) -> String {
        let mut out = String::from("config\taverage_rank\n");
        for (i, name) in self.der.configs.iter().enumerate() {
            let rank = self.average_rank.as_ref().map_or("NA".to_string(), |r| format!("{:.3}", r[i]));
            writeln!(out, "{name}\t{rank}").expect("string write");
        }
        out
    }

    /// Config with the lowest mean deviation from the per-split minimum.
    pub fn best_config(&self) -> Option<(&str, f64)> {
        let dev = self.deviation.as_ref()?;
        dev.values
            .iter()
            .enumerate()
            .map(|(i, row)| (i, row.iter().flatten().sum::<f64>() / row.len().max(1) as f64))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, mean)| (dev.configs[i].as_str(), mean))
    }

    /// Writes `der.tsv`, `ranks.tsv`, `deviation.tsv` (splits as rows) and
    /// `bench.json`; DER values in percent.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        put("der.tsv", self.der.to_tsv(100.0))?;
        put("ranks.tsv", self.ranks_tsv())?;
        if let Some(dev) = &self.deviation {
            put("deviation.tsv", dev.to_tsv_transposed(100.0))?;
        }
        put("bench.json", serde_json::to_string_pretty(self)? + "\n")
    }
}
