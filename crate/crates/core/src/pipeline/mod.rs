//! End-to-end diarization of precomputed segment embeddings.
//!
//! `load -> build_affinity -> cluster -> labels_to_timeline`, one recording
//! at a time.

mod io;
mod rttm;
mod timeline;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use io::{
    load_embeddings, read_embeddings, read_segments, write_embeddings_binary,
    write_embeddings_csv, write_segments, EmbeddingFormat, EMB_MAGIC,
};
pub use rttm::{format_rttm_line, read_rttm, read_rttm_file, write_rttm, write_rttm_file};
pub use timeline::{labels_to_timeline, Segment, SpeakerTurn, Timeline, MERGE_EPS};

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::graph::{build_affinity, GraphConfig};
use crate::kernels::{self, KernelId};
use crate::sparse::SparseMatrix;
use crate::spectral::{cluster, cluster_graph, ClusterResult, SpectralConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub kernels: Vec<KernelId>,
    pub graph: GraphConfig,
    pub spectral: SpectralConfig,
    /// Required embedding dimension, if pinned.
    pub expected_dim: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kernels: kernels::default_bank(),
            graph: GraphConfig::default(),
            spectral: SpectralConfig::default(),
            expected_dim: None,
        }
    }
}

/// Clustering output for one recording plus the statistics written to the
/// summary document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingSummary {
    pub recording_id: String,
    pub n: usize,
    pub k_star: usize,
    pub eigenvalues: Vec<f64>,
    pub eigengaps: Vec<f64>,
    pub nnz: usize,
    pub kernels: Vec<String>,
    pub neighbors: usize,
    pub sparsify: bool,
}

#[derive(Debug, Clone)]
pub struct RecordingDiarization {
    pub summary: RecordingSummary,
    pub labels: Vec<usize>,
    pub timeline: Timeline,
    pub wall_time_secs: f64,
}

/// Labels for one recording's embeddings.
///
/// A graph left without edges (always the case for a single segment) is
/// clustered as an edgeless graph, which yields one speaker unless an oracle
/// count is given.
pub fn cluster_embeddings(
    emb: &EmbeddingSet,
    cfg: &PipelineConfig,
) -> Result<(ClusterResult, usize)> {
    if let Some(k) = cfg.spectral.k_oracle {
        if k > emb.len() {
            return Err(Error::InvalidClusterCount { k, n: emb.len() });
        }
    }
    match build_affinity(emb, &cfg.kernels, &cfg.graph) {
        Ok(affinity) => Ok((cluster(&affinity, &cfg.spectral)?, affinity.nnz())),
        Err(Error::DisconnectedGraph) => {
            if emb.len() > 1 {
                log::warn!("affinity graph has no edges; clustering {} isolated segments", emb.len());
            }
            let empty = SparseMatrix::zeros(emb.len());
            Ok((cluster_graph(&empty, &cfg.spectral)?, 0))
        }
        Err(e) => Err(e),
    }
}

/// Diarizes one recording held in memory. All segments must share one
/// recording id.
pub fn diarize_recording(
    emb: &EmbeddingSet,
    segments: &[Segment],
    cfg: &PipelineConfig,
) -> Result<RecordingDiarization> {
    let started = Instant::now();
    if emb.len() != segments.len() {
        return Err(Error::Alignment {
            embeddings: emb.len(),
            segments: segments.len(),
        });
    }
    let recording_id = segments[0].recording_id.clone();
    if segments.iter().any(|s| s.recording_id != recording_id) {
        return Err(Error::InvalidSegment("segments span several recordings".into()));
    }
    let (result, nnz) = cluster_embeddings(emb, cfg)?;
    let timeline = labels_to_timeline(segments, &result.labels)?;
    let summary = RecordingSummary {
        recording_id,
        n: emb.len(),
        k_star: result.k_star,
        eigenvalues: result.eigenvalues,
        eigengaps: result.eigengaps,
        nnz,
        kernels: cfg.kernels.iter().map(ToString::to_string).collect(),
        neighbors: cfg.graph.neighbors,
        sparsify: cfg.graph.sparsify,
    };
    Ok(RecordingDiarization {
        summary,
        labels: result.labels,
        timeline,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Splits segments (and their embedding rows) by recording, keeping first
/// appearance order.
pub fn split_recordings(
    emb: &EmbeddingSet,
    segments: &[Segment],
) -> Result<Vec<(EmbeddingSet, Vec<Segment>)>> {
    let mut order: Vec<&str> = Vec::new();
    for s in segments {
        if !order.contains(&s.recording_id.as_str()) {
            order.push(&s.recording_id);
        }
    }
    order
        .into_iter()
        .map(|id| {
            let rows: Vec<usize> = (0..segments.len())
                .filter(|&i| segments[i].recording_id == id)
                .collect();
            let segs = rows.iter().map(|&i| segments[i].clone()).collect();
            Ok((emb.select(&rows)?, segs))
        })
        .collect()
}

/// Diarizes every recording in an embeddings/segments file pair.
pub fn diarize_files(
    embeddings_path: &Path,
    segments_path: &Path,
    format: EmbeddingFormat,
    cfg: &PipelineConfig,
) -> Result<Vec<RecordingDiarization>> {
    let (emb, segments) = load_embeddings(embeddings_path, segments_path, format, cfg.expected_dim)?;
    split_recordings(&emb, &segments)?
        .iter()
        .map(|(e, s)| diarize_recording(e, s, cfg))
        .collect()
}

/// Diarizes a file pair and returns the combined speaker timeline.
pub fn diarize(
    embeddings_path: &Path,
    segments_path: &Path,
    cfg: &PipelineConfig,
) -> Result<Timeline> {
    let results = diarize_files(embeddings_path, segments_path, EmbeddingFormat::Auto, cfg)?;
    Ok(Timeline::new(
        results.into_iter().flat_map(|r| r.timeline.into_turns()).collect(),
    ))
}
