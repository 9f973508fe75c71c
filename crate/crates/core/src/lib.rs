//! Speaker diarization by spectral clustering over a sparse graph fused
//! from several kernel similarities of segment embeddings.
//!
//! The pipeline for one recording:
//!
//! 1. [`kernels`]: evaluate a bank of kernels (polynomial, arc-cosine,
//!    cosine, RBF) on the embeddings.
//! 2. [`graph`]: shift and scale each kernel matrix, drop self-loops, keep
//!    each vertex's `c` strongest neighbors, symmetrize, and average the
//!    per-kernel graphs into one unit-norm affinity.
//! 3. [`spectral`]: eigendecompose the graph Laplacian, pick the speaker
//!    count at the largest eigengap, and run k-means on the spectral
//!    embedding.
//! 4. [`pipeline`]: map segment labels to a speaker timeline and read or
//!    write RTTM.
//!
//! [`scoring`] computes diarization error rate, [`synth`] generates
//! synthetic corpora with ground truth, and [`bench`] runs ablation grids.
//! The `mksc` binary exposes all of it through [`cli`].
//!
//! ```
//! use mksc::pipeline::{diarize_recording, PipelineConfig};
//! use mksc::synth::{generate, SynthConfig};
//!
//! let corpus = generate(&SynthConfig { k: 3, seed: 1, ..Default::default() })?;
//! let out = diarize_recording(&corpus.embeddings, &corpus.segments, &PipelineConfig::default())?;
//! assert_eq!(out.summary.k_star, 3);
//! # Ok::<(), mksc::Error>(())
//! ```
//!
//! Runnable examples live in `examples/`: `kernel_bank`, `sparse_graph`,
//! `eigengap`, `diarize_synthetic`, `score_rttm`, `ablations`,
//! `neighbor_sweep` and `kernel_sweep`.

pub mod assignment;
pub mod bench;
pub mod cli;
pub mod config;
pub mod eigen;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod kernels;
pub mod kmeans;
pub mod pipeline;
pub mod scoring;
pub mod sparse;
pub mod spectral;
pub mod synth;

pub use embedding::EmbeddingSet;
pub use error::{Error, Result};
