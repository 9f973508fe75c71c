//! Run configuration shared by the command-line tools.
//!
//! Values resolve as command-line flags over a JSON config file over
//! built-in defaults. The file is the one given with `--config`, else the
//! path in `MKSC_CONFIG`, else none. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphConfig, Symmetrization, Weighting};
use crate::kernels::{self, KernelId};
use crate::pipeline::{EmbeddingFormat, PipelineConfig};
use crate::scoring::DerConfig;
use crate::spectral::{LaplacianKind, SpectralConfig};

pub const CONFIG_ENV: &str = "MKSC_CONFIG";

/// Kernel bank as a selection string (`"paper5"`, `"poly1-4+arccos1"`, ...)
/// or a list of kernel names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSelection {
    Named(String),
    List(Vec<String>),
}

impl Default for KernelSelection {
    fn default() -> Self {
        KernelSelection::Named("paper5".into())
    }
}

impl KernelSelection {
    pub fn resolve(&self) -> Result<Vec<KernelId>> {
        match self {
            KernelSelection::Named(s) => kernels::parse_bank(s),
            KernelSelection::List(names) => {
                if names.is_empty() {
                    return Err(Error::EmptyBank);
                }
                kernels::parse_bank(&names.join("+"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernels: KernelSelection,
    pub neighbors: usize,
    pub sparsify: bool,
    pub weighting: Weighting,
    pub symmetrization: Symmetrization,
    pub laplacian: LaplacianKind,
    pub k_max: usize,
    pub k_oracle: Option<usize>,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub kmeans_tol: f64,
    pub seed: u64,
    pub expected_dim: Option<usize>,
    pub embedding_format: EmbeddingFormat,
    /// Total collar width in seconds.
    pub collar: f64,
    pub ignore_overlap: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let graph = GraphConfig::default();
        let spectral = SpectralConfig::default();
        let der = DerConfig::default();
        RunConfig {
            kernels: KernelSelection::default(),
            neighbors: graph.neighbors,
            sparsify: graph.sparsify,
            weighting: graph.weighting,
            symmetrization: graph.symmetrization,
            laplacian: spectral.laplacian,
            k_max: spectral.k_max,
            k_oracle: spectral.k_oracle,
            kmeans_restarts: spectral.kmeans_restarts,
            kmeans_max_iters: spectral.kmeans_max_iters,
            kmeans_tol: spectral.kmeans_tol,
            seed: spectral.seed,
            expected_dim: None,
            embedding_format: EmbeddingFormat::Auto,
            collar: der.collar,
            ignore_overlap: !der.include_overlap,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    /// Defaults, overlaid by `explicit` or else the file named in
    /// `MKSC_CONFIG`.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(from_env) {
            Some(path) => Self::from_json_file(&path),
            None => Ok(Self::default()),
        }
    }

    pub fn graph(&self) -> GraphConfig {
        GraphConfig {
            neighbors: self.neighbors,
            sparsify: self.sparsify,
            weighting: self.weighting,
            symmetrization: self.symmetrization,
        }
    }

    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            k_max: self.k_max,
            k_oracle: self.k_oracle,
            laplacian: self.laplacian,
            kmeans_restarts: self.kmeans_restarts,
            kmeans_max_iters: self.kmeans_max_iters,
            kmeans_tol: self.kmeans_tol,
            seed: self.seed,
        }
    }

    pub fn der(&self) -> DerConfig {
        DerConfig {
            collar: self.collar,
            include_overlap: !self.ignore_overlap,
        }
    }

    /// Validated pipeline settings.
    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let kernels = self.kernels.resolve()?;
        if self.neighbors == 0 {
            return Err(Error::InvalidNeighbors);
        }
        let spectral = self.spectral();
        spectral.validate()?;
        if !(self.collar.is_finite() && self.collar >= 0.0) {
            return Err(Error::Config(format!("collar must be >= 0, got {}", self.collar)));
        }
        if self.expected_dim == Some(0) {
            return Err(Error::Config("expected_dim must be >= 1".into()));
        }
        Ok(PipelineConfig {
            kernels,
            graph: self.graph(),
            spectral,
            expected_dim: self.expected_dim,
        })
    }
}
