//! Synthetic speaker-embedding corpora with ground truth.
//!
//! Speaker centers are random unit vectors kept only if they are at least
//! `min_center_angle` apart from every earlier center. Each segment embedding
//! is the center of its speaker plus isotropic Gaussian noise, renormalized.
//! Segments are laid out on a fixed-hop grid and speakers take turns in
//! round-robin order, `turn_segments` consecutive segments per turn.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_matching;
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::pipeline::{labels_to_timeline, write_embeddings_binary, write_rttm_file, write_segments, Segment, Timeline};

/// Center draws attempted per speaker before giving up.
pub const CENTER_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub k: usize,
    pub d: usize,
    pub segments_per_speaker: usize,
    /// Consecutive segments per speaker turn.
    pub turn_segments: usize,
    pub noise_sigma: f64,
    /// Radians.
    pub min_center_angle: f64,
    pub seed: u64,
    /// Seconds.
    pub segment_length: f64,
    /// Seconds between segment starts.
    pub hop: f64,
    pub recording_id: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            k: 2,
            d: 192,
            segments_per_speaker: 40,
            turn_segments: 5,
            noise_sigma: 0.05,
            min_center_angle: std::f64::consts::FRAC_PI_3,
            seed: 0,
            segment_length: 3.0,
            hop: 1.5,
            recording_id: "synth".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if self.d == 0 || self.segments_per_speaker == 0 || self.turn_segments == 0 {
            return bad("d, segments_per_speaker and turn_segments must be >= 1".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.min_center_angle.is_finite() && (0.0..=std::f64::consts::PI).contains(&self.min_center_angle)) {
            return bad(format!("min_center_angle must lie in [0, pi], got {}", self.min_center_angle));
        }
        if !(self.segment_length >= 1e-3 && self.segment_length.is_finite() && self.hop >= 1e-3 && self.hop.is_finite()) {
            return bad("segment_length and hop must be at least 1 ms".into());
        }
        if self.recording_id.is_empty() || self.recording_id.contains(char::is_whitespace) {
            return bad(format!("invalid recording id {:?}", self.recording_id));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.k * self.segments_per_speaker
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub embeddings: EmbeddingSet,
    pub segments: Vec<Segment>,
    pub labels: Vec<usize>,
    pub reference: Timeline,
    pub centers: Array2<f64>,
}

/// Paths written by [`SynthCorpus::write`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFiles {
    pub embeddings: PathBuf,
    pub segments: PathBuf,
    pub reference: PathBuf,
}

impl SynthCorpus {
    /// Writes `<id>.emb`, `<id>.seg` and `<id>.ref.rttm` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<CorpusFiles> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let id = &self.segments[0].recording_id;
        let files = CorpusFiles {
            embeddings: dir.join(format!("{id}.emb")),
            segments: dir.join(format!("{id}.seg")),
            reference: dir.join(format!("{id}.ref.rttm")),
        };
        write_embeddings_binary(&files.embeddings, &self.embeddings)?;
        write_segments(&files.segments, &self.segments)?;
        write_rttm_file(&self.reference, &files.reference)?;
        Ok(files)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, sigma: f64) -> Array1<f64> {
    Array1::from_shape_fn(d, |_| {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    })
}

fn normalized(v: Array1<f64>) -> Option<Array1<f64>> {
    let norm = v.dot(&v).sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| v / norm)
}

fn sample_centers(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Array2<f64>> {
    let max_cos = cfg.min_center_angle.cos();
    let mut centers = Array2::zeros((cfg.k, cfg.d));
    for i in 0..cfg.k {
        let accepted = (0..CENTER_ATTEMPTS).find_map(|_| {
            let c = normalized(gaussian(rng, cfg.d, 1.0))?;
            // tiny slack so exactly orthogonal or antipodal layouts pass
            (0..i)
                .all(|j| centers.row(j).dot(&c) <= max_cos + 1e-12)
                .then_some(c)
        });
        match accepted {
            Some(c) => centers.row_mut(i).assign(&c),
            None => {
                return Err(Error::CenterSampling {
                    k: cfg.k,
                    d: cfg.d,
                    attempts: CENTER_ATTEMPTS,
                })
            }
        }
    }
    Ok(centers)
}

/// Speaker of every segment: whole turns in round-robin order over the
/// speakers that still have segments left.
fn turn_schedule(cfg: &SynthConfig) -> Vec<usize> {
    let mut remaining = vec![cfg.segments_per_speaker; cfg.k];
    let mut labels = Vec::with_capacity(cfg.n());
    let mut speaker = 0;
    while labels.len() < cfg.n() {
        if remaining[speaker] > 0 {
            let take = remaining[speaker].min(cfg.turn_segments);
            labels.extend(std::iter::repeat_n(speaker, take));
            remaining[speaker] -= take;
        }
        speaker = (speaker + 1) % cfg.k;
    }
    labels
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let centers = sample_centers(cfg, &mut rng)?;
    let labels = turn_schedule(cfg);

    let mut vectors = Array2::zeros((cfg.n(), cfg.d));
    for (i, &spk) in labels.iter().enumerate() {
        let v = loop {
            let noisy = &centers.row(spk) + &gaussian(&mut rng, cfg.d, cfg.noise_sigma);
            if let Some(v) = normalized(noisy) {
                break v;
            }
        };
        vectors.row_mut(i).assign(&v);
    }

    // whole milliseconds keep segment times exact in text formats
    let hop_ms = (cfg.hop * 1000.0).round() as i64;
    let len_ms = (cfg.segment_length * 1000.0).round() as i64;
    let segments = (0..cfg.n() as i64)
        .map(|i| {
            let start = i * hop_ms;
            Segment::new(cfg.recording_id.clone(), start as f64 / 1000.0, (start + len_ms) as f64 / 1000.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = labels_to_timeline(&segments, &labels)?;
    Ok(SynthCorpus {
        embeddings: EmbeddingSet::new(vectors)?,
        segments,
        labels,
        reference,
        centers,
    })
}

/// Fraction of items on which `pred` agrees with `truth` under the best
/// one-to-one renaming of predicted labels.
pub fn permutation_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted labels vs {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Ok(1.0);
    }
    let index = |labels: &[usize]| -> BTreeMap<usize, usize> {
        let mut map = BTreeMap::new();
        for &l in labels {
            let next = map.len();
            map.entry(l).or_insert(next);
        }
        map
    };
    let (pi, ti) = (index(pred), index(truth));
    let mut counts = vec![vec![0i64; ti.len()]; pi.len()];
    for (p, t) in pred.iter().zip(truth) {
        counts[pi[p]][ti[t]] += 1;
    }
    let matched: i64 = max_weight_matching(&counts)
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| counts[r][c]))
        .sum();
    Ok(matched as f64 / pred.len() as f64)
}
