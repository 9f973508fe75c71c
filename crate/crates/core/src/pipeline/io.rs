//! Embedding and segment file formats.
//!
//! Binary embeddings: the ASCII magic `EMB1`, then `n` and `d` as
//! little-endian `u32`, then `n * d` little-endian `f32` values in row-major
//! order. CSV embeddings: one comma-separated row per line. Segments: one
//! `recording_id start end` line per embedding row, separated by whitespace
//! or commas.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::timeline::Segment;
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingFormat {
    /// Binary when the file starts with the magic, CSV otherwise.
    #[default]
    Auto,
    Binary,
    Csv,
}

pub fn read_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = match format {
        EmbeddingFormat::Auto if bytes.starts_with(EMB_MAGIC) => EmbeddingFormat::Binary,
        EmbeddingFormat::Auto => EmbeddingFormat::Csv,
        f => f,
    };
    match format {
        EmbeddingFormat::Binary => parse_binary(&bytes, path),
        _ => {
            let text = String::from_utf8(bytes).map_err(|_| Error::Format {
                path: path.into(),
                msg: "not UTF-8 text and missing EMB1 magic".into(),
            })?;
            parse_csv(&text, path)
        }
    }
}

fn parse_binary(bytes: &[u8], path: &Path) -> Result<EmbeddingSet> {
    let bad = |msg: String| Error::Format { path: path.into(), msg };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != EMB_MAGIC {
        return Err(bad("missing EMB1 magic".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (n, d) = (word(4), word(8));
    let expected = n
        .checked_mul(d)
        .and_then(|count| count.checked_mul(4))
        .and_then(|payload| payload.checked_add(HEADER_LEN))
        .ok_or_else(|| bad(format!("header counts overflow: n = {n}, d = {d}")))?;
    if bytes.len() != expected {
        return Err(bad(format!(
            "header declares {n} x {d} ({expected} bytes) but file has {} bytes",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    let matrix = Array2::from_shape_vec((n, d), values).map_err(|e| bad(e.to_string()))?;
    EmbeddingSet::new(matrix)
}

fn parse_csv(text: &str, path: &Path) -> Result<EmbeddingSet> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("not a number: '{}'", field.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("{} columns, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    EmbeddingSet::from_rows(&rows)
}

pub fn write_embeddings_binary(path: &Path, emb: &EmbeddingSet) -> Result<()> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * emb.len() * emb.dim());
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&(emb.len() as u32).to_le_bytes());
    out.extend_from_slice(&(emb.dim() as u32).to_le_bytes());
    for v in emb.vectors().iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_embeddings_csv(path: &Path, emb: &EmbeddingSet) -> Result<()> {
    let mut out = String::new();
    for row in emb.vectors().rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a segments file. Segments of one recording must be sorted by start.
pub fn read_segments(path: &Path) -> Result<Vec<Segment>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut segments: Vec<Segment> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.into(),
            line: lineno + 1,
            msg,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let [id, start, end] = fields[..] else {
            return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
        };
        let time = |s: &str| s.parse::<f64>().map_err(|_| parse_err(format!("bad time '{s}'")));
        let seg = Segment::new(id, time(start)?, time(end)?).map_err(|e| parse_err(e.to_string()))?;
        if let Some(prev) = segments.iter().rev().find(|p| p.recording_id == seg.recording_id) {
            if seg.start < prev.start {
                return Err(parse_err(format!(
                    "segments of '{}' are not sorted by start",
                    seg.recording_id
                )));
            }
        }
        segments.push(seg);
    }
    Ok(segments)
}

pub fn write_segments(path: &Path, segments: &[Segment]) -> Result<()> {
    let mut out = Vec::new();
    for s in segments {
        writeln!(out, "{} {:.3} {:.3}", s.recording_id, s.start, s.end).expect("in-memory write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads embeddings and their segments, checking 1:1 alignment and the
/// pinned dimension if any.
pub fn load_embeddings(
    embeddings: &Path,
    segments: &Path,
    format: EmbeddingFormat,
    expected_dim: Option<usize>,
) -> Result<(EmbeddingSet, Vec<Segment>)> {
    let emb = read_embeddings(embeddings, format)?;
    let segs = read_segments(segments)?;
    if emb.len() != segs.len() {
        return Err(Error::Alignment {
            embeddings: emb.len(),
            segments: segs.len(),
        });
    }
    if let Some(d) = expected_dim {
        if emb.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "embeddings have dimension {}, expected {d}",
                emb.dim()
            )));
        }
    }
    Ok((emb, segs))
}
