use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One embedding's time span within a recording, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub recording_id: String,
    pub start: f64,
    pub end: f64,
}

impl Segment {
    pub fn new(recording_id: impl Into<String>, start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start >= 0.0 && end > start) {
            return Err(Error::InvalidSegment(format!("[{start}, {end})")));
        }
        Ok(Segment {
            recording_id: recording_id.into(),
            start,
            end,
        })
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// A speaker-attributed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerTurn {
    pub recording_id: String,
    pub start: f64,
    pub duration: f64,
    pub speaker: String,
}

impl SpeakerTurn {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Intervals closer than this (seconds) count as touching when merging.
pub const MERGE_EPS: f64 = 1e-6;

/// Speaker turns sorted by recording, start and speaker, with touching or
/// overlapping turns of the same speaker merged. Different speakers may
/// overlap.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    turns: Vec<SpeakerTurn>,
}

impl Timeline {
    pub fn new(mut turns: Vec<SpeakerTurn>) -> Self {
        turns.retain(|t| t.duration > 0.0);
        turns.sort_by(|a, b| {
            (&a.recording_id, &a.speaker)
                .cmp(&(&b.recording_id, &b.speaker))
                .then(a.start.total_cmp(&b.start))
        });
        let mut merged: Vec<SpeakerTurn> = Vec::with_capacity(turns.len());
        for t in turns {
            if let Some(last) = merged.last_mut() {
                if last.recording_id == t.recording_id
                    && last.speaker == t.speaker
                    && t.start <= last.end() + MERGE_EPS
                {
                    let end = last.end().max(t.end());
                    last.duration = end - last.start;
                    continue;
                }
            }
            merged.push(t);
        }
        merged.sort_by(|a, b| {
            a.recording_id
                .cmp(&b.recording_id)
                .then(a.start.total_cmp(&b.start))
                .then(a.speaker.cmp(&b.speaker))
        });
        Timeline { turns: merged }
    }

    pub fn turns(&self) -> &[SpeakerTurn] {
        &self.turns
    }

    pub fn into_turns(self) -> Vec<SpeakerTurn> {
        self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn recordings(&self) -> BTreeSet<&str> {
        self.turns.iter().map(|t| t.recording_id.as_str()).collect()
    }

    pub fn speakers(&self) -> BTreeSet<&str> {
        self.turns.iter().map(|t| t.speaker.as_str()).collect()
    }

    pub fn for_recording<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a SpeakerTurn> + 'a {
        self.turns.iter().filter(move |t| t.recording_id == id)
    }

    /// Turns of one recording as a new timeline.
    pub fn recording(&self, id: &str) -> Timeline {
        Timeline {
            turns: self.for_recording(id).cloned().collect(),
        }
    }

    /// Applies `rename` to every speaker label.
    pub fn relabel(&self, rename: impl Fn(&str) -> String) -> Timeline {
        Timeline::new(
            self.turns
                .iter()
                .map(|t| SpeakerTurn {
                    speaker: rename(&t.speaker),
                    ..t.clone()
                })
                .collect(),
        )
    }
}

/// Converts per-segment labels to a speaker timeline.
///
/// Every instant covered by at least one segment goes to the covering segment
/// whose center is nearest (the earlier segment on ties). Speakers are named
/// `spk{label}`.
pub fn labels_to_timeline(segments: &[Segment], labels: &[usize]) -> Result<Timeline> {
    if segments.len() != labels.len() {
        return Err(Error::Alignment {
            embeddings: labels.len(),
            segments: segments.len(),
        });
    }
    let mut recordings: Vec<&str> = Vec::new();
    for s in segments {
        if !recordings.contains(&s.recording_id.as_str()) {
            recordings.push(&s.recording_id);
        }
    }
    let mut turns = Vec::new();
    for id in recordings {
        let idx: Vec<usize> = (0..segments.len())
            .filter(|&i| segments[i].recording_id == id)
            .collect();
        turns.extend(recording_pieces(segments, labels, &idx));
    }
    Ok(Timeline::new(turns))
}

fn recording_pieces(segments: &[Segment], labels: &[usize], idx: &[usize]) -> Vec<SpeakerTurn> {
    let mut by_start = idx.to_vec();
    by_start.sort_by(|&a, &b| segments[a].start.total_cmp(&segments[b].start).then(a.cmp(&b)));
    let mut points: Vec<f64> = idx
        .iter()
        .flat_map(|&i| [segments[i].start, segments[i].end])
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let recording_id = &segments[idx[0]].recording_id;
    let mut pieces: Vec<(f64, f64, usize)> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut next = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        while next < by_start.len() && segments[by_start[next]].start <= a {
            active.push(by_start[next]);
            next += 1;
        }
        active.retain(|&i| segments[i].end > a);
        if active.is_empty() {
            continue;
        }
        // nearest-center cells along the line, earlier segment first on ties
        let mut cells: Vec<(f64, usize)> = active.iter().map(|&i| (segments[i].center(), i)).collect();
        cells.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        cells.dedup_by(|later, earlier| later.0 == earlier.0);
        for (m, &(center, seg)) in cells.iter().enumerate() {
            let lo = match m {
                0 => a,
                _ => a.max(0.5 * (cells[m - 1].0 + center)),
            };
            let hi = match cells.get(m + 1) {
                Some(&(right, _)) => b.min(0.5 * (center + right)),
                None => b,
            };
            if hi <= lo {
                continue;
            }
            match pieces.last_mut() {
                Some(last) if last.2 == labels[seg] && (lo - last.1).abs() <= MERGE_EPS => last.1 = hi,
                _ => pieces.push((lo, hi, labels[seg])),
            }
        }
    }
    pieces
        .into_iter()
        .map(|(start, end, label)| SpeakerTurn {
            recording_id: recording_id.clone(),
            start,
            duration: end - start,
            speaker: format!("spk{label}"),
        })
        .collect()
}
