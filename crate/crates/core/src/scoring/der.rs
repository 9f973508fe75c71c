//! Diarization error rate.
//!
//! Times are converted to integer ticks of 0.1 ms so interval arithmetic is
//! exact. Scoring per recording:
//!
//! 1. The evaluation region is all time minus a window of total width
//!    `collar` centred on every reference boundary, and minus overlapped
//!    reference speech when overlap is excluded.
//! 2. Reference and hypothesis speakers are mapped one-to-one to maximize
//!    their co-occurring time inside the region (Hungarian assignment).
//! 3. Over each elementary interval with `R` reference and `H` hypothesis
//!    speakers and `C` correctly mapped pairs: missed `max(R - H, 0)`, false
//!    alarm `max(H - R, 0)`, confusion `min(R, H) - C`, all weighted by the
//!    interval length.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_matching;
use crate::error::{Error, Result};
use crate::pipeline::Timeline;

pub const TICKS_PER_SECOND: f64 = 10_000.0;

fn to_ticks(seconds: f64) -> i64 {
    (seconds * TICKS_PER_SECOND).round() as i64
}

fn to_seconds(ticks: i64) -> f64 {
    ticks as f64 / TICKS_PER_SECOND
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerConfig {
    /// Total width in seconds of the window around each reference boundary.
    pub collar: f64,
    pub include_overlap: bool,
}

impl Default for DerConfig {
    fn default() -> Self {
        DerConfig {
            collar: 0.25,
            include_overlap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DerBreakdown {
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub total_ref: f64,
    pub der: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct TickTotals {
    missed: i64,
    false_alarm: i64,
    confusion: i64,
    total_ref: i64,
}

impl TickTotals {
    fn add(&mut self, other: &TickTotals) {
        self.missed += other.missed;
        self.false_alarm += other.false_alarm;
        self.confusion += other.confusion;
        self.total_ref += other.total_ref;
    }

    fn breakdown(&self, recording: Option<&str>) -> Result<DerBreakdown> {
        if self.total_ref == 0 {
            return Err(Error::EmptyReference {
                recording: recording.map(str::to_string),
            });
        }
        let errors = self.missed + self.false_alarm + self.confusion;
        Ok(DerBreakdown {
            missed: to_seconds(self.missed),
            false_alarm: to_seconds(self.false_alarm),
            confusion: to_seconds(self.confusion),
            total_ref: to_seconds(self.total_ref),
            der: errors as f64 / self.total_ref as f64,
        })
    }
}

type Spans = Vec<(i64, i64)>;

/// Per-speaker union of intervals in ticks.
fn speaker_spans<'a>(timeline: impl Iterator<Item = &'a crate::pipeline::SpeakerTurn>) -> BTreeMap<String, Spans> {
    let mut map: BTreeMap<String, Spans> = BTreeMap::new();
    for t in timeline {
        let (s, e) = (to_ticks(t.start), to_ticks(t.end()));
        if e > s {
            map.entry(t.speaker.clone()).or_default().push((s, e));
        }
    }
    for spans in map.values_mut() {
        *spans = union(std::mem::take(spans));
    }
    map
}

fn union(mut spans: Spans) -> Spans {
    spans.sort_unstable();
    let mut out: Spans = Vec::with_capacity(spans.len());
    for (s, e) in spans {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

fn covers(spans: &Spans, a: i64) -> bool {
    let idx = spans.partition_point(|&(s, _)| s <= a);
    idx > 0 && spans[idx - 1].1 > a
}

struct Elementary {
    duration: i64,
    refs: Vec<usize>,
    hyps: Vec<usize>,
}

fn elementary_intervals(refs: &[Spans], hyps: &[Spans], excluded: &Spans, include_overlap: bool) -> Vec<Elementary> {
    let mut points: Vec<i64> = refs
        .iter()
        .chain(hyps)
        .chain(std::iter::once(excluded))
        .flat_map(|spans| spans.iter().flat_map(|&(s, e)| [s, e]))
        .collect();
    points.sort_unstable();
    points.dedup();
    let mut out = Vec::new();
    for w in points.windows(2) {
        let a = w[0];
        if covers(excluded, a) {
            continue;
        }
        let active = |set: &[Spans]| -> Vec<usize> {
            set.iter().enumerate().filter(|(_, s)| covers(s, a)).map(|(i, _)| i).collect()
        };
        let refs_here = active(refs);
        if !include_overlap && refs_here.len() >= 2 {
            continue;
        }
        let hyps_here = active(hyps);
        if refs_here.is_empty() && hyps_here.is_empty() {
            continue;
        }
        out.push(Elementary {
            duration: w[1] - a,
            refs: refs_here,
            hyps: hyps_here,
        });
    }
    out
}

fn score_ticks(reference: &Timeline, hypothesis: &Timeline, recording: &str, cfg: &DerConfig) -> TickTotals {
    let refs: Vec<Spans> = speaker_spans(reference.for_recording(recording)).into_values().collect();
    let hyps: Vec<Spans> = speaker_spans(hypothesis.for_recording(recording)).into_values().collect();
    let half = to_ticks(cfg.collar / 2.0);
    let excluded = if half > 0 {
        union(
            refs.iter()
                .flatten()
                .flat_map(|&(s, e)| [(s - half, s + half), (e - half, e + half)])
                .collect(),
        )
    } else {
        Vec::new()
    };
    let pieces = elementary_intervals(&refs, &hyps, &excluded, cfg.include_overlap);

    let mut overlap = vec![vec![0i64; hyps.len()]; refs.len()];
    for p in &pieces {
        for &r in &p.refs {
            for &h in &p.hyps {
                overlap[r][h] += p.duration;
            }
        }
    }
    let mapping = max_weight_matching(&overlap);

    let mut totals = TickTotals::default();
    for p in &pieces {
        let (nr, nh) = (p.refs.len() as i64, p.hyps.len() as i64);
        let correct = p
            .refs
            .iter()
            .filter(|&&r| mapping[r].is_some_and(|h| p.hyps.contains(&h)))
            .count() as i64;
        totals.total_ref += p.duration * nr;
        totals.missed += p.duration * (nr - nh).max(0);
        totals.false_alarm += p.duration * (nh - nr).max(0);
        totals.confusion += p.duration * (nr.min(nh) - correct);
    }
    totals
}

/// DER of a single recording.
pub fn score_recording(reference: &Timeline, hypothesis: &Timeline, recording: &str, cfg: &DerConfig) -> Result<DerBreakdown> {
    score_ticks(reference, hypothesis, recording, cfg).breakdown(Some(recording))
}

/// Per-recording and aggregate scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerReport {
    pub config: DerConfig,
    /// Sorted by recording id.
    pub recordings: Vec<(String, DerBreakdown)>,
    pub aggregate: DerBreakdown,
    /// Reference recordings absent from the hypothesis (scored as missed).
    pub missing_hypothesis: Vec<String>,
    /// Hypothesis recordings without a reference (not scored).
    pub unmatched_hypothesis: Vec<String>,
}

impl DerReport {
    /// Tab-separated table with one row per recording and a final `ALL` row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("recording\tmissed\tfalse_alarm\tconfusion\ttotal_ref\tder_percent\n");
        let rows = self.recordings.iter().map(|(id, b)| (id.as_str(), b));
        for (id, b) in rows.chain(std::iter::once(("ALL", &self.aggregate))) {
            writeln!(
                out,
                "{id}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
                b.missed,
                b.false_alarm,
                b.confusion,
                b.total_ref,
                100.0 * b.der
            )
            .expect("string write");
        }
        out
    }
}

/// Scores every reference recording. Recordings missing from the hypothesis
/// count as entirely missed.
pub fn score_report(reference: &Timeline, hypothesis: &Timeline, cfg: &DerConfig) -> Result<DerReport> {
    if !(cfg.collar.is_finite() && cfg.collar >= 0.0) {
        return Err(Error::Config(format!("collar must be >= 0, got {}", cfg.collar)));
    }
    let hyp_ids = hypothesis.recordings();
    let ref_ids = reference.recordings();
    let mut aggregate = TickTotals::default();
    let mut recordings = Vec::new();
    for &id in &ref_ids {
        let totals = score_ticks(reference, hypothesis, id, cfg);
        recordings.push((id.to_string(), totals.breakdown(Some(id))?));
        aggregate.add(&totals);
    }
    Ok(DerReport {
        config: *cfg,
        recordings,
        aggregate: aggregate.breakdown(None)?,
        missing_hypothesis: ref_ids.difference(&hyp_ids).map(|s| s.to_string()).collect(),
        unmatched_hypothesis: hyp_ids.difference(&ref_ids).map(|s| s.to_string()).collect(),
    })
}

/// Aggregate DER over all reference recordings.
pub fn score_der(reference: &Timeline, hypothesis: &Timeline, cfg: &DerConfig) -> Result<DerBreakdown> {
    Ok(score_report(reference, hypothesis, cfg)?.aggregate)
}
