//! Diarization error rate and ranking utilities for result tables.

mod der;
mod ranks;

pub use der::{score_der, score_recording, score_report, DerBreakdown, DerConfig, DerReport, TICKS_PER_SECOND};
pub use ranks::{average_rank, deviation_from_min, rank_within, ResultTable};
