//! RTTM speaker lines:
//! `SPEAKER <rec> 1 <start> <dur> <NA> <NA> <speaker> <NA> <NA>`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::timeline::{SpeakerTurn, Timeline};
use crate::error::{Error, Result};

pub fn format_rttm_line(turn: &SpeakerTurn) -> String {
    format!(
        "SPEAKER {} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
        turn.recording_id, turn.start, turn.duration, turn.speaker
    )
}

pub fn write_rttm<W: Write>(timeline: &Timeline, mut sink: W) -> std::io::Result<()> {
    for turn in timeline.turns() {
        writeln!(sink, "{}", format_rttm_line(turn))?;
    }
    sink.flush()
}

pub fn write_rttm_file(timeline: &Timeline, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rttm(timeline, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses RTTM text. Non-`SPEAKER` lines are skipped with a warning;
/// zero-length turns are dropped.
pub fn read_rttm<R: BufRead>(source: R, origin: &Path) -> Result<Timeline> {
    let mut turns = Vec::new();
    for (lineno, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(&kind) = fields.first() else { continue };
        if kind != "SPEAKER" {
            log::warn!("{}:{}: skipping '{kind}' line", origin.display(), lineno + 1);
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: origin.into(),
            line: lineno + 1,
            msg,
        };
        if fields.len() != 10 {
            return Err(parse_err(format!("expected 10 fields, found {}", fields.len())));
        }
        let number = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(format!("bad time '{s}'")))
        };
        let start = number(fields[3])?;
        let duration = number(fields[4])?;
        if duration < 0.0 {
            return Err(parse_err(format!("negative duration {duration}")));
        }
        if duration == 0.0 {
            continue;
        }
        turns.push(SpeakerTurn {
            recording_id: fields[1].to_string(),
            start,
            duration,
            speaker: fields[7].to_string(),
        });
    }
    Ok(Timeline::new(turns))
}

pub fn read_rttm_file(path: &Path) -> Result<Timeline> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_rttm(BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Timeline> {
        read_rttm(text.as_bytes(), Path::new("test.rttm"))
    }

    #[test]
    fn line_format() {
        let turn = SpeakerTurn {
            recording_id: "rec1".into(),
            start: 0.0,
            duration: 3.0,
            speaker: "spk0".into(),
        };
        assert_eq!(format_rttm_line(&turn), "SPEAKER rec1 1 0.000 3.000 <NA> <NA> spk0 <NA> <NA>");
    }

    #[test]
    fn empty_timeline_writes_nothing() {
        let mut out = Vec::new();
        write_rttm(&Timeline::default(), &mut out).unwrap();
        assert!(out.is_empty());
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn skips_unknown_and_rejects_malformed() {
        let t = parse(";; comment\nSPKR-INFO rec 1 <NA> <NA> <NA> unknown a <NA> <NA>\nSPEAKER rec 1 1.5 2.0 <NA> <NA> a <NA> <NA>\n").unwrap();
        assert_eq!(t.len(), 1);
        assert!(parse("SPEAKER rec 1 1.5 2.0 <NA> <NA> a <NA>\n").is_err());
        assert!(parse("SPEAKER rec 1 1.5 -2.0 <NA> <NA> a <NA> <NA>\n").is_err());
        assert!(parse("SPEAKER rec 1 x 2.0 <NA> <NA> a <NA> <NA>\n").is_err());
    }
}
