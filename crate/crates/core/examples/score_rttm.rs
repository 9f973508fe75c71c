//! Scores a hypothesis RTTM against a reference RTTM.
//!
//! cargo run --example score_rttm -- ref.rttm hyp.rttm [collar]
//!
//! Without arguments a small built-in pair is scored.

use std::path::Path;

use mksc::pipeline::{read_rttm, read_rttm_file};
use mksc::scoring::{score_report, DerConfig};

const REFERENCE: &str = "\
SPEAKER demo 1 0.000 6.000 <NA> <NA> alice <NA> <NA>
SPEAKER demo 1 4.000 6.000 <NA> <NA> bob <NA> <NA>
";
const HYPOTHESIS: &str = "\
SPEAKER demo 1 0.000 5.000 <NA> <NA> spk0 <NA> <NA>
SPEAKER demo 1 5.000 5.000 <NA> <NA> spk1 <NA> <NA>
";

fn main() -> mksc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (reference, hypothesis) = if args.len() >= 2 {
        (read_rttm_file(Path::new(&args[0]))?, read_rttm_file(Path::new(&args[1]))?)
    } else {
        let origin = Path::new("<inline>");
        (read_rttm(REFERENCE.as_bytes(), origin)?, read_rttm(HYPOTHESIS.as_bytes(), origin)?)
    };
    let collar = args.get(2).map_or(0.25, |s| s.parse().expect("collar"));
    for include_overlap in [true, false] {
        let report = score_report(&reference, &hypothesis, &DerConfig { collar, include_overlap })?;
        println!("collar {collar}s, overlap {}:", if include_overlap { "scored" } else { "excluded" });
        print!("{}", report.to_tsv());
    }
    Ok(())
}
