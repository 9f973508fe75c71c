//! Writes a synthetic recording to disk, diarizes it from the files and
//! scores the result.
//!
//! cargo run --example diarize_synthetic -- [speakers] [noise]

use mksc::pipeline::{diarize, write_rttm, PipelineConfig};
use mksc::scoring::{score_der, DerConfig};
use mksc::synth::{generate, SynthConfig};

fn main() -> mksc::Result<()> {
    let mut args = std::env::args().skip(1);
    let k = args.next().map_or(3, |s| s.parse().expect("speakers"));
    let noise = args.next().map_or(0.05, |s| s.parse().expect("noise"));
    let dir = std::env::temp_dir().join("mksc-diarize-synthetic");
    let corpus = generate(&SynthConfig { k, noise_sigma: noise, seed: 5, recording_id: "meeting".into(), ..Default::default() })?;
    let files = corpus.write(&dir)?;

    let hyp = diarize(&files.embeddings, &files.segments, &PipelineConfig::default())?;
    write_rttm(&hyp, std::io::stdout().lock()).expect("stdout");
    let der = score_der(&corpus.reference, &hyp, &DerConfig::default())?;
    println!(
        "speakers {} -> {}, DER {:.2}% (missed {:.2}s, false alarm {:.2}s, confusion {:.2}s)",
        k,
        hyp.speakers().len(),
        100.0 * der.der,
        der.missed,
        der.false_alarm,
        der.confusion
    );
    Ok(())
}
