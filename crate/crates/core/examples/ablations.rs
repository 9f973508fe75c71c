//! Sparsification, Laplacian and weighting ablations on noisy synthetic
//! recordings, with DER per recording and the average rank of each setting.
//!
//! cargo run --release --example ablations -- [noise] [recordings]

use mksc::bench::{run_grid, BenchGrid, BenchRecording};
use mksc::config::RunConfig;
use mksc::graph::Weighting;
use mksc::spectral::LaplacianKind;
use mksc::synth::{generate, SynthConfig};

fn main() -> mksc::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise = args.next().map_or(0.15, |s| s.parse().expect("noise"));
    let count = args.next().map_or(4, |s| s.parse().expect("recordings"));
    let recordings = (0..count)
        .map(|i| {
            let c = generate(&SynthConfig {
                k: 2 + i % 4,
                noise_sigma: noise,
                seed: 100 + i as u64,
                recording_id: format!("rec{i}"),
                ..Default::default()
            })?;
            Ok(BenchRecording { id: format!("rec{i}"), embeddings: c.embeddings, segments: c.segments, reference: c.reference })
        })
        .collect::<mksc::Result<Vec<_>>>()?;

    let grid = BenchGrid {
        sparsify: vec![true, false],
        laplacian: vec![LaplacianKind::Unnormalized, LaplacianKind::NormalizedSymmetric],
        weighting: vec![Weighting::Equal, Weighting::Entropy],
        ..Default::default()
    };
    let outcome = run_grid(&grid.expand(&RunConfig::default())?, &recordings);
    println!("DER (%)");
    print!("{}", outcome.der.to_tsv(100.0));
    println!("\naverage rank");
    print!("{}", outcome.ranks_tsv());
    Ok(())
}
