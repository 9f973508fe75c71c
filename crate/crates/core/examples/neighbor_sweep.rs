//! Sweeps the neighbor count and prints each recording's deviation from its
//! best DER, one column per neighbor count.
//!
//! cargo run --release --example neighbor_sweep -- [noise]

use mksc::bench::{run_grid, BenchGrid, BenchRecording, SWEEP_NEIGHBORS};
use mksc::config::RunConfig;
use mksc::synth::{generate, SynthConfig};

fn main() -> mksc::Result<()> {
    let noise = std::env::args().nth(1).map_or(0.2, |s| s.parse().expect("noise"));
    let recordings = (0..3)
        .map(|i| {
            let id = format!("rec{i}");
            let c = generate(&SynthConfig { k: 3 + i, noise_sigma: noise, seed: 40 + i as u64, recording_id: id.clone(), ..Default::default() })?;
            Ok(BenchRecording { id, embeddings: c.embeddings, segments: c.segments, reference: c.reference })
        })
        .collect::<mksc::Result<Vec<_>>>()?;

    let points = BenchGrid::neighbor_sweep(&SWEEP_NEIGHBORS).expand(&RunConfig::default())?;
    let outcome = run_grid(&points, &recordings);
    if let Some(dev) = &outcome.deviation {
        println!("deviation from the minimum DER (%)");
        print!("{}", dev.to_tsv_transposed(100.0));
    }
    if let Some((name, mean)) = outcome.best_config() {
        println!("lowest mean deviation: {name} ({:.3})", 100.0 * mean);
    }
    Ok(())
}
