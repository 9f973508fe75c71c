//! Compares kernel banks by DER and average rank across synthetic
//! recordings.
//!
//! On unit-norm embeddings every kernel orders neighbors like the cosine, so
//! the embeddings here are rescaled to random norms before clustering.
//!
//! cargo run --release --example kernel_sweep -- [noise]

use mksc::bench::{run_grid, BenchGrid, BenchRecording};
use mksc::config::RunConfig;
use mksc::synth::{generate, SynthConfig};
use mksc::EmbeddingSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BANKS: [&str; 8] = ["cosine", "exp1-3", "poly1-4", "arccos0-1", "paper5", "poly1-4+arccos0-1", "cosine+poly1-4", "all"];

fn main() -> mksc::Result<()> {
    let noise = std::env::args().nth(1).map_or(0.15, |s| s.parse().expect("noise"));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let recordings = (0..4)
        .map(|i| {
            let id = format!("rec{i}");
            let c = generate(&SynthConfig { k: 2 + 2 * i, noise_sigma: noise, seed: 70 + i as u64, recording_id: id.clone(), ..Default::default() })?;
            let mut v = c.embeddings.into_inner();
            for mut row in v.rows_mut() {
                row *= rng.random_range(0.5..2.0);
            }
            Ok(BenchRecording { id, embeddings: EmbeddingSet::new(v)?, segments: c.segments, reference: c.reference })
        })
        .collect::<mksc::Result<Vec<_>>>()?;

    let grid = BenchGrid { kernels: BANKS.iter().map(|s| s.to_string()).collect(), ..Default::default() };
    let outcome = run_grid(&grid.expand(&RunConfig::default())?, &recordings);
    print!("{}", outcome.der.to_tsv(100.0));
    println!();
    print!("{}", outcome.ranks_tsv());
    for (config, rec, err) in &outcome.failures {
        eprintln!("{config} on {rec}: {err}");
    }
    Ok(())
}
