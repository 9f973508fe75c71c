//! Builds the fused sparse affinity for a two-speaker corpus and reports how
//! much edge weight stays inside each speaker.
//!
//! cargo run --example sparse_graph -- [neighbors]

use mksc::graph::{build_affinity, GraphConfig};
use mksc::kernels::default_bank;
use mksc::synth::{generate, SynthConfig};

fn main() -> mksc::Result<()> {
    let neighbors = std::env::args().nth(1).map_or(5, |s| s.parse().expect("neighbors"));
    let corpus = generate(&SynthConfig { k: 2, noise_sigma: 0.1, seed: 1, ..Default::default() })?;
    for sparsify in [true, false] {
        let cfg = GraphConfig { neighbors, sparsify, ..Default::default() };
        let a = build_affinity(&corpus.embeddings, &default_bank(), &cfg)?;
        println!(
            "sparsify={sparsify:5}  n={}  nnz={:6}  frobenius={:.12}  within-speaker mass={:.4}",
            a.n(),
            a.nnz(),
            a.matrix().frobenius_norm(),
            a.within_mass_fraction(&corpus.labels)
        );
    }
    Ok(())
}
