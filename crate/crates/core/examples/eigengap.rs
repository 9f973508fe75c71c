//! Prints the smallest Laplacian eigenvalues, their gaps and the estimated
//! speaker count for corpora with 1 to 6 speakers.
//!
//! cargo run --example eigengap

use mksc::graph::{build_affinity, GraphConfig};
use mksc::kernels::default_bank;
use mksc::spectral::{cluster, SpectralConfig};
use mksc::synth::{generate, permutation_accuracy, SynthConfig};

fn main() -> mksc::Result<()> {
    for k in 1..=6 {
        let corpus = generate(&SynthConfig { k, segments_per_speaker: 30, seed: 11, ..Default::default() })?;
        let a = build_affinity(&corpus.embeddings, &default_bank(), &GraphConfig::default())?;
        let r = cluster(&a, &SpectralConfig::default())?;
        let eig: Vec<String> = r.eigenvalues.iter().take(k + 2).map(|v| format!("{v:.4}")).collect();
        println!(
            "k={k}  k*={}  accuracy={:.3}  eigenvalues=[{}]",
            r.k_star,
            permutation_accuracy(&r.labels, &corpus.labels)?,
            eig.join(", ")
        );
    }
    Ok(())
}
