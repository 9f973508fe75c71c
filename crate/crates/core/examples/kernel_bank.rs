//! Evaluates every named kernel on a few vectors and prints the Gram
//! matrices of the default bank.
//!
//! cargo run --example kernel_bank

use mksc::kernels::{compute_kernel_bank, default_bank, NAMED_KERNELS};
use mksc::EmbeddingSet;

fn main() -> mksc::Result<()> {
    let x = [1.0, 0.0];
    let y = [0.0, 1.0];
    let dot = x[0] * y[0] + x[1] * y[1];
    println!("orthogonal unit vectors:");
    for (name, id) in NAMED_KERNELS {
        println!("  {name:8} k(x,x) = {:.6}  k(x,y) = {:.6}", id.eval(1.0, 1.0, 1.0), id.eval(dot, 1.0, 1.0));
    }

    let emb = EmbeddingSet::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.8, 0.6, 0.0], vec![0.0, 0.0, 1.0]])?;
    for km in compute_kernel_bank(&emb, &default_bank())? {
        println!("\n{}:\n{:.4}", km.id, km.values);
    }
    Ok(())
}
