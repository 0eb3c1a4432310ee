//! Exponential decay of the equal-time truncated zz function on a ring.
//!
//! `cargo run --release --example decay_fit`

use rcr::lattice::ModelParams;
use rcr::oracle::Oracle;
use rcr::percolation::decay_fit;

fn main() -> rcr::Result<()> {
    let o = Oracle::new(&ModelParams::chain(10, 1.0, 0.5, 0.4, 0.3))?;
    let data: Vec<(f64, f64)> = (1..=5).map(|d| (d as f64, o.truncated_zz_equal_time(0, d))).collect();
    for (d, v) in &data {
        println!("distance {d}: {v:.6e}");
    }
    let fit = decay_fit(&data)?;
    println!("c1 = {:.4}, log c2 = {:.4}, r2 = {:.4}", fit.c1, fit.intercept, fit.r2);
    Ok(())
}
