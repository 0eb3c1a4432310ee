//! Frequency of unusually fast passage through the discretised mark field.
//!
//! `cargo run --release --example percolation_bound -- [nsamples]`

use rcr::lattice::ModelParams;
use rcr::percolation::{percbound_experiment, Cell};

fn main() -> rcr::error::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let params = ModelParams::chain(12, 2.0, 0.3, 0.3, 0.3);
    let pairs: Vec<(Cell, Cell)> = (1..=6).map(|j| (Cell::new(0, 0), Cell::new(0, j))).collect();
    let report = percbound_experiment(&params, 0.1, &pairs, n, 2024)?;
    println!(
        "{:>4} {:>7} {:>10} {:>10} {:>10}",
        "pair", "d", "freq", "ci_low", "ci_high"
    );
    for r in &report.rows {
        println!(
            "{:>4} {:>7} {:>10.5} {:>10.5} {:>10.5}",
            r.pair_id, r.d_delta, r.frequency, r.ci_low, r.ci_high
        );
    }
    match report.fit {
        Some((slope, _, r2)) => println!("log-frequency slope {slope:.4} (r2 {r2:.3})"),
        None => println!("fewer than two positive frequencies, no fit"),
    }
    let control = percbound_experiment(&params.with_fields(0.3, 0.3, 0.0), 0.1, &pairs, n, 2024)?;
    let hits: u64 = control.rows.iter().map(|r| r.hits).sum();
    println!("lambda = 0 control: {hits} hits");
    Ok(())
}
