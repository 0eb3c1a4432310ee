//! Slacks of the magnetization inequalities over a small parameter grid.
//!
//! `cargo run --release --example differential_inequalities`

use rcr::lattice::ModelParams;
use rcr::oracle::{diffineq_report, grid};

fn main() -> rcr::Result<()> {
    let vals = [0.2, 0.5, 1.0];
    let rep = diffineq_report(&grid(
        &ModelParams::chain(3, 1.0, 0.0, 0.0, 0.0),
        &vals,
        &vals,
        &vals,
        &[1.0],
    ))?;
    println!(
        "{:>4} {:>4} {:>4} {:>8} {:>10} {:>10} {:>10}",
        "h", "rho", "lam", "M", "slack1", "slack2a", "slack2b"
    );
    for r in &rep.rows {
        println!(
            "{:>4} {:>4} {:>4} {:>8.5} {:>10.3e} {:>10.3e} {:>10.3e}",
            r.h, r.rho, r.lambda, r.m, r.slack1, r.slack2a, r.slack2b
        );
    }
    println!("all nonnegative: {}", rep.pass());
    Ok(())
}
