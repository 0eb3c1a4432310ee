//! Normalised partition function: exact diagonalisation against the mean
//! number of compatible unsourced labellings.
//!
//! `cargo run --release --example partition_function -- [nsamples]`

use rcr::estimators::{estimate, Kind, Observable};
use rcr::lattice::ModelParams;
use rcr::oracle;

fn main() -> rcr::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let obs = Observable::new(Kind::Partition, vec![])?;
    println!("{:>5} {:>5} {:>10} {:>10} {:>10}", "beta", "h", "exact", "mc", "stderr");
    for (beta, h) in [(0.5, 0.4), (1.0, 0.4), (1.0, 1.0), (2.0, 0.2)] {
        let p = ModelParams::chain(3, beta, h, 0.5, 0.3);
        let exact = oracle::partition_function(&p)?;
        let e = estimate(&p, &obs, n, 1)?;
        println!("{beta:>5} {h:>5} {exact:>10.5} {:>10.5} {:>10.5}", e.mean, e.stderr);
    }
    Ok(())
}
