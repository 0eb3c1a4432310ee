//! Truncated two-point functions from the switching forms, against exact values.
//!
//! `cargo run --release --example truncated_correlations -- [nsamples]`

use rcr::estimators::{estimate, Kind, Observable};
use rcr::lattice::{ModelParams, Point};
use rcr::oracle;

fn main() -> rcr::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let p = ModelParams::chain(3, 1.0, 0.4, 0.5, 0.3);
    let cases = [
        (Kind::TruncZz, vec![Point::new(0, 0.2), Point::new(1, 0.65)]),
        (Kind::TruncZz, vec![Point::new(0, 0.2), Point::new(0, 0.7)]),
        (Kind::TruncXx, vec![Point::new(0, 0.2), Point::new(0, 0.7)]),
        (Kind::TruncZx, vec![Point::new(0, 0.2), Point::new(1, 0.65)]),
        (
            Kind::Triple,
            vec![Point::new(0, 0.1), Point::new(1, 0.5), Point::new(2, 0.5)],
        ),
        (
            Kind::Crossmany,
            vec![Point::new(0, 0.4), Point::new(1, 0.1), Point::new(2, 0.7)],
        ),
    ];
    for (i, (kind, pts)) in cases.into_iter().enumerate() {
        let obs = Observable::new(kind, pts)?;
        let e = estimate(&p, &obs, n, i as u64)?;
        let exact = oracle::observable_value(&p, &obs)?;
        println!(
            "{:<10} {:<22} exact {exact:>9.5}  mc {:>9.5} +- {:.5}",
            kind.name(),
            obs.points_string(),
            e.mean,
            e.stderr
        );
    }
    Ok(())
}
