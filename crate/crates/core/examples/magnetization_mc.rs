//! Magnetization from sourced label counts as the longitudinal field grows.
//!
//! `cargo run --release --example magnetization_mc`

use rcr::estimators::{estimate, Kind, Observable};
use rcr::lattice::{ModelParams, Point};
use rcr::oracle;

fn main() -> rcr::Result<()> {
    let obs = Observable::new(Kind::Sz, vec![Point::new(0, 0.5)])?;
    println!("{:>5} {:>10} {:>10} {:>10}", "h", "exact", "mc", "stderr");
    for h in [0.0, 0.1, 0.3, 0.6, 1.0] {
        let p = ModelParams::chain(4, 1.0, h, 0.6, 0.4);
        let e = estimate(&p, &obs, 40_000, 7)?;
        println!(
            "{h:>5} {:>10.5} {:>10.5} {:>10.5}",
            oracle::magnetization(&p)?,
            e.mean,
            e.stderr
        );
    }
    Ok(())
}
