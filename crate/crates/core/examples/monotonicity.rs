//! Magnetization under larger ground rates, and the reduced-rate decoupling bound.
//!
//! `cargo run --release --example monotonicity -- [nsamples]`

use rcr::estimators::{condexp_check, monotonicity_check};
use rcr::lattice::{Lattice, ModelParams, Point};
use rcr::pointprocess::{reduced_rates, RateProfile, Region, Segment};

fn main() -> rcr::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let low = ModelParams::chain(3, 1.0, 0.4, 0.3, 0.3);
    let lat_lo = Lattice::new(&low)?;
    let u = Point::new(0, 0.5);
    for rho in [0.3, 0.45, 0.6, 0.9] {
        let lat_hi = Lattice::new(&low.with_fields(0.4, rho, 0.3))?;
        let r = monotonicity_check(
            &low,
            &RateProfile::homogeneous(&lat_lo),
            &RateProfile::homogeneous(&lat_hi),
            u,
            n,
            1,
        )?;
        println!(
            "rho 0.3 -> {rho}: M {:.4} -> {:.4}, difference {:+.4} +- {:.4}",
            r.low, r.high, r.difference, r.stderr
        );
    }
    let region = Region::new(
        vec![Segment {
            site: 1,
            start: 0.2,
            end: 0.7,
        }],
        &lat_lo,
    )?;
    let r = monotonicity_check(
        &low,
        &reduced_rates(&lat_lo, &region),
        &RateProfile::homogeneous(&lat_lo),
        u,
        n,
        2,
    )?;
    println!("reduced -> full rates: {:+.4} +- {:.4}", r.difference, r.stderr);
    let c = condexp_check(&low, &region, Point::new(0, 0.2), &[Point::new(2, 0.4)], n, 3)?;
    println!(
        "sourced {:.4} vs M * unsourced {:.4} (difference {:+.4} +- {:.4})",
        c.left, c.right, c.difference, c.stderr
    );
    Ok(())
}
