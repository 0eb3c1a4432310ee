//! Exact two-replica identities on random combined configurations.
//!
//! `cargo run --release --example switching_lemma -- [instances]`

use rcr::estimators::{switching_identity_check, Variant};
use rcr::stats::sample_rng;
use rcr::verify::random_switching_instance;

fn main() -> rcr::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    for v in Variant::ALL {
        println!("{}", v.name());
        for i in 0..n {
            let (lat, c, points) = random_switching_instance(&mut sample_rng(77, i as u64), v)?;
            let r = switching_identity_check(&lat, &c, &points, v)?;
            println!(
                "  N={} beta={:.2} arrivals={:>2}  lhs {:>6}  rhs {:>6}  {}",
                lat.volume(),
                lat.beta(),
                c.count_eta() + c.count_n(),
                r.lhs,
                r.rhs,
                if r.holds() { "equal" } else { "DIFFERENT" }
            );
        }
    }
    Ok(())
}
