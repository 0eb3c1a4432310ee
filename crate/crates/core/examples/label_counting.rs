//! Compatible labellings of one sampled configuration: forced jumps per
//! circle, the closed-form count, explicit enumeration and brute force.
//!
//! `cargo run --release --example label_counting -- [seed]`

use rcr::labels::{count_compatible, enumerate_compatible, forced_jumps, SourceSet};
use rcr::lattice::{Lattice, ModelParams, Point};
use rcr::pointprocess::sample_arrivals;
use rcr::verify::brute_force_count;

fn main() -> rcr::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let params = ModelParams::chain(3, 1.0, 0.5, 0.7, 0.6);
    let lat = Lattice::new(&params)?;
    let a = SourceSet::new([Point::new(0, 0.25), Point::new(2, 0.6)]);
    for s in seed.. {
        let arr = sample_arrivals(&params, s)?;
        let count = count_compatible(&lat, &arr, &a)?;
        if count == 0 {
            continue;
        }
        println!("seed {s}: {} flips, {} marks", arr.n_flips(), arr.n_marks());
        for site in 0..lat.volume() {
            let jumps = forced_jumps(&lat, &arr, &a, site)?;
            println!("  site {site}: forced jumps {jumps:.3?}, marks {:.3?}", arr.marks[site]);
        }
        let all = enumerate_compatible(&lat, &arr, &a)?;
        println!(
            "closed form {count}, enumerated {}, brute force {}",
            all.len(),
            brute_force_count(&lat, &arr, &a, &[])
        );
        for nu in &all {
            let desc: Vec<String> = nu
                .circles
                .iter()
                .map(|c| format!("{}{:.3?}", c.initial, c.jumps))
                .collect();
            println!("  {}", desc.join("  "));
        }
        break;
    }
    Ok(())
}
