//! The path transformation on a labelled replica pair: sources change by the
//! path endpoints and applying it twice restores the pair.
//!
//! `cargo run --release --example basic_transformation`

use rcr::labels::{enumerate_compatible, SourceSet};
use rcr::lattice::{GhostOrPoint, Lattice, ModelParams, Point};
use rcr::pointprocess::sample_arrivals;
use rcr::transform::{basic_transformation, minimal_unblocked_path, path_length, PairConfig};

fn show(tag: &str, cfg: &PairConfig) {
    let side = |nu: &rcr::labels::LabelConfig| {
        nu.circles
            .iter()
            .map(|c| format!("{}{:.3?}", c.initial, c.jumps))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("{tag}: A = {:?}, B = {:?}", cfg.a.points(), cfg.b.points());
    println!("  nu1 {}\n  nu2 {}", side(&cfg.nu1), side(&cfg.nu2));
}

fn main() -> rcr::Result<()> {
    let params = ModelParams::chain(3, 1.0, 0.4, 0.8, 0.3);
    let lat = Lattice::new(&params)?;
    let (u, v) = (Point::new(0, 0.3), Point::new(2, 0.7));
    let g = [u, v];
    for seed in 0..1000u64 {
        let arr1 = sample_arrivals(&params, 2 * seed)?;
        let arr2 = sample_arrivals(&params, 2 * seed + 1)?;
        let a = SourceSet::new([u, v]);
        let b = SourceSet::empty();
        let (Some(nu1), Some(nu2)) = (
            enumerate_compatible(&lat, &arr1, &a)?.into_iter().next(),
            enumerate_compatible(&lat, &arr2, &b)?.into_iter().next(),
        ) else {
            continue;
        };
        let cfg = PairConfig {
            arr1,
            nu1,
            arr2,
            nu2,
            a,
            b,
        };
        let graph = cfg.graph(&lat, &g)?;
        let Ok(min) = minimal_unblocked_path(&graph, GhostOrPoint::from(u), GhostOrPoint::from(v)) else {
            continue;
        };
        println!(
            "seed {seed}: minimal path through {} intervals, length {:.4}",
            min.path.vertices.len(),
            path_length(&graph, &min.path).value()
        );
        show("before", &cfg);
        let image = basic_transformation(&lat, &cfg, &graph, &min.path)?;
        show("after", &image);
        let back = basic_transformation(&lat, &image, &image.graph(&lat, &g)?, &min.path)?;
        println!("applied twice gives the original pair: {}", back == cfg);
        return Ok(());
    }
    println!("no connected instance found");
    Ok(())
}
