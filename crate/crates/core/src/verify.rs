//! Randomised exact checks: label counting against a definitional brute
//! force, switching identities on random combined configurations, and the
//! laws of the basic transformation.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::estimators::{switching_identity_check, Variant};
use crate::geometry::{IntervalGraph, Via};
use crate::labels::{self, Label, SourceSet};
use crate::lattice::{GhostOrPoint, Lattice, ModelParams, Point};
use crate::pointprocess::{combine, sample_arrivals_with, Arrivals, CombinedArrivals};
use crate::stats::sample_rng;
use crate::transform::{
    all_unblocked_paths, basic_transformation, minimal_unblocked_path, point_endpoints, PairConfig, PathObj,
};

/// Most arrivals in a random instance.
pub const MAX_ARRIVALS: usize = 12;

fn random_chain<R: Rng>(rng: &mut R, sizes: &[usize], beta_max: f64) -> ModelParams {
    let n = *sizes.choose(rng).expect("nonempty sizes");
    let beta = rng.random_range(0.5..=beta_max);
    ModelParams::chain(
        n,
        beta,
        rng.random_range(0.3..1.5),
        rng.random_range(0.3..1.5),
        rng.random_range(0.1..0.8),
    )
}

/// Random chain whose fields are scaled so that one replica has `mean`
/// arrivals on average.
fn random_chain_with_mean<R: Rng>(rng: &mut R, sizes: &[usize], beta_max: f64, mean: f64) -> Result<ModelParams> {
    let raw = random_chain(rng, sizes, beta_max);
    let lat = Lattice::new(&raw)?;
    let v = lat.volume() as f64;
    let expected = lat.beta() * (lat.total_ground_rate() + v * raw.h + v * raw.lambda);
    let k = mean / expected;
    Ok(raw.with_fields(raw.h * k, raw.rho * k, raw.lambda * k))
}

fn random_point<R: Rng>(rng: &mut R, lat: &Lattice) -> Point {
    Point::new(rng.random_range(0..lat.volume()), rng.random::<f64>() * lat.beta())
}

// ---------------------------------------------------------------------------
// Label counting

/// Definitional count: on every circle, try every subset of the candidate
/// jump times (incident flips, sources and marks) and every starting value,
/// and keep the closed labels that jump at every flip and source, never at a
/// mark, and read `r` at every mark and every `rpoints` entry.
pub fn brute_force_count(lat: &Lattice, arr: &Arrivals, a: &SourceSet, rpoints: &[Point]) -> u128 {
    let mut total: u128 = 1;
    for site in 0..lat.volume() {
        let mut forced: Vec<f64> = lat
            .incident(site)
            .iter()
            .flat_map(|&(e, _)| arr.flips[e].iter().copied())
            .chain(a.on_site(site))
            .collect();
        forced.sort_by(f64::total_cmp);
        let marks = &arr.marks[site];
        let universe: Vec<f64> = forced.iter().chain(marks).copied().collect();
        let rs: Vec<f64> = rpoints.iter().filter(|p| p.site == site).map(|p| p.time).collect();
        let mut count = 0u128;
        for subset in 0u32..1 << universe.len() {
            let chosen: Vec<f64> = (0..universe.len())
                .filter(|k| subset >> k & 1 == 1)
                .map(|k| universe[k])
                .collect();
            if !forced.iter().all(|t| chosen.contains(t)) || marks.iter().any(|t| chosen.contains(t)) {
                continue;
            }
            if chosen.len() % 2 == 1 {
                continue;
            }
            for initial in [Label::R, Label::L] {
                let value = |t: f64| {
                    let k = chosen.iter().filter(|&&s| s <= t).count();
                    if k % 2 == 0 {
                        initial
                    } else {
                        initial.flip()
                    }
                };
                if marks.iter().chain(&rs).all(|&t| value(t) == Label::R) {
                    count += 1;
                }
            }
        }
        total *= count;
    }
    total
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LabelReport {
    pub instances: usize,
    pub nonzero: usize,
    pub mismatches: Vec<String>,
}

impl LabelReport {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares `count_compatible` (with and without `r` constraints) against
/// [`brute_force_count`] on random instances with at most six circles.
pub fn check_label_counting(ninstances: usize, seed: u64) -> Result<LabelReport> {
    let mut report = LabelReport::default();
    for i in 0..ninstances {
        let mut rng = sample_rng(seed, i as u64);
        let params = if rng.random_bool(0.25) {
            ModelParams::nearest_neighbour(2, 2, 1.0, rng.random_range(0.5..1.5), 0.6, 0.5, 0.5)
        } else {
            random_chain(&mut rng, &[2, 3, 4, 5, 6], 1.5)
        };
        let lat = Lattice::new(&params)?;
        let arr = loop {
            let arr = sample_arrivals_with(&lat, &mut rng);
            if arr.n_flips() + arr.n_marks() <= MAX_ARRIVALS {
                break arr;
            }
        };
        let a = SourceSet::new((0..rng.random_range(0..4)).map(|_| random_point(&mut rng, &lat)));
        let r: Vec<Point> = (0..rng.random_range(0..3))
            .map(|_| random_point(&mut rng, &lat))
            .collect();
        for rp in [&[][..], &r[..]] {
            let fast = labels::count_compatible_with_r_constraints(&lat, &arr, &a, rp)?;
            let slow = brute_force_count(&lat, &arr, &a, rp);
            report.nonzero += (fast > 0) as usize;
            if fast != slow {
                report
                    .mismatches
                    .push(format!("instance {i}: fast {fast}, brute force {slow}"));
            }
        }
        report.instances += 1;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Switching identities

/// A random combined configuration on a chain (`N <= 4`, `beta <= 1.5`, at
/// most [`MAX_ARRIVALS`] arrivals) and insertion points for `variant`.
///
/// Configurations are redrawn until every circle has the combined parity
/// the variant's sources require; otherwise both sides vanish trivially.
pub fn random_switching_instance(
    rng: &mut ChaCha8Rng,
    variant: Variant,
) -> Result<(Lattice, CombinedArrivals, Vec<Point>)> {
    let mean = rng.random_range(2.5..4.5);
    let params = random_chain_with_mean(rng, &[2, 3, 4], 1.5, mean)?;
    let lat = Lattice::new(&params)?;
    let npoints = match variant {
        Variant::Crossmany => rng.random_range(2..=3),
        v => v.arity(),
    };
    let mut points: Vec<Point> = (0..npoints).map(|_| random_point(rng, &lat)).collect();
    if variant == Variant::Crossmany {
        points[1..].sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    let sources: Vec<Point> = match variant {
        Variant::Zz => points.clone(),
        Variant::Xx => vec![],
        Variant::Zx | Variant::Crossmany => vec![points[0]],
        Variant::Triple => points.clone(),
    };
    loop {
        let a1 = sample_arrivals_with(&lat, rng);
        let a2 = sample_arrivals_with(&lat, rng);
        let Ok(c) = combine(&a1, &a2) else { continue };
        if c.count_eta() + c.count_n() > MAX_ARRIVALS {
            continue;
        }
        let untagged = c.untagged();
        let parity_ok = (0..lat.volume()).all(|site| {
            let flips: usize = lat.incident(site).iter().map(|&(e, _)| untagged.flips[e].len()).sum();
            let src = sources.iter().filter(|p| p.site == site).count();
            (flips + src).is_multiple_of(2)
        });
        if parity_ok {
            return Ok((lat, c, points));
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SwitchRow {
    pub instance: usize,
    pub variant: &'static str,
    pub lhs: u128,
    pub rhs: u128,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SwitchingReport {
    pub rows: Vec<SwitchRow>,
}

impl SwitchingReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.lhs == r.rhs)
    }

    pub fn nonzero(&self, variant: Variant) -> usize {
        self.rows
            .iter()
            .filter(|r| r.variant == variant.name() && r.lhs > 0)
            .count()
    }
}

pub fn check_switching(ninstances: usize, seed: u64, variants: &[Variant]) -> Result<SwitchingReport> {
    let mut report = SwitchingReport::default();
    for i in 0..ninstances {
        for (k, &variant) in variants.iter().enumerate() {
            let mut rng = sample_rng(seed, (i * Variant::ALL.len() + k) as u64);
            let (lat, c, points) = random_switching_instance(&mut rng, variant)?;
            let r = switching_identity_check(&lat, &c, &points, variant)?;
            report.rows.push(SwitchRow {
                instance: i,
                variant: variant.name(),
                lhs: r.lhs,
                rhs: r.rhs,
            });
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Connectivity by exhaustive path search

/// Is there a vertex-simple unblocked path from `a` to `b`? Exhaustive DFS
/// over all simple paths; `ground_only` forbids passing through the ghost.
pub fn brute_connected(g: &IntervalGraph, a: usize, b: usize, ground_only: bool) -> bool {
    fn go(g: &IntervalGraph, x: usize, b: usize, ground_only: bool, on: &mut Vec<bool>) -> bool {
        if x == b {
            return true;
        }
        if ground_only && x == g.ghost && on.iter().filter(|&&s| s).count() > 1 {
            return false;
        }
        for &(y, via) in &g.adj[x] {
            let open = match via {
                Via::GhostLink => true,
                Via::Interval(id) => !g.intervals[id].blocked,
            };
            if open && !on[y] {
                on[y] = true;
                let hit = go(g, y, b, ground_only, on);
                on[y] = false;
                if hit {
                    return true;
                }
            }
        }
        false
    }
    let mut on = vec![false; g.vertices.len()];
    on[a] = true;
    go(g, a, b, ground_only, &mut on)
}

// ---------------------------------------------------------------------------
// Transformation laws

#[derive(Clone, Debug, Default, Serialize)]
pub struct TransformReport {
    pub instances: usize,
    pub minimal_instances: usize,
    pub involution: Vec<String>,
    pub combined_invariance: Vec<String>,
    pub locality: Vec<String>,
    pub sources: Vec<String>,
    pub blocked: Vec<String>,
    pub compatibility: Vec<String>,
    pub minimality: Vec<String>,
}

impl TransformReport {
    pub fn laws(&self) -> [(&'static str, &Vec<String>); 7] {
        [
            ("involution", &self.involution),
            ("combined invariance", &self.combined_invariance),
            ("locality", &self.locality),
            ("source symmetric difference", &self.sources),
            ("blocked status", &self.blocked),
            ("compatibility", &self.compatibility),
            ("minimal path invariance", &self.minimality),
        ]
    }

    pub fn pass(&self) -> bool {
        self.laws().iter().all(|(_, v)| v.is_empty())
    }
}

struct TransformInstance {
    lat: Lattice,
    g: Vec<Point>,
    cfg: PairConfig,
    graph: IntervalGraph,
    path: PathObj,
    minimal: bool,
    ends: (GhostOrPoint, GhostOrPoint),
}

fn random_transform_instance(rng: &mut ChaCha8Rng) -> Result<TransformInstance> {
    loop {
        let params = random_chain(rng, &[2, 3], 1.5);
        let lat = Lattice::new(&params)?;
        let arr1 = sample_arrivals_with(&lat, rng);
        let arr2 = sample_arrivals_with(&lat, rng);
        if arr1.n_flips() + arr1.n_marks() + arr2.n_flips() + arr2.n_marks() > MAX_ARRIVALS {
            continue;
        }
        let g: Vec<Point> = (0..rng.random_range(2..=3)).map(|_| random_point(rng, &lat)).collect();
        let a = SourceSet::new(g.iter().copied().filter(|_| rng.random_bool(0.5)));
        let b = SourceSet::new(g.iter().copied().filter(|_| rng.random_bool(0.5)));
        let (Ok(n1), Ok(n2)) = (
            labels::enumerate_compatible(&lat, &arr1, &a),
            labels::enumerate_compatible(&lat, &arr2, &b),
        ) else {
            continue;
        };
        let (Some(nu1), Some(nu2)) = (n1.choose(rng), n2.choose(rng)) else {
            continue;
        };
        let cfg = PairConfig {
            arr1,
            nu1: nu1.clone(),
            arr2,
            nu2: nu2.clone(),
            a,
            b,
        };
        let Ok(graph) = cfg.graph(&lat, &g) else { continue };
        let mut ends: Vec<GhostOrPoint> = g.iter().map(|&p| p.into()).collect();
        ends.push(GhostOrPoint::Ghost);
        let u = *ends.choose(rng).expect("nonempty");
        let v = *ends.choose(rng).expect("nonempty");
        if u == v {
            continue;
        }
        let minimal = rng.random_bool(0.5);
        let path = if minimal {
            match minimal_unblocked_path(&graph, u, v) {
                Ok(m) => m.path,
                Err(_) => continue,
            }
        } else {
            let Ok(all) = all_unblocked_paths(&graph, u, v) else {
                continue;
            };
            match all.choose(rng) {
                Some(p) => p.clone(),
                None => continue,
            }
        };
        return Ok(TransformInstance {
            lat,
            g,
            cfg,
            graph,
            path,
            minimal,
            ends: (u, v),
        });
    }
}

fn untagged_counts(cfg: &PairConfig) -> (usize, usize) {
    (
        cfg.arr1.n_flips() + cfg.arr2.n_flips(),
        cfg.arr1.n_marks() + cfg.arr2.n_marks(),
    )
}

/// Checks involution, combined invariance, locality, the source change,
/// blocked-status preservation, compatibility of the image and (for minimal
/// paths) invariance of the minimal path, on random instances.
pub fn check_transform_laws(ninstances: usize, seed: u64) -> Result<TransformReport> {
    let mut rep = TransformReport::default();
    for i in 0..ninstances {
        let mut rng = sample_rng(seed, i as u64);
        let t = random_transform_instance(&mut rng)?;
        rep.instances += 1;
        let tag = |msg: &str| format!("instance {i}: {msg}");
        let image = basic_transformation(&t.lat, &t.cfg, &t.graph, &t.path)?;

        if let Err(e) = image.validate(&t.lat) {
            rep.compatibility.push(tag(&e.to_string()));
            continue;
        }
        let g2 = image.graph(&t.lat, &t.g)?;

        match basic_transformation(&t.lat, &image, &g2, &t.path) {
            Ok(back) if back == t.cfg => {}
            Ok(_) => rep.involution.push(tag("second application differs from the original")),
            Err(e) => rep.involution.push(tag(&e.to_string())),
        }

        let (c1, c2) = (t.cfg.combined()?, image.combined()?);
        if c1.untagged() != c2.untagged() || untagged_counts(&t.cfg) != untagged_counts(&image) {
            rep.combined_invariance.push(tag("combined arrivals changed"));
        }

        let on_path: BTreeSet<usize> = t.path.intervals().collect();
        for (id, (before, after)) in t.graph.intervals.iter().zip(&g2.intervals).enumerate() {
            if !on_path.contains(&id) && before.labels != after.labels {
                rep.locality
                    .push(tag(&format!("interval {id} off the path changed labels")));
            }
            if before.blocked != after.blocked {
                rep.blocked.push(tag(&format!("interval {id} changed blocked status")));
            }
        }
        for (site, (l1, l2)) in c1.n.iter().zip(&c2.n).enumerate() {
            for (m1, m2) in l1.iter().zip(l2) {
                let id = t.graph.by_site[site]
                    .iter()
                    .copied()
                    .find(|&id| t.graph.intervals[id].contains_time(m1.time))
                    .expect("intervals tile the circle");
                if !on_path.contains(&id) && m1.replica != m2.replica {
                    rep.locality
                        .push(tag(&format!("mark at ({site}, {}) off the path moved", m1.time)));
                }
            }
        }

        let ends: Vec<Point> = if t.path.start() == t.path.end() {
            vec![]
        } else {
            point_endpoints(&t.graph, &t.path)
        };
        let delta = SourceSet::new(ends);
        if image.a != t.cfg.a.symmetric_difference(&delta) || image.b != t.cfg.b.symmetric_difference(&delta) {
            rep.sources
                .push(tag("sources are not the symmetric difference with the endpoints"));
        }

        if t.minimal {
            rep.minimal_instances += 1;
            match minimal_unblocked_path(&g2, t.ends.0, t.ends.1) {
                Ok(m) if m.path == t.path => {}
                Ok(_) => rep
                    .minimality
                    .push(tag("minimal path changed under the transformation")),
                Err(e) => rep.minimality.push(tag(&e.to_string())),
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_agrees_on_empty_configuration() {
        let lat = Lattice::new(&ModelParams::chain(3, 1.0, 0.5, 0.5, 0.5)).unwrap();
        let arr = Arrivals::empty(&lat);
        assert_eq!(brute_force_count(&lat, &arr, &SourceSet::empty(), &[]), 8);
        let u = Point::new(0, 0.5);
        assert_eq!(brute_force_count(&lat, &arr, &SourceSet::new([u]), &[]), 0);
        assert_eq!(brute_force_count(&lat, &arr, &SourceSet::empty(), &[u]), 4);
    }

    #[test]
    fn label_counting_small_run() {
        let r = check_label_counting(200, 5).unwrap();
        assert!(r.pass(), "{:?}", r.mismatches);
        assert!(r.nonzero > 20);
    }

    #[test]
    fn switching_small_run() {
        let r = check_switching(30, 8, &Variant::ALL).unwrap();
        assert!(r.pass());
        for v in Variant::ALL {
            assert!(r.nonzero(v) > 5, "{} {}", v.name(), r.nonzero(v));
        }
    }

    #[test]
    fn transform_laws_small_run() {
        let r = check_transform_laws(150, 2).unwrap();
        for (name, fails) in r.laws() {
            assert!(fails.is_empty(), "{name}: {fails:?}");
        }
        assert!(r.minimal_instances > 30);
    }

    #[test]
    fn brute_connectivity_matches_bfs() {
        let mut rng = sample_rng(4, 0);
        for _ in 0..100 {
            let t = random_transform_instance(&mut rng).unwrap();
            let g = &t.graph;
            for a in 0..g.vertices.len() {
                for b in 0..g.vertices.len() {
                    for ground in [false, true] {
                        let fast = g.reachable(a, &[], ground)[b];
                        assert_eq!(fast, brute_connected(g, a, b, ground));
                    }
                }
            }
        }
    }
}
