//! Compatible labels: counting and enumeration.
//!
//! A label is a piecewise-constant `{r, l}` function on each circle that
//! jumps exactly at the forced points (sources and incident flips) and takes
//! the value `r` at every mark. Since the jump set is forced, each circle has
//! at most two candidates, fixed by the value on the arc containing time 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Point};
use crate::pointprocess::{Arrivals, Region, Segment};

pub const ENUMERATION_CIRCLE_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    R,
    L,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::R => Label::L,
            Label::L => Label::R,
        }
    }

    fn flip_if(self, odd: bool) -> Label {
        if odd {
            self.flip()
        } else {
            self
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::R => "r",
            Label::L => "l",
        })
    }
}

/// Label on one circle: `initial` holds on `[0, jumps[0])` (or everywhere
/// when there are no jumps), and the value alternates at each jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleLabel {
    pub initial: Label,
    pub jumps: Vec<f64>,
}

impl CircleLabel {
    pub fn constant(v: Label) -> Self {
        CircleLabel {
            initial: v,
            jumps: Vec::new(),
        }
    }

    /// Value just after `t` (between jumps the choice does not matter).
    pub fn value(&self, t: f64) -> Label {
        let before = self.jumps.partition_point(|&s| s <= t);
        self.initial.flip_if(before % 2 == 1)
    }

    /// Value on the open arc just before `t`.
    pub fn value_before(&self, t: f64) -> Label {
        let before = self.jumps.partition_point(|&s| s < t);
        self.initial.flip_if(before % 2 == 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub circles: Vec<CircleLabel>,
}

impl LabelConfig {
    pub fn value(&self, p: Point) -> Label {
        self.circles[p.site].value(p.time)
    }
}

/// Finite set of jump-forcing points, kept sorted and duplicate free.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceSet {
    points: Vec<Point>,
}

impl SourceSet {
    pub fn new(points: impl IntoIterator<Item = Point>) -> Self {
        let mut points: Vec<Point> = points.into_iter().collect();
        points.sort_by(|a, b| (a.site, a.time).partial_cmp(&(b.site, b.time)).expect("finite times"));
        points.dedup();
        SourceSet { points }
    }

    pub fn empty() -> Self {
        SourceSet::default()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.contains(&p)
    }

    pub fn on_site(&self, site: usize) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter(move |p| p.site == site).map(|p| p.time)
    }

    pub fn symmetric_difference(&self, other: &SourceSet) -> SourceSet {
        let a = self.points.iter().filter(|p| !other.contains(**p));
        let b = other.points.iter().filter(|p| !self.contains(**p));
        SourceSet::new(a.chain(b).copied())
    }
}

/// Flip times of all edges incident to `site`, unsorted.
fn incident_flips<'a>(lat: &'a Lattice, arr: &'a Arrivals, site: usize) -> impl Iterator<Item = f64> + 'a {
    lat.incident(site)
        .iter()
        .flat_map(move |&(e, _)| arr.flips[e].iter().copied())
}

fn collides(lat: &Lattice, arr: &Arrivals, p: Point) -> bool {
    incident_flips(lat, arr, p.site)
        .chain(arr.marks[p.site].iter().copied())
        .any(|t| t == p.time)
}

pub fn forced_jumps(lat: &Lattice, arr: &Arrivals, a: &SourceSet, site: usize) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = incident_flips(lat, arr, site).collect();
    for t in a.on_site(site) {
        if collides(lat, arr, Point::new(site, t)) {
            return Err(Error::PointCollision { site, time: t });
        }
        out.push(t);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Initial values admissible on one circle: bit 0 for `r`, bit 1 for `l`.
///
/// `jumps` must be sorted. Every constraint time must carry label `r`.
fn admissible_initials(jumps: &[f64], constraints: impl Iterator<Item = f64>) -> u8 {
    if jumps.len() % 2 == 1 {
        return 0;
    }
    let mut mask = 0b11;
    for t in constraints {
        let odd = jumps.partition_point(|&s| s <= t) % 2 == 1;
        // initial flipped `odd` times must be r
        mask &= if odd { 0b10 } else { 0b01 };
        if mask == 0 {
            break;
        }
    }
    mask
}

fn check_rpoints(lat: &Lattice, arr: &Arrivals, a: &SourceSet, rpoints: &[Point]) -> Result<()> {
    for &p in rpoints {
        if collides(lat, arr, p) || a.contains(p) {
            return Err(Error::PointCollision {
                site: p.site,
                time: p.time,
            });
        }
    }
    Ok(())
}

fn circle_mask(lat: &Lattice, arr: &Arrivals, a: &SourceSet, rpoints: &[Point], site: usize) -> Result<(Vec<f64>, u8)> {
    let jumps = forced_jumps(lat, arr, a, site)?;
    let rs = rpoints.iter().filter(|p| p.site == site).map(|p| p.time);
    let mask = admissible_initials(&jumps, arr.marks[site].iter().copied().chain(rs));
    Ok((jumps, mask))
}

/// Number of compatible labels on one circle (0, 1 or 2).
pub fn circle_count(lat: &Lattice, arr: &Arrivals, a: &SourceSet, rpoints: &[Point], site: usize) -> Result<u32> {
    Ok(circle_mask(lat, arr, a, rpoints, site)?.1.count_ones())
}

pub fn count_compatible(lat: &Lattice, arr: &Arrivals, a: &SourceSet) -> Result<u128> {
    count_compatible_with_r_constraints(lat, arr, a, &[])
}

pub fn count_compatible_with_r_constraints(
    lat: &Lattice,
    arr: &Arrivals,
    a: &SourceSet,
    rpoints: &[Point],
) -> Result<u128> {
    check_rpoints(lat, arr, a, rpoints)?;
    let mut total: u128 = 1;
    for site in 0..lat.volume() {
        let c = circle_count(lat, arr, a, rpoints, site)?;
        if c == 0 {
            return Ok(0);
        }
        total = total
            .checked_mul(c as u128)
            .ok_or_else(|| Error::Numerical("label count overflows u128".into()))?;
    }
    Ok(total)
}

/// The (at most two) compatible labels on one circle, `r`-initial first.
pub fn circle_candidates(
    lat: &Lattice,
    arr: &Arrivals,
    a: &SourceSet,
    rpoints: &[Point],
    site: usize,
) -> Result<Vec<CircleLabel>> {
    let (jumps, mask) = circle_mask(lat, arr, a, rpoints, site)?;
    Ok([(0b01, Label::R), (0b10, Label::L)]
        .into_iter()
        .filter(|(bit, _)| mask & bit != 0)
        .map(|(_, initial)| CircleLabel {
            initial,
            jumps: jumps.clone(),
        })
        .collect())
}

pub fn enumerate_compatible(lat: &Lattice, arr: &Arrivals, a: &SourceSet) -> Result<Vec<LabelConfig>> {
    enumerate_compatible_with_r_constraints(lat, arr, a, &[])
}

pub fn enumerate_compatible_with_r_constraints(
    lat: &Lattice,
    arr: &Arrivals,
    a: &SourceSet,
    rpoints: &[Point],
) -> Result<Vec<LabelConfig>> {
    if lat.volume() > ENUMERATION_CIRCLE_CAP {
        return Err(Error::CapExceeded {
            what: "label enumeration circles",
            needed: lat.volume(),
            cap: ENUMERATION_CIRCLE_CAP,
        });
    }
    check_rpoints(lat, arr, a, rpoints)?;
    let per_circle = (0..lat.volume())
        .map(|s| circle_candidates(lat, arr, a, rpoints, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(cartesian(&per_circle))
}

/// Every way of picking one candidate per circle; the last circle varies fastest.
pub fn cartesian(per_circle: &[Vec<CircleLabel>]) -> Vec<LabelConfig> {
    let mut out = vec![Vec::with_capacity(per_circle.len())];
    for options in per_circle {
        let mut next = Vec::with_capacity(out.len() * options.len());
        for prefix in &out {
            for o in options {
                let mut p = prefix.clone();
                p.push(o.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(|circles| LabelConfig { circles }).collect()
}

/// Checks that `nu` is compatible with `arr` and sources `a`.
pub fn validate(lat: &Lattice, arr: &Arrivals, a: &SourceSet, nu: &LabelConfig) -> Result<()> {
    if nu.circles.len() != lat.volume() {
        return Err(Error::IncompatibleLabels("wrong number of circles".into()));
    }
    for site in 0..lat.volume() {
        let jumps = forced_jumps(lat, arr, a, site)?;
        let c = &nu.circles[site];
        if c.jumps != jumps {
            return Err(Error::IncompatibleLabels(format!(
                "jumps on circle {site} differ from the forced set"
            )));
        }
        if jumps.len() % 2 == 1 {
            return Err(Error::IncompatibleLabels(format!("odd jump count on circle {site}")));
        }
        if let Some(t) = arr.marks[site].iter().find(|&&t| c.value(t) != Label::R) {
            return Err(Error::IncompatibleLabels(format!("label l at mark ({site}, {t})")));
        }
    }
    Ok(())
}

/// Number of reduced labels living on the complement of `region`.
///
/// Circles untouched by the region behave as usual. Each arc of the
/// complement on a partly covered circle is an open chain: its label may
/// start as `r` or `l`, jumps at the forced points inside the arc, and needs
/// no parity condition. `rpoints` may sit on arc endpoints, where the label
/// is the limit from inside the arc.
pub fn count_reduced(lat: &Lattice, arr: &Arrivals, region: &Region, a: &SourceSet, rpoints: &[Point]) -> Result<u128> {
    let beta = lat.beta();
    let mut total: u128 = 1;
    for site in 0..lat.volume() {
        let segs: Vec<&Segment> = region.on_site(site).collect();
        if segs.is_empty() {
            let c = circle_count(lat, arr, a, rpoints, site)?;
            total *= c as u128;
            if total == 0 {
                return Ok(0);
            }
            continue;
        }
        let jumps = forced_jumps(lat, arr, a, site)?;
        let k = segs.len();
        for m in 0..k {
            let lo = segs[m].end;
            let hi = segs[(m + 1) % k].start;
            // arc (lo, hi), wrapping through beta when hi <= lo
            let span = if hi > lo { hi - lo } else { hi + beta - lo };
            if span <= 0.0 {
                continue;
            }
            let offset = |t: f64| if t >= lo { t - lo } else { t + beta - lo };
            let mut inner: Vec<f64> = jumps
                .iter()
                .map(|&t| offset(t))
                .filter(|&x| x > 0.0 && x < span)
                .collect();
            inner.sort_by(f64::total_cmp);
            let mut cons: Vec<f64> = arr.marks[site]
                .iter()
                .map(|&t| offset(t))
                .filter(|&x| x > 0.0 && x < span)
                .collect();
            for p in rpoints.iter().filter(|p| p.site == site) {
                let x = if p.time == lo { 0.0 } else { offset(p.time) };
                let x = if p.time == hi { span } else { x };
                if (0.0..=span).contains(&x) {
                    cons.push(x);
                }
            }
            let mut mask = 0b11u8;
            for x in cons {
                let odd = inner.partition_point(|&s| s < x) % 2 == 1;
                mask &= if odd { 0b10 } else { 0b01 };
            }
            total *= mask.count_ones() as u128;
            if total == 0 {
                return Ok(0);
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModelParams;
    use crate::pointprocess::sample_arrivals_with;
    use crate::stats::sample_rng;
    use proptest::prelude::*;

    fn lat(n: usize) -> Lattice {
        Lattice::new(&ModelParams::chain(n, 1.0, 0.5, 0.7, 0.9)).unwrap()
    }

    #[test]
    fn forced_jump_example() {
        let l = lat(3);
        let mut arr = Arrivals::empty(&l);
        arr.flips[0] = vec![0.3]; // edge (0, 1)
        arr.flips[l.ghost_edge(0)] = vec![0.9];
        let a = SourceSet::new([Point::new(0, 0.5)]);
        assert_eq!(forced_jumps(&l, &arr, &a, 0).unwrap(), vec![0.3, 0.5, 0.9]);
        assert_eq!(forced_jumps(&l, &arr, &a, 1).unwrap(), vec![0.3]);
        assert_eq!(
            forced_jumps(&l, &arr, &SourceSet::empty(), 2).unwrap(),
            Vec::<f64>::new()
        );
        let clash = SourceSet::new([Point::new(1, 0.3)]);
        assert!(forced_jumps(&l, &arr, &clash, 1).is_err());
    }

    #[test]
    fn counting_examples() {
        let l = lat(3);
        let mut arr = Arrivals::empty(&l);
        assert_eq!(count_compatible(&l, &arr, &SourceSet::empty()).unwrap(), 8);
        let u = Point::new(1, 0.4);
        assert_eq!(count_compatible(&l, &arr, &SourceSet::new([u])).unwrap(), 0);
        assert_eq!(
            count_compatible_with_r_constraints(&l, &arr, &SourceSet::empty(), &[u]).unwrap(),
            4
        );
        assert_eq!(
            count_compatible_with_r_constraints(&l, &arr, &SourceSet::empty(), &[]).unwrap(),
            8
        );
        arr.marks[1] = vec![0.2];
        assert_eq!(count_compatible(&l, &arr, &SourceSet::empty()).unwrap(), 4);
    }

    #[test]
    fn enumeration_examples() {
        let l = lat(2);
        let arr = Arrivals::empty(&l);
        let all = enumerate_compatible(&l, &arr, &SourceSet::empty()).unwrap();
        assert_eq!(all.len(), 4);
        let none = enumerate_compatible(&l, &arr, &SourceSet::new([Point::new(0, 0.5)])).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn value_conventions() {
        let c = CircleLabel {
            initial: Label::R,
            jumps: vec![0.2, 0.6],
        };
        assert_eq!(c.value(0.1), Label::R);
        assert_eq!(c.value(0.3), Label::L);
        assert_eq!(c.value(0.2), Label::L);
        assert_eq!(c.value_before(0.2), Label::R);
        assert_eq!(c.value(0.9), Label::R);
    }

    #[test]
    fn symmetric_difference_of_sources() {
        let u = Point::new(0, 0.1);
        let v = Point::new(1, 0.2);
        let w = Point::new(2, 0.3);
        let a = SourceSet::new([u, v]);
        let b = SourceSet::new([v, w]);
        assert_eq!(a.symmetric_difference(&b), SourceSet::new([u, w]));
        assert_eq!(a.symmetric_difference(&a), SourceSet::empty());
    }

    proptest! {
        #[test]
        fn enumeration_agrees_with_count(seed in 0u64..5000, n in 1usize..5, k in 0usize..3) {
            let l = lat(n);
            let arr = sample_arrivals_with(&l, &mut sample_rng(seed, 0));
            let a = SourceSet::new((0..k).map(|i| Point::new(i % n, 0.123 + 0.31 * i as f64)));
            let count = count_compatible(&l, &arr, &a).unwrap();
            let all = enumerate_compatible(&l, &arr, &a).unwrap();
            prop_assert_eq!(all.len() as u128, count);
            for nu in &all {
                prop_assert!(validate(&l, &arr, &a, nu).is_ok());
            }
            for i in 0..all.len() {
                for j in 0..i {
                    prop_assert_ne!(&all[i], &all[j]);
                }
            }
            // parity law and per-circle product
            let mut prod = 1u128;
            for s in 0..n {
                let c = circle_count(&l, &arr, &a, &[], s).unwrap();
                prop_assert!(c <= 2);
                if forced_jumps(&l, &arr, &a, s).unwrap().len() % 2 == 1 {
                    prop_assert_eq!(c, 0);
                }
                prod *= c as u128;
            }
            prop_assert_eq!(prod, count);
        }

        #[test]
        fn unmarked_candidates_are_complements(seed in 0u64..5000) {
            let l = Lattice::new(&ModelParams::chain(3, 1.0, 0.5, 0.7, 0.0)).unwrap();
            let arr = sample_arrivals_with(&l, &mut sample_rng(seed, 1));
            for s in 0..3 {
                let c = circle_candidates(&l, &arr, &SourceSet::empty(), &[], s).unwrap();
                if c.len() == 2 {
                    for t in [0.05, 0.33, 0.71] {
                        prop_assert_eq!(c[0].value(t), c[1].value(t).flip());
                    }
                }
            }
        }
    }
}
