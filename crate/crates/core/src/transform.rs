//! Path lengths, the minimal-path order, and the basic transformation of a
//! pair of labelled configurations along an unblocked path.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{IntervalGraph, VertexKind, Via};
use crate::labels::{CircleLabel, Label, LabelConfig, SourceSet};
use crate::lattice::{GhostOrPoint, Lattice, Point};
use crate::pointprocess::{combine, Arrivals, CombinedArrivals, Replica, Tagged};

pub const PATH_CANDIDATE_CAP: usize = 100_000;

/// A sum of arrival times with integer coefficients plus a multiple of
/// `beta`. Two lengths built from the same endpoints compare equal exactly.
#[derive(Clone, Debug)]
pub struct Length {
    terms: BTreeMap<u64, i64>,
    betas: i64,
    beta: f64,
}

impl Length {
    pub fn zero(beta: f64) -> Self {
        Length {
            terms: BTreeMap::new(),
            betas: 0,
            beta,
        }
    }

    /// `end - start`, plus `beta` when the arc wraps (or closes on itself).
    pub fn arc(start: f64, end: f64, beta: f64) -> Self {
        let mut l = Length::zero(beta);
        l.add_term(end, 1);
        l.add_term(start, -1);
        if end <= start {
            l.betas = 1;
        }
        l
    }

    fn add_term(&mut self, t: f64, c: i64) {
        let key = t.to_bits();
        let e = self.terms.entry(key).or_insert(0);
        *e += c;
        if *e == 0 {
            self.terms.remove(&key);
        }
    }

    pub fn value(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&k, &c)| c as f64 * f64::from_bits(k))
            .sum::<f64>()
            + self.betas as f64 * self.beta
    }

    fn exact(&self) -> BigRational {
        let mut s =
            BigRational::from_float(self.beta).expect("finite") * BigRational::from_integer(BigInt::from(self.betas));
        for (&k, &c) in &self.terms {
            s += BigRational::from_float(f64::from_bits(k)).expect("finite")
                * BigRational::from_integer(BigInt::from(c));
        }
        s
    }

    fn scale(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&k, &c)| (c as f64 * f64::from_bits(k)).abs())
            .sum::<f64>()
            + (self.betas as f64 * self.beta).abs()
    }

    pub fn formally_equal(&self, other: &Length) -> bool {
        self.terms == other.terms && self.betas == other.betas
    }

    fn sub(&self, other: &Length) -> Length {
        let mut d = self.clone();
        for (&k, &c) in &other.terms {
            d.add_term(f64::from_bits(k), -c);
        }
        d.betas -= other.betas;
        d
    }
}

impl std::ops::Add<&Length> for &Length {
    type Output = Length;
    fn add(self, rhs: &Length) -> Length {
        let mut s = self.clone();
        for (&k, &c) in &rhs.terms {
            s.add_term(f64::from_bits(k), c);
        }
        s.betas += rhs.betas;
        s
    }
}

impl PartialEq for Length {
    fn eq(&self, other: &Self) -> bool {
        self.formally_equal(other)
    }
}

impl Eq for Length {}

impl Ord for Length {
    /// Numeric order; values that coincide without being formally equal are
    /// ordered by their first nonzero formal coefficient, which keeps the
    /// order compatible with addition.
    fn cmp(&self, other: &Self) -> Ordering {
        if self.formally_equal(other) {
            return Ordering::Equal;
        }
        let d = self.sub(other);
        let approx = d.value();
        if approx.abs() > 1e-12 * (self.scale() + other.scale() + 1.0) {
            return approx.partial_cmp(&0.0).expect("finite lengths");
        }
        let exact = d.exact();
        if !exact.is_zero() {
            return if exact.is_positive() {
                Ordering::Greater
            } else {
                Ordering::Less
            };
        }
        for &c in d.terms.values() {
            if c != 0 {
                return c.cmp(&0);
            }
        }
        d.betas.cmp(&0)
    }
}

impl PartialOrd for Length {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A walk through the interval graph: `vertices[k] -> vertices[k + 1]` via `vias[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathObj {
    pub vertices: Vec<usize>,
    pub vias: Vec<Via>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PathNode {
    Interval(usize),
    Ghost,
}

impl PathObj {
    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("nonempty path")
    }

    pub fn intervals(&self) -> impl Iterator<Item = usize> + '_ {
        self.vias.iter().filter_map(|v| match v {
            Via::Interval(id) => Some(*id),
            Via::GhostLink => None,
        })
    }

    /// The sequence of intervals and ghost visits.
    pub fn nodes(&self, g: &IntervalGraph) -> Vec<PathNode> {
        let mut out = Vec::new();
        if self.start() == g.ghost {
            out.push(PathNode::Ghost);
        }
        for (k, via) in self.vias.iter().enumerate() {
            match via {
                Via::Interval(id) => out.push(PathNode::Interval(*id)),
                Via::GhostLink => {
                    if self.vertices[k + 1] == g.ghost && out.last() != Some(&PathNode::Ghost) {
                        out.push(PathNode::Ghost);
                    }
                }
            }
        }
        out
    }

    /// Checks adjacency, vertex-simplicity and (optionally) that no interval is blocked.
    pub fn validate(&self, g: &IntervalGraph, require_unblocked: bool) -> Result<()> {
        if self.vertices.len() != self.vias.len() + 1 {
            return Err(Error::InvalidPath("vertex and step counts disagree".into()));
        }
        let mut seen = BTreeSet::new();
        for (k, &x) in self.vertices.iter().enumerate() {
            let closing = k == self.vertices.len() - 1 && x == self.vertices[0] && k > 0;
            if !seen.insert(x) && !closing {
                return Err(Error::InvalidPath(format!("vertex {x} visited twice")));
            }
        }
        for (k, via) in self.vias.iter().enumerate() {
            let (x, y) = (self.vertices[k], self.vertices[k + 1]);
            if !g.adj[x].contains(&(y, *via)) {
                return Err(Error::InvalidPath(format!("no step {x} -> {y} via {via:?}")));
            }
            if let Via::Interval(id) = via {
                if require_unblocked && g.intervals[*id].blocked {
                    return Err(Error::InvalidPath(format!("interval {id} is blocked")));
                }
            }
        }
        Ok(())
    }
}

fn step_length(g: &IntervalGraph, via: Via) -> Length {
    match via {
        Via::GhostLink => Length::zero(g.beta),
        Via::Interval(id) => {
            let iv = &g.intervals[id];
            Length::arc(iv.start, iv.end, g.beta)
        }
    }
}

pub fn path_length(g: &IntervalGraph, p: &PathObj) -> Length {
    p.vias
        .iter()
        .fold(Length::zero(g.beta), |acc, &v| &acc + &step_length(g, v))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Run {
    Ghost,
    Circle { site: usize, length: Length },
}

impl Run {
    fn length(&self, beta: f64) -> Length {
        match self {
            Run::Ghost => Length::zero(beta),
            Run::Circle { length, .. } => length.clone(),
        }
    }
}

/// Maximal same-circle runs of the path; each ghost visit is a run of length 0.
pub fn coarse_grained(g: &IntervalGraph, p: &PathObj) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for node in p.nodes(g) {
        match node {
            PathNode::Ghost => runs.push(Run::Ghost),
            PathNode::Interval(id) => {
                let iv = &g.intervals[id];
                let len = Length::arc(iv.start, iv.end, g.beta);
                match runs.last_mut() {
                    Some(Run::Circle { site, length }) if *site == iv.site => *length = &*length + &len,
                    _ => runs.push(Run::Circle {
                        site: iv.site,
                        length: len,
                    }),
                }
            }
        }
    }
    runs
}

/// Outcome of a comparison under the minimal-path order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precedence {
    pub order: Ordering,
    /// Set when the coarse-grained runs could not separate the paths and
    /// node ids decided.
    pub fallback: bool,
}

pub fn compare_paths(g: &IntervalGraph, p: &PathObj, q: &PathObj) -> Precedence {
    if p == q {
        return Precedence {
            order: Ordering::Equal,
            fallback: false,
        };
    }
    let by_length = path_length(g, p).cmp(&path_length(g, q));
    if by_length != Ordering::Equal {
        return Precedence {
            order: by_length,
            fallback: false,
        };
    }
    let rp = coarse_grained(g, p);
    let rq = coarse_grained(g, q);
    for (a, b) in rp.iter().zip(&rq) {
        // the longer run at the first difference comes first
        let o = b.length(g.beta).cmp(&a.length(g.beta));
        if o != Ordering::Equal {
            return Precedence {
                order: o,
                fallback: false,
            };
        }
    }
    let key = |x: &PathObj| -> Vec<(usize, usize)> {
        x.vertices
            .iter()
            .zip(x.vias.iter().map(|v| match v {
                Via::Interval(id) => *id,
                Via::GhostLink => usize::MAX,
            }))
            .map(|(a, b)| (*a, b))
            .collect()
    };
    Precedence {
        order: key(p).cmp(&key(q)).then(p.vertices.len().cmp(&q.vertices.len())),
        fallback: true,
    }
}

/// `p ≺ q`: shorter, or equally long with a longer run at the first
/// coarse-grained difference.
pub fn precedes(g: &IntervalGraph, p: &PathObj, q: &PathObj) -> bool {
    compare_paths(g, p, q).order == Ordering::Less
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimalPath {
    pub path: PathObj,
    pub candidates: usize,
    pub fallback: bool,
}

/// The ≺-least unblocked path from `u` to `v`.
pub fn minimal_unblocked_path(g: &IntervalGraph, u: GhostOrPoint, v: GhostOrPoint) -> Result<MinimalPath> {
    let a = g.vertex_of(u)?;
    let b = g.vertex_of(v)?;
    let n = g.vertices.len();
    let usable = |x: usize, y: usize, via: Via| -> bool {
        x != y
            && match via {
                Via::GhostLink => true,
                Via::Interval(id) => !g.intervals[id].blocked,
            }
    };

    // Dijkstra; graphs are tiny, so a linear scan for the minimum suffices
    let mut dist: Vec<Option<Length>> = vec![None; n];
    let mut done = vec![false; n];
    dist[a] = Some(Length::zero(g.beta));
    loop {
        let next = (0..n)
            .filter(|&x| !done[x] && dist[x].is_some())
            .min_by(|&x, &y| dist[x].as_ref().unwrap().cmp(dist[y].as_ref().unwrap()).then(x.cmp(&y)));
        let Some(x) = next else { break };
        done[x] = true;
        let dx = dist[x].clone().unwrap();
        for &(y, via) in &g.adj[x] {
            if !usable(x, y, via) || done[y] {
                continue;
            }
            let cand = &dx + &step_length(g, via);
            if dist[y].as_ref().is_none_or(|d| cand < *d) {
                dist[y] = Some(cand);
            }
        }
    }
    if dist[b].is_none() {
        return Err(Error::NoPath);
    }
    let tight = |x: usize, y: usize, via: Via| -> bool {
        usable(x, y, via)
            && match (&dist[x], &dist[y]) {
                (Some(dx), Some(dy)) => (dx + &step_length(g, via)).formally_equal(dy),
                _ => false,
            }
    };
    // vertices from which b is reachable along tight steps
    let mut to_b = vec![false; n];
    to_b[b] = true;
    let mut stack = vec![b];
    while let Some(y) = stack.pop() {
        for x in 0..n {
            if to_b[x] {
                continue;
            }
            if g.adj[x].iter().any(|&(z, via)| z == y && tight(x, y, via)) {
                to_b[x] = true;
                stack.push(x);
            }
        }
    }

    let mut candidates: Vec<PathObj> = Vec::new();
    let mut vertices = vec![a];
    let mut vias = Vec::new();
    let mut on_path = vec![false; n];
    on_path[a] = true;
    enumerate_tight(
        g,
        &tight,
        &to_b,
        b,
        &mut vertices,
        &mut vias,
        &mut on_path,
        &mut candidates,
    )?;
    let count = candidates.len();
    let mut best = candidates.swap_remove(0);
    let mut fallback = false;
    for c in candidates {
        let pr = compare_paths(g, &c, &best);
        if pr.fallback {
            fallback = true;
        }
        if pr.order == Ordering::Less {
            best = c;
        }
    }
    Ok(MinimalPath {
        path: best,
        candidates: count,
        fallback,
    })
}

#[allow(clippy::too_many_arguments)]
fn enumerate_tight(
    g: &IntervalGraph,
    tight: &dyn Fn(usize, usize, Via) -> bool,
    to_b: &[bool],
    b: usize,
    vertices: &mut Vec<usize>,
    vias: &mut Vec<Via>,
    on_path: &mut [bool],
    out: &mut Vec<PathObj>,
) -> Result<()> {
    let x = *vertices.last().unwrap();
    if x == b {
        if out.len() >= PATH_CANDIDATE_CAP {
            return Err(Error::CapExceeded {
                what: "minimal path candidates",
                needed: out.len() + 1,
                cap: PATH_CANDIDATE_CAP,
            });
        }
        out.push(PathObj {
            vertices: vertices.clone(),
            vias: vias.clone(),
        });
        return Ok(());
    }
    for &(y, via) in &g.adj[x] {
        if on_path[y] || !to_b[y] || !tight(x, y, via) {
            continue;
        }
        on_path[y] = true;
        vertices.push(y);
        vias.push(via);
        enumerate_tight(g, tight, to_b, b, vertices, vias, on_path, out)?;
        vias.pop();
        vertices.pop();
        on_path[y] = false;
    }
    Ok(())
}

/// Every vertex-simple unblocked path from `u` to `v` (testing aid).
pub fn all_unblocked_paths(g: &IntervalGraph, u: GhostOrPoint, v: GhostOrPoint) -> Result<Vec<PathObj>> {
    let a = g.vertex_of(u)?;
    let b = g.vertex_of(v)?;
    let n = g.vertices.len();
    let always = |x: usize, y: usize, via: Via| -> bool {
        x != y
            && match via {
                Via::GhostLink => true,
                Via::Interval(id) => !g.intervals[id].blocked,
            }
    };
    let mut out = Vec::new();
    let mut on_path = vec![false; n];
    on_path[a] = true;
    enumerate_tight(
        g,
        &always,
        &vec![true; n],
        b,
        &mut vec![a],
        &mut Vec::new(),
        &mut on_path,
        &mut out,
    )?;
    Ok(out)
}

/// Two labelled replicas with their source sets.
#[derive(Clone, Debug, PartialEq)]
pub struct PairConfig {
    pub arr1: Arrivals,
    pub nu1: LabelConfig,
    pub arr2: Arrivals,
    pub nu2: LabelConfig,
    pub a: SourceSet,
    pub b: SourceSet,
}

impl PairConfig {
    pub fn combined(&self) -> Result<CombinedArrivals> {
        combine(&self.arr1, &self.arr2)
    }

    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        crate::labels::validate(lat, &self.arr1, &self.a, &self.nu1)?;
        crate::labels::validate(lat, &self.arr2, &self.b, &self.nu2)
    }

    /// The pair-mode interval graph relative to `g`.
    pub fn graph(&self, lat: &Lattice, g: &[Point]) -> Result<IntervalGraph> {
        crate::geometry::decompose(lat, &self.combined()?, &self.nu1, &self.nu2, g)
    }
}

fn rebuild_circle(g: &IntervalGraph, site: usize, values: &[Label]) -> CircleLabel {
    let ids = &g.by_site[site];
    if g.intervals[ids[0]].is_full_circle() {
        return CircleLabel::constant(values[0]);
    }
    let k = ids.len();
    let mut jumps = Vec::new();
    for m in 0..k {
        // interval m starts at cut m; the previous interval is m - 1 (wrapping)
        let prev = values[(m + k - 1) % k];
        if values[m] != prev {
            jumps.push(g.intervals[ids[m]].start);
        }
    }
    let first_cut = g.intervals[ids[0]].start;
    let initial = if first_cut == 0.0 { values[0] } else { values[k - 1] };
    CircleLabel { initial, jumps }
}

/// Flips both labels on every interval of `path`, moves marks on the path to
/// the replica that is `r` afterwards and reassigns each flip to the replica
/// whose label now jumps there. `graph` must be the pair graph of `cfg`.
pub fn basic_transformation(
    lat: &Lattice,
    cfg: &PairConfig,
    graph: &IntervalGraph,
    path: &PathObj,
) -> Result<PairConfig> {
    path.validate(graph, true)?;
    let on_path: BTreeSet<usize> = path.intervals().collect();

    let mut nu1 = Vec::with_capacity(lat.volume());
    let mut nu2 = Vec::with_capacity(lat.volume());
    for site in 0..lat.volume() {
        let ids = &graph.by_site[site];
        let mut v1 = Vec::with_capacity(ids.len());
        let mut v2 = Vec::with_capacity(ids.len());
        for &id in ids {
            let (l1, l2) = graph.intervals[id].labels;
            let l2 = l2.ok_or_else(|| Error::InvalidPath("graph is not in pair mode".into()))?;
            if on_path.contains(&id) {
                v1.push(l1.flip());
                v2.push(l2.flip());
            } else {
                v1.push(l1);
                v2.push(l2);
            }
        }
        nu1.push(rebuild_circle(graph, site, &v1));
        nu2.push(rebuild_circle(graph, site, &v2));
    }
    let nu1 = LabelConfig { circles: nu1 };
    let nu2 = LabelConfig { circles: nu2 };

    let old = cfg.combined()?;
    let mut eta: Vec<Vec<Tagged>> = old.eta.clone();
    for kind in &graph.vertices {
        if let VertexKind::Flip { edge, index, time, .. } = *kind {
            let (a, b) = lat.edges()[edge].sites();
            let j1 = nu1.circles[a].jumps.contains(&time);
            let j2 = nu2.circles[a].jumps.contains(&time);
            if j1 == j2 {
                return Err(Error::InvalidPath(format!(
                    "flip at {time} jumps in {} replicas",
                    if j1 { "both" } else { "neither" }
                )));
            }
            if let Some(b) = b {
                if nu1.circles[b].jumps.contains(&time) != j1 {
                    return Err(Error::InvalidPath(format!(
                        "flip at {time} inconsistent across its edge"
                    )));
                }
            }
            eta[edge][index].replica = if j1 { Replica::One } else { Replica::Two };
        }
    }
    let mut n: Vec<Vec<Tagged>> = old.n.clone();
    for (site, list) in n.iter_mut().enumerate() {
        for m in list.iter_mut() {
            let id = graph.by_site[site]
                .iter()
                .copied()
                .find(|&id| graph.intervals[id].contains_time(m.time))
                .expect("intervals tile the circle");
            if on_path.contains(&id) {
                m.replica = if nu1.circles[site].value(m.time) == Label::R {
                    Replica::One
                } else {
                    Replica::Two
                };
            }
        }
    }
    let (arr1, arr2) = CombinedArrivals { eta, n }.split();

    let sources = |nu: &LabelConfig| {
        SourceSet::new(
            graph
                .special
                .iter()
                .copied()
                .filter(|p| nu.circles[p.site].jumps.contains(&p.time)),
        )
    };
    let a = sources(&nu1);
    let b = sources(&nu2);
    Ok(PairConfig {
        arr1,
        nu1,
        arr2,
        nu2,
        a,
        b,
    })
}

/// Endpoints of a path that are space-time points (not the ghost).
pub fn point_endpoints(g: &IntervalGraph, p: &PathObj) -> Vec<Point> {
    [p.start(), p.end()]
        .into_iter()
        .filter_map(|v| match g.vertices[v] {
            VertexKind::Special(q) => Some(q),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mode;
    use crate::lattice::ModelParams;

    fn lat(n: usize) -> Lattice {
        Lattice::new(&ModelParams::chain(n, 1.0, 0.5, 0.8, 0.9)).unwrap()
    }

    #[test]
    fn formal_lengths() {
        let a = Length::arc(0.1, 0.5, 1.0);
        assert!((a.value() - 0.4).abs() < 1e-15);
        let w = Length::arc(0.9, 0.2, 1.0);
        assert!((w.value() - 0.3).abs() < 1e-15);
        let s = Length::arc(0.3, 0.3, 1.0);
        assert_eq!(s.value(), 1.0);
        assert_eq!(&Length::arc(0.1, 0.3, 1.0) + &Length::arc(0.3, 0.5, 1.0), a);
        assert!(Length::arc(0.1, 0.3, 1.0) < a);
        // 0.1 + 0.2 and 0.3 differ in floating point but 0.3 - 0.0 vs the
        // sum of two arcs through 0.2 are formally equal
        let split = &Length::arc(0.0, 0.2, 1.0) + &Length::arc(0.2, 0.3, 1.0);
        assert_eq!(split, Length::arc(0.0, 0.3, 1.0));
    }

    #[test]
    fn nonstructural_ties_are_ordered() {
        // 0.5 - 0.25 == 0.75 - 0.5 exactly in binary but formally different
        let x = Length::arc(0.25, 0.5, 1.0);
        let y = Length::arc(0.5, 0.75, 1.0);
        assert_eq!(x.value(), y.value());
        assert_ne!(x.cmp(&y), Ordering::Equal);
        assert_eq!(x.cmp(&y), y.cmp(&x).reverse());
    }

    #[test]
    fn equal_path_is_not_preceding() {
        let l = lat(1);
        let c = CombinedArrivals::from_untagged(&Arrivals::empty(&l));
        let u = Point::new(0, 0.2);
        let v = Point::new(0, 0.7);
        let g = IntervalGraph::structure(&l, &c, &[u, v], Mode::Pair).unwrap();
        let paths = all_unblocked_paths(&g, u.into(), v.into()).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(!precedes(&g, &paths[0], &paths[0]));
        assert!(precedes(&g, &paths[0], &paths[1]) != precedes(&g, &paths[1], &paths[0]));
        let m = minimal_unblocked_path(&g, u.into(), v.into()).unwrap();
        assert!((path_length(&g, &m.path).value() - 0.5).abs() < 1e-15);
        assert_eq!(m.candidates, 1);
    }

    #[test]
    fn no_path_error() {
        let l = lat(2);
        let c = CombinedArrivals::from_untagged(&Arrivals::empty(&l));
        let u = Point::new(0, 0.2);
        let v = Point::new(1, 0.7);
        let g = IntervalGraph::structure(&l, &c, &[u, v], Mode::Pair).unwrap();
        assert!(matches!(
            minimal_unblocked_path(&g, u.into(), v.into()),
            Err(Error::NoPath)
        ));
    }

    #[test]
    fn longer_first_run_wins_on_ties() {
        // flips on edge {0, 1} at 0.3 and 0.5. From (0, 0.1) to (1, 0.9) one
        // can cross at either flip; both routes have length 0.9 - 0.1 as the
        // same formal sum, with first runs 0.4 and 0.2. A long circle keeps
        // the wrapping routes out of contention.
        let l = Lattice::new(&ModelParams::chain(2, 3.0, 0.5, 0.8, 0.9)).unwrap();
        let mut arr = Arrivals::empty(&l);
        arr.flips[0] = vec![0.3, 0.5];
        let c = CombinedArrivals::from_untagged(&arr);
        let u = Point::new(0, 0.1);
        let v = Point::new(1, 0.9);
        let g = IntervalGraph::structure(&l, &c, &[u, v], Mode::Pair).unwrap();
        let m = minimal_unblocked_path(&g, u.into(), v.into()).unwrap();
        assert_eq!(m.candidates, 2);
        assert!(!m.fallback);
        let runs = coarse_grained(&g, &m.path);
        match &runs[0] {
            Run::Circle { site, length } => {
                assert_eq!(*site, 0);
                assert!((length.value() - 0.4).abs() < 1e-15);
            }
            Run::Ghost => panic!("unexpected ghost run"),
        }
        let all = all_unblocked_paths(&g, u.into(), v.into()).unwrap();
        let mut sorted = all.clone();
        sorted.sort_by(|p, q| compare_paths(&g, p, q).order);
        assert_eq!(m.path, sorted[0]);
    }
}
