//! Monte Carlo estimators built on label counting, and exact per-configuration
//! checks of the switching identities.
//!
//! Single-replica observables are ratios `E[count_A] / E[count_0]`.
//! Truncated observables use two independent replicas: each draw enumerates
//! every compatible label pair, evaluates a connectivity indicator on the
//! pair's interval graph, and divides by `E[W1_0 * W2_0] = Z^2`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{IntervalGraph, Mode};
use crate::labels::{self, circle_candidates, CircleLabel, Label, LabelConfig, SourceSet};
use crate::lattice::{GhostOrPoint, Lattice, ModelParams, Point};
use crate::pointprocess::{
    combine, enumerate_splittings, sample_arrivals_with, sample_inhomogeneous_with, Arrivals, CombinedArrivals,
    RateProfile, Region, SPLITTING_CAP,
};
use crate::stats::{self, derive_seed, mean_stderr, ratio_jackknife};

/// Largest volume for which label pairs are enumerated per draw.
pub const PAIR_CIRCLE_CAP: usize = 8;

pub const CSV_HEADER: [&str; 7] = [
    "observable",
    "points",
    "mean",
    "stderr",
    "nsamples",
    "seed",
    "params_hash",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Partition,
    Sz,
    Szsz,
    Sigx,
    Sigxsigx,
    Szsigx,
    TruncZz,
    TruncXx,
    TruncZx,
    Triple,
    Crossmany,
}

impl Kind {
    pub const ALL: [Kind; 11] = [
        Kind::Partition,
        Kind::Sz,
        Kind::Szsz,
        Kind::Sigx,
        Kind::Sigxsigx,
        Kind::Szsigx,
        Kind::TruncZz,
        Kind::TruncXx,
        Kind::TruncZx,
        Kind::Triple,
        Kind::Crossmany,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Partition => "partition",
            Kind::Sz => "sz",
            Kind::Szsz => "szsz",
            Kind::Sigx => "sigx",
            Kind::Sigxsigx => "sigxsigx",
            Kind::Szsigx => "szsigx",
            Kind::TruncZz => "trunc_zz",
            Kind::TruncXx => "trunc_xx",
            Kind::TruncZx => "trunc_zx",
            Kind::Triple => "triple",
            Kind::Crossmany => "crossmany",
        }
    }

    fn is_pair(self) -> bool {
        matches!(
            self,
            Kind::TruncZz | Kind::TruncXx | Kind::TruncZx | Kind::Triple | Kind::Crossmany
        )
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Kind> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidObservable(format!("unknown kind `{s}`")))
    }
}

/// An observable and its insertion points.
///
/// `crossmany` takes `u` first, then the time-ordered `v` list; `triple`
/// takes `0, w, z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub kind: Kind,
    pub points: Vec<Point>,
}

impl Observable {
    pub fn new(kind: Kind, points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        let want = match kind {
            Kind::Partition => n == 0,
            Kind::Sz | Kind::Sigx => n == 1,
            Kind::Szsz | Kind::Sigxsigx | Kind::Szsigx | Kind::TruncZz | Kind::TruncXx | Kind::TruncZx => n == 2,
            Kind::Triple => n == 3,
            Kind::Crossmany => n >= 2,
        };
        if !want {
            return Err(Error::InvalidObservable(format!("{kind} does not take {n} points")));
        }
        let distinct = matches!(
            kind,
            Kind::Szsigx | Kind::TruncZz | Kind::TruncXx | Kind::TruncZx | Kind::Triple | Kind::Crossmany
        );
        if distinct {
            for i in 0..n {
                for j in 0..i {
                    if points[i] == points[j] {
                        return Err(Error::InvalidObservable(format!("{kind} needs distinct points")));
                    }
                }
            }
        }
        if kind == Kind::Crossmany && points[1..].windows(2).any(|w| w[0].time > w[1].time) {
            return Err(Error::InvalidObservable("crossmany v list must be time ordered".into()));
        }
        Ok(Observable { kind, points })
    }

    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        for p in &self.points {
            if p.site >= lat.volume() || !(0.0..lat.beta()).contains(&p.time) {
                return Err(Error::InvalidObservable(format!("point {p:?} is outside space-time")));
            }
        }
        Observable::new(self.kind, self.points.clone()).map(|_| ())
    }

    /// `site:time` pairs joined by `;`.
    pub fn points_string(&self) -> String {
        format_points(&self.points)
    }
}

pub fn format_points(points: &[Point]) -> String {
    points
        .iter()
        .map(|p| format!("{}:{}", p.site, p.time))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_points(s: &str) -> Result<Vec<Point>> {
    let bad = || Error::InvalidObservable(format!("cannot parse points `{s}`, expected site:time;site:time"));
    s.split(';')
        .filter(|x| !x.trim().is_empty())
        .map(|item| {
            let (a, b) = item.trim().split_once(':').ok_or_else(bad)?;
            Ok(Point::new(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub nsamples: usize,
    pub seed: u64,
    pub observable: String,
    pub points: String,
}

/// Appends estimate rows, writing the header when the file is new or empty.
pub fn append_csv(path: &Path, rows: &[Estimate], params_hash: &str) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.write_record([
            r.observable.clone(),
            r.points.clone(),
            fmt17(r.mean),
            fmt17(r.stderr),
            r.nsamples.to_string(),
            r.seed.to_string(),
            params_hash.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Seventeen significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

// ---------------------------------------------------------------------------
// Two-replica problems

type Test = Box<dyn Fn(&IntervalGraph) -> Result<bool> + Send + Sync>;

/// Label constraints of one side of a two-replica expression.
struct Side {
    a1: SourceSet,
    a2: SourceSet,
    r1: Vec<Point>,
    r2: Vec<Point>,
    l1: Vec<Point>,
    l2: Vec<Point>,
}

impl Side {
    fn sources(a1: Vec<Point>, a2: Vec<Point>) -> Self {
        Side {
            a1: SourceSet::new(a1),
            a2: SourceSet::new(a2),
            r1: vec![],
            r2: vec![],
            l1: vec![],
            l2: vec![],
        }
    }
}

/// A constrained label-pair count with an indicator on the pair graph.
pub struct PairProblem {
    g: Vec<Point>,
    side: Side,
    test: Test,
}

fn always() -> Test {
    Box::new(|_| Ok(true))
}

fn ghost_link(u: Point, negate: bool) -> Test {
    Box::new(move |g| Ok(g.connected_unblocked(u.into(), GhostOrPoint::Ghost, false)? != negate))
}

fn ghost_link_avoiding(u: Point, vs: Vec<Point>, negate: bool) -> Test {
    Box::new(move |g| Ok(g.connected_avoiding(u.into(), GhostOrPoint::Ghost, &vs)? != negate))
}

fn loop_avoiding(v: Point, u: Point, negate: bool) -> Test {
    Box::new(move |g| Ok(g.loop_through(v, Some(u))? != negate))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Zz,
    Xx,
    Zx,
    Triple,
    Crossmany,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Zz,
        Variant::Xx,
        Variant::Zx,
        Variant::Triple,
        Variant::Crossmany,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Zz => "zz",
            Variant::Xx => "xx",
            Variant::Zx => "zx",
            Variant::Triple => "triple",
            Variant::Crossmany => "crossmany",
        }
    }

    /// Number of points taken; crossmany takes at least this many.
    pub fn arity(self) -> usize {
        match self {
            Variant::Triple => 3,
            _ => 2,
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidObservable(format!("unknown switching variant `{s}`")))
    }
}

fn check_arity(variant: Variant, points: &[Point]) -> Result<()> {
    let ok = match variant {
        Variant::Crossmany => points.len() >= 2,
        v => points.len() == v.arity(),
    };
    if !ok {
        return Err(Error::InvalidObservable(format!(
            "{} takes {} points, got {}",
            variant.name(),
            variant.arity(),
            points.len()
        )));
    }
    Ok(())
}

/// The two sides of a switching identity: `(product side, switched side)`.
pub fn switching_sides(variant: Variant, points: &[Point]) -> Result<(PairProblem, PairProblem)> {
    check_arity(variant, points)?;
    let g = points.to_vec();
    Ok(match variant {
        Variant::Zz => {
            let (u, v) = (points[0], points[1]);
            (
                PairProblem {
                    g: g.clone(),
                    side: Side::sources(vec![u], vec![v]),
                    test: always(),
                },
                PairProblem {
                    g,
                    side: Side::sources(vec![], vec![u, v]),
                    test: ghost_link(u, false),
                },
            )
        }
        Variant::Xx => {
            let (u, v) = (points[0], points[1]);
            let mut minus = Side::sources(vec![], vec![]);
            minus.r1 = vec![u];
            minus.l2 = vec![u];
            minus.l1 = vec![v];
            minus.r2 = vec![v];
            (
                PairProblem {
                    g: g.clone(),
                    side: minus,
                    test: always(),
                },
                PairProblem {
                    g,
                    side: xx_plus(u, v),
                    test: loop_avoiding(v, u, false),
                },
            )
        }
        Variant::Zx | Variant::Crossmany => {
            let u = points[0];
            let vs = points[1..].to_vec();
            let mut minus = Side::sources(vec![u], vec![]);
            minus.r1 = vs.clone();
            let mut plus = Side::sources(vec![u], vec![]);
            plus.r2 = vs.clone();
            (
                PairProblem {
                    g: g.clone(),
                    side: minus,
                    test: always(),
                },
                PairProblem {
                    g,
                    side: plus,
                    test: ghost_link_avoiding(u, vs, false),
                },
            )
        }
        Variant::Triple => {
            let (o, w, z) = (points[0], points[1], points[2]);
            (
                PairProblem {
                    g: g.clone(),
                    side: Side::sources(vec![w, z], vec![o]),
                    test: always(),
                },
                PairProblem {
                    g,
                    side: Side::sources(vec![o, w, z], vec![]),
                    test: ghost_link(o, false),
                },
            )
        }
    })
}

/// `[(r,l)_u, (r,l)_v]`.
fn xx_plus(u: Point, v: Point) -> Side {
    let mut s = Side::sources(vec![], vec![]);
    s.r1 = vec![u, v];
    s.l2 = vec![u, v];
    s
}

/// `[(r,l)_u, (l,r)_v]`.
fn xx_minus(u: Point, v: Point) -> Side {
    let mut s = Side::sources(vec![], vec![]);
    s.r1 = vec![u];
    s.l2 = vec![u];
    s.l1 = vec![v];
    s.r2 = vec![v];
    s
}

/// Truncated two-replica expression for a pair kind, and its sign.
fn truncated_problem(obs: &Observable) -> Result<(PairProblem, f64)> {
    let p = &obs.points;
    let g = p.clone();
    Ok(match obs.kind {
        Kind::TruncZz => (
            PairProblem {
                g,
                side: Side::sources(vec![], vec![p[0], p[1]]),
                test: ghost_link(p[0], true),
            },
            1.0,
        ),
        Kind::TruncXx => (
            PairProblem {
                g,
                side: xx_plus(p[0], p[1]),
                test: loop_avoiding(p[1], p[0], true),
            },
            1.0,
        ),
        Kind::TruncZx | Kind::Crossmany => {
            let mut side = Side::sources(vec![p[0]], vec![]);
            side.r2 = p[1..].to_vec();
            (
                PairProblem {
                    g,
                    side,
                    test: ghost_link_avoiding(p[0], p[1..].to_vec(), true),
                },
                -1.0,
            )
        }
        Kind::Triple => (
            PairProblem {
                g,
                side: Side::sources(vec![p[0], p[1], p[2]], vec![]),
                test: ghost_link(p[0], true),
            },
            1.0,
        ),
        k => return Err(Error::InvalidObservable(format!("{k} is not a two-replica observable"))),
    })
}

fn candidates(
    lat: &Lattice,
    arr: &Arrivals,
    a: &SourceSet,
    r: &[Point],
    l: &[Point],
    site: usize,
) -> Result<Vec<CircleLabel>> {
    let mut out = circle_candidates(lat, arr, a, r, site)?;
    out.retain(|c| l.iter().filter(|p| p.site == site).all(|p| c.value(p.time) == Label::L));
    Ok(out)
}

fn all_candidates(
    lat: &Lattice,
    arr: &Arrivals,
    a: &SourceSet,
    r: &[Point],
    l: &[Point],
) -> Result<Option<Vec<Vec<CircleLabel>>>> {
    let mut out = Vec::with_capacity(lat.volume());
    for site in 0..lat.volume() {
        let c = candidates(lat, arr, a, r, l, site)?;
        if c.is_empty() {
            return Ok(None);
        }
        out.push(c);
    }
    Ok(Some(out))
}

/// Calls `f` on every pair drawn from the per-circle candidate lists.
fn for_each_pair(
    c1: &[Vec<CircleLabel>],
    c2: &[Vec<CircleLabel>],
    mut f: impl FnMut(&LabelConfig, &LabelConfig) -> Result<()>,
) -> Result<()> {
    let mut nu1 = LabelConfig {
        circles: c1.iter().map(|c| c[0].clone()).collect(),
    };
    let nu2_all = labels::cartesian(c2);
    let mut idx = vec![0usize; c1.len()];
    loop {
        for nu2 in &nu2_all {
            f(&nu1, nu2)?;
        }
        // odometer over replica one, last circle fastest
        let mut k = c1.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < c1[k].len() {
                nu1.circles[k] = c1[k][idx[k]].clone();
                break;
            }
            idx[k] = 0;
            nu1.circles[k] = c1[k][0].clone();
        }
    }
}

impl PairProblem {
    /// Number of compatible label pairs on two given replicas satisfying
    /// the constraints and the indicator.
    pub fn count(&self, lat: &Lattice, arr1: &Arrivals, arr2: &Arrivals) -> Result<u64> {
        let s = &self.side;
        let Some(c1) = all_candidates(lat, arr1, &s.a1, &s.r1, &s.l1)? else {
            return Ok(0);
        };
        let Some(c2) = all_candidates(lat, arr2, &s.a2, &s.r2, &s.l2)? else {
            return Ok(0);
        };
        let c = combine(arr1, arr2)?;
        let mut graph = IntervalGraph::structure(lat, &c, &self.g, Mode::Pair)?;
        let mut total = 0u64;
        for_each_pair(&c1, &c2, |nu1, nu2| {
            graph.relabel(nu1, Some(nu2))?;
            if (self.test)(&graph)? {
                total += 1;
            }
            Ok(())
        })?;
        Ok(total)
    }

    /// Sum over all splittings of `c` of [`PairProblem::count`], computed by
    /// splitting flips only and weighting each label pair by the number of
    /// admissible mark assignments.
    pub fn count_over_splittings(&self, lat: &Lattice, c: &CombinedArrivals) -> Result<u128> {
        let total = c.count_eta() + c.count_n();
        if total > SPLITTING_CAP {
            return Err(Error::CapExceeded {
                what: "splittings",
                needed: total,
                cap: SPLITTING_CAP,
            });
        }
        let mut graph = IntervalGraph::structure(lat, c, &self.g, Mode::Pair)?;
        let marks: Vec<Vec<f64>> = c.n.iter().map(|l| l.iter().map(|m| m.time).collect()).collect();
        let flips_only = CombinedArrivals {
            eta: c.eta.clone(),
            n: c.n.iter().map(|_| Vec::new()).collect(),
        };
        let s = &self.side;
        let mut sum: u128 = 0;
        for mask in 0..1u64 << c.count_eta() {
            let (arr1, arr2) = flips_only.retag(mask).split();
            let Some(c1) = all_candidates(lat, &arr1, &s.a1, &s.r1, &s.l1)? else {
                continue;
            };
            let Some(c2) = all_candidates(lat, &arr2, &s.a2, &s.r2, &s.l2)? else {
                continue;
            };
            for_each_pair(&c1, &c2, |nu1, nu2| {
                let mut weight: u128 = 1;
                for (site, ts) in marks.iter().enumerate() {
                    for &t in ts {
                        let k = (nu1.circles[site].value(t) == Label::R) as u128
                            + (nu2.circles[site].value(t) == Label::R) as u128;
                        weight *= k;
                    }
                }
                if weight == 0 {
                    return Ok(());
                }
                graph.relabel(nu1, Some(nu2))?;
                if (self.test)(&graph)? {
                    sum += weight;
                }
                Ok(())
            })?;
        }
        Ok(sum)
    }

    /// Same sum by literal enumeration of splittings and label pairs.
    pub fn count_over_splittings_literal(&self, lat: &Lattice, c: &CombinedArrivals) -> Result<u128> {
        let s = &self.side;
        let mut graph = IntervalGraph::structure(lat, c, &self.g, Mode::Pair)?;
        let mut sum: u128 = 0;
        for (arr1, arr2) in enumerate_splittings(c)? {
            let keep = |nu: &LabelConfig, l: &[Point]| l.iter().all(|p| nu.value(*p) == Label::L);
            let n1 = labels::enumerate_compatible_with_r_constraints(lat, &arr1, &s.a1, &s.r1)?;
            let n2 = labels::enumerate_compatible_with_r_constraints(lat, &arr2, &s.a2, &s.r2)?;
            for nu1 in n1.iter().filter(|nu| keep(nu, &s.l1)) {
                for nu2 in n2.iter().filter(|nu| keep(nu, &s.l2)) {
                    graph.relabel(nu1, Some(nu2))?;
                    if (self.test)(&graph)? {
                        sum += 1;
                    }
                }
            }
        }
        Ok(sum)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCounts {
    pub lhs: u128,
    pub rhs: u128,
}

impl IdentityCounts {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Exact counts of both sides of a switching identity at a fixed combined
/// configuration, summed over all splittings.
pub fn switching_identity_check(
    lat: &Lattice,
    c: &CombinedArrivals,
    points: &[Point],
    variant: Variant,
) -> Result<IdentityCounts> {
    let (lhs, rhs) = switching_sides(variant, points)?;
    Ok(IdentityCounts {
        lhs: lhs.count_over_splittings(lat, c)?,
        rhs: rhs.count_over_splittings(lat, c)?,
    })
}

/// Literal-enumeration version of [`switching_identity_check`].
pub fn switching_identity_check_literal(
    lat: &Lattice,
    c: &CombinedArrivals,
    points: &[Point],
    variant: Variant,
) -> Result<IdentityCounts> {
    let (lhs, rhs) = switching_sides(variant, points)?;
    Ok(IdentityCounts {
        lhs: lhs.count_over_splittings_literal(lat, c)?,
        rhs: rhs.count_over_splittings_literal(lat, c)?,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo

fn pair_cap(lat: &Lattice) -> Result<()> {
    if lat.volume() > PAIR_CIRCLE_CAP {
        return Err(Error::CapExceeded {
            what: "circles for label-pair enumeration",
            needed: lat.volume(),
            cap: PAIR_CIRCLE_CAP,
        });
    }
    Ok(())
}

fn finish(r: stats::Ratio, sign: f64, nsamples: usize, seed: u64, obs: &Observable) -> Estimate {
    Estimate {
        mean: sign * r.mean,
        stderr: r.stderr,
        nsamples,
        seed,
        observable: obs.kind.name().to_string(),
        points: obs.points_string(),
    }
}

/// Single-replica numerator constraints `(sources, r points)`.
fn single_constraints(obs: &Observable) -> (SourceSet, Vec<Point>) {
    let p = &obs.points;
    match obs.kind {
        Kind::Partition => (SourceSet::empty(), vec![]),
        Kind::Sz | Kind::Szsz => (SourceSet::new(p.clone()), vec![]),
        Kind::Sigx | Kind::Sigxsigx => (SourceSet::empty(), p.clone()),
        Kind::Szsigx => (SourceSet::new([p[0]]), vec![p[1]]),
        _ => unreachable!("pair kinds handled separately"),
    }
}

/// Ratio estimator for any observable kind.
pub fn estimate(params: &ModelParams, obs: &Observable, nsamples: usize, seed: u64) -> Result<Estimate> {
    let lat = Lattice::new(params)?;
    obs.validate(&lat)?;
    if obs.kind.is_pair() {
        return estimate_pair(&lat, obs, nsamples, seed);
    }
    let (a, r) = single_constraints(obs);
    let partition = obs.kind == Kind::Partition;
    let draws = stats::map_samples(nsamples, seed, |_, rng| -> Result<(f64, f64)> {
        let arr = sample_arrivals_with(&lat, rng);
        let den = labels::count_compatible(&lat, &arr, &SourceSet::empty())? as f64;
        let num = if partition {
            den
        } else {
            labels::count_compatible_with_r_constraints(&lat, &arr, &a, &r)? as f64
        };
        Ok((num, if partition { 1.0 } else { den }))
    });
    let (num, den) = unzip(draws)?;
    Ok(finish(ratio_jackknife(&num, &den)?, 1.0, nsamples, seed, obs))
}

fn unzip(draws: Vec<Result<(f64, f64)>>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut num = Vec::with_capacity(draws.len());
    let mut den = Vec::with_capacity(draws.len());
    for d in draws {
        let (a, b) = d?;
        num.push(a);
        den.push(b);
    }
    Ok((num, den))
}

fn estimate_pair(lat: &Lattice, obs: &Observable, nsamples: usize, seed: u64) -> Result<Estimate> {
    pair_cap(lat)?;
    let (problem, sign) = truncated_problem(obs)?;
    let r = pair_ratio(lat, nsamples, seed, |a1, a2| Ok(problem.count(lat, a1, a2)? as f64))?;
    Ok(finish(r, sign, nsamples, seed, obs))
}

fn pair_ratio(
    lat: &Lattice,
    nsamples: usize,
    seed: u64,
    num: impl Fn(&Arrivals, &Arrivals) -> Result<f64> + Sync,
) -> Result<stats::Ratio> {
    let draws = stats::map_samples(nsamples, seed, |_, rng| -> Result<(f64, f64)> {
        let a1 = sample_arrivals_with(lat, rng);
        let a2 = sample_arrivals_with(lat, rng);
        let w1 = labels::count_compatible(lat, &a1, &SourceSet::empty())? as f64;
        let w2 = labels::count_compatible(lat, &a2, &SourceSet::empty())? as f64;
        Ok((num(&a1, &a2)?, w1 * w2))
    });
    let (num, den) = unzip(draws)?;
    ratio_jackknife(&num, &den)
}

/// Truncated two-point function by its switching form; `trunc_zx` carries
/// its leading minus sign.
pub fn estimate_truncated_switch(
    params: &ModelParams,
    kind: Kind,
    u: Point,
    v: Point,
    nsamples: usize,
    seed: u64,
) -> Result<Estimate> {
    if !matches!(kind, Kind::TruncZz | Kind::TruncXx | Kind::TruncZx) {
        return Err(Error::InvalidObservable(format!(
            "{kind} is not a truncated two-point kind"
        )));
    }
    estimate(params, &Observable::new(kind, vec![u, v])?, nsamples, seed)
}

/// `<Sx_u ; Sx_v>` as `E[#[(r,l)_u,(r,l)_v] - #[(r,l)_u,(l,r)_v]] / Z^2`.
pub fn estimate_difference_form_xx(
    params: &ModelParams,
    u: Point,
    v: Point,
    nsamples: usize,
    seed: u64,
) -> Result<Estimate> {
    let lat = Lattice::new(params)?;
    let obs = Observable::new(Kind::TruncXx, vec![u, v])?;
    obs.validate(&lat)?;
    pair_cap(&lat)?;
    let plus = PairProblem {
        g: vec![u, v],
        side: xx_plus(u, v),
        test: always(),
    };
    let minus = PairProblem {
        g: vec![u, v],
        side: xx_minus(u, v),
        test: always(),
    };
    let r = pair_ratio(&lat, nsamples, seed, |a1, a2| {
        Ok(plus.count(&lat, a1, a2)? as f64 - minus.count(&lat, a1, a2)? as f64)
    })?;
    let mut e = finish(r, 1.0, nsamples, seed, &obs);
    e.observable = "trunc_xx_difference".into();
    Ok(e)
}

/// `<s_0 ; s_w s_z>`.
pub fn estimate_triple(
    params: &ModelParams,
    o: Point,
    w: Point,
    z: Point,
    nsamples: usize,
    seed: u64,
) -> Result<Estimate> {
    estimate(params, &Observable::new(Kind::Triple, vec![o, w, z])?, nsamples, seed)
}

/// `<s_u ; prod_q Sx_{v_q}>`, nonpositive.
pub fn estimate_crossmany(
    params: &ModelParams,
    u: Point,
    vlist: &[Point],
    nsamples: usize,
    seed: u64,
) -> Result<Estimate> {
    let mut points = vec![u];
    points.extend_from_slice(vlist);
    estimate(params, &Observable::new(Kind::Crossmany, points)?, nsamples, seed)
}

// ---------------------------------------------------------------------------
// Monotonicity and conditional expectations

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub low: f64,
    pub low_stderr: f64,
    pub high: f64,
    pub high_stderr: f64,
    pub difference: f64,
    pub stderr: f64,
    pub pass: bool,
}

fn magnetization_under(
    lat: &Lattice,
    profile: &RateProfile,
    u: Point,
    nsamples: usize,
    seed: u64,
) -> Result<stats::Ratio> {
    let a = SourceSet::new([u]);
    let draws = stats::map_samples(nsamples, seed, |_, rng| -> Result<(f64, f64)> {
        let arr = sample_inhomogeneous_with(lat, profile, rng);
        let num = labels::count_compatible(lat, &arr, &a)? as f64;
        let den = labels::count_compatible(lat, &arr, &SourceSet::empty())? as f64;
        Ok((num, den))
    });
    let (num, den) = unzip(draws)?;
    ratio_jackknife(&num, &den)
}

/// `M_u` under two ordered rate profiles; passes when the larger rates do
/// not give a smaller magnetization beyond three standard errors.
pub fn monotonicity_check(
    params: &ModelParams,
    low: &RateProfile,
    high: &RateProfile,
    u: Point,
    nsamples: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    let lat = Lattice::new(params)?;
    low.validate(&lat)?;
    high.validate(&lat)?;
    if !low.le(high) {
        return Err(Error::InvalidParams(
            "low profile exceeds high profile somewhere".into(),
        ));
    }
    let lo = magnetization_under(&lat, low, u, nsamples, derive_seed(seed, 1))?;
    let hi = magnetization_under(&lat, high, u, nsamples, derive_seed(seed, 2))?;
    let difference = hi.mean - lo.mean;
    let stderr = lo.stderr.hypot(hi.stderr);
    Ok(MonotonicityReport {
        low: lo.mean,
        low_stderr: lo.stderr,
        high: hi.mean,
        high_stderr: hi.stderr,
        difference,
        stderr,
        pass: difference >= -3.0 * stderr,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondExpReport {
    /// `E[reduced count sourced at u, r at the v list]` under reduced rates.
    pub left: f64,
    /// `M(rho) * E[reduced count, r at the v list]` under reduced rates.
    pub right: f64,
    pub magnetization: f64,
    pub difference: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Compares the sourced reduced count against `M(rho)` times the unsourced
/// one, both sampled with the flips across the region boundary suppressed.
pub fn condexp_check(
    params: &ModelParams,
    region: &Region,
    u: Point,
    vlist: &[Point],
    nsamples: usize,
    seed: u64,
) -> Result<CondExpReport> {
    let lat = Lattice::new(params)?;
    if region.contains(u.site, u.time) {
        return Err(Error::InvalidObservable("u must lie outside the region".into()));
    }
    let m = estimate(
        params,
        &Observable::new(Kind::Sz, vec![u])?,
        nsamples,
        derive_seed(seed, 1),
    )?;
    let profile = crate::pointprocess::reduced_rates(&lat, region);
    let a = SourceSet::new([u]);
    let draws = stats::map_samples(nsamples, derive_seed(seed, 2), |_, rng| -> Result<(f64, f64)> {
        let arr = sample_inhomogeneous_with(&lat, &profile, rng);
        let x = labels::count_reduced(&lat, &arr, region, &a, vlist)? as f64;
        let y = labels::count_reduced(&lat, &arr, region, &SourceSet::empty(), vlist)? as f64;
        Ok((x, y))
    });
    let (xs, ys) = unzip(draws)?;
    let d: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x - m.mean * y).collect();
    let (dm, ds) = mean_stderr(&d);
    let (ym, _) = mean_stderr(&ys);
    let (xm, _) = mean_stderr(&xs);
    let stderr = ds.hypot(ym * m.stderr);
    Ok(CondExpReport {
        left: xm,
        right: m.mean * ym,
        magnetization: m.mean,
        difference: dm,
        stderr,
        pass: dm <= 3.0 * stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointprocess::{sample_arrivals, Segment};
    use crate::stats::sample_rng;
    use rand::Rng;

    fn chain(n: usize, beta: f64) -> (ModelParams, Lattice) {
        let p = ModelParams::chain(n, beta, 0.5, 0.6, 0.4);
        let lat = Lattice::new(&p).unwrap();
        (p, lat)
    }

    /// Small random combined configuration and distinct points that avoid it.
    fn random_instance(lat: &Lattice, seed: u64, npoints: usize) -> (CombinedArrivals, Vec<Point>) {
        let mut rng = sample_rng(seed, 0);
        loop {
            let a1 = sample_arrivals_with(lat, &mut rng);
            let a2 = sample_arrivals_with(lat, &mut rng);
            let Ok(c) = combine(&a1, &a2) else { continue };
            if c.count_eta() + c.count_n() > 9 {
                continue;
            }
            let points: Vec<Point> = (0..npoints)
                .map(|_| Point::new(rng.random_range(0..lat.volume()), rng.random::<f64>() * lat.beta()))
                .collect();
            return (c, points);
        }
    }

    #[test]
    fn shortcut_matches_literal_enumeration() {
        let (_, lat) = chain(3, 1.0);
        for seed in 0..40 {
            for variant in Variant::ALL {
                let n = if variant == Variant::Crossmany {
                    3
                } else {
                    variant.arity()
                };
                let (c, mut pts) = random_instance(&lat, seed, n);
                if variant == Variant::Crossmany {
                    pts[1..].sort_by(|a, b| a.time.total_cmp(&b.time));
                }
                let fast = switching_identity_check(&lat, &c, &pts, variant).unwrap();
                let slow = switching_identity_check_literal(&lat, &c, &pts, variant).unwrap();
                assert_eq!(fast, slow, "seed {seed} variant {}", variant.name());
            }
        }
    }

    #[test]
    fn identities_hold_on_random_configurations() {
        let lat = Lattice::new(&ModelParams::chain(3, 1.2, 1.2, 1.0, 0.5)).unwrap();
        let mut nonzero = [0usize; 5];
        for seed in 100..160 {
            for (vi, variant) in Variant::ALL.into_iter().enumerate() {
                let n = if variant == Variant::Crossmany {
                    3
                } else {
                    variant.arity()
                };
                let (c, mut pts) = random_instance(&lat, seed, n);
                pts[1..].sort_by(|a, b| a.time.total_cmp(&b.time));
                let r = switching_identity_check(&lat, &c, &pts, variant).unwrap();
                assert!(r.holds(), "seed {seed} variant {}: {r:?}", variant.name());
                nonzero[vi] += (r.lhs > 0) as usize;
            }
        }
        // xx needs odd flip parity at both sources; its coverage is checked on
        // parity-conditioned instances in `verify`.
        let xx = Variant::ALL.iter().position(|&v| v == Variant::Xx).unwrap();
        assert!(
            nonzero.iter().enumerate().all(|(i, &k)| i == xx || k > 5),
            "{nonzero:?}"
        );
    }

    #[test]
    fn empty_configuration_parity() {
        let (_, lat) = chain(3, 1.0);
        let c = combine(&Arrivals::empty(&lat), &Arrivals::empty(&lat)).unwrap();
        let distinct = [Point::new(0, 0.2), Point::new(1, 0.6)];
        let same = [Point::new(0, 0.2), Point::new(0, 0.6)];
        for pts in [distinct, same] {
            let r = switching_identity_check(&lat, &c, &pts, Variant::Zz).unwrap();
            assert_eq!(r, IdentityCounts { lhs: 0, rhs: 0 });
        }
    }

    #[test]
    fn kinds_round_trip_and_arity() {
        for k in Kind::ALL {
            assert_eq!(k.name().parse::<Kind>().unwrap(), k);
        }
        assert!(Observable::new(Kind::Sz, vec![]).is_err());
        let u = Point::new(0, 0.1);
        assert!(Observable::new(Kind::TruncZx, vec![u, u]).is_err());
        assert!(Observable::new(Kind::Szsz, vec![u, u]).is_ok());
        let pts = parse_points("0:0.25;2:0.5").unwrap();
        assert_eq!(pts, vec![Point::new(0, 0.25), Point::new(2, 0.5)]);
        assert_eq!(format_points(&pts), "0:0.25;2:0.5");
    }

    #[test]
    fn decoupled_site_magnetization() {
        let p = ModelParams::chain(1, 1.0, 0.5, 0.0, 0.0);
        let e = estimate(
            &p,
            &Observable::new(Kind::Sz, vec![Point::new(0, 0.3)]).unwrap(),
            20_000,
            3,
        )
        .unwrap();
        let exact = 0.5f64.tanh();
        assert!((e.mean - exact).abs() < 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn zero_field_magnetization_vanishes() {
        let p = ModelParams::chain(2, 1.0, 0.0, 0.5, 0.4);
        let e = estimate(
            &p,
            &Observable::new(Kind::Sz, vec![Point::new(0, 0.3)]).unwrap(),
            5_000,
            4,
        )
        .unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let (p, _) = chain(2, 1.0);
        let obs = Observable::new(Kind::TruncZz, vec![Point::new(0, 0.1), Point::new(1, 0.4)]).unwrap();
        let a = estimate(&p, &obs, 300, 9).unwrap();
        let b = estimate(&p, &obs, 300, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reduced_count_without_region_is_plain_count() {
        let (p, lat) = chain(3, 1.0);
        let region = Region::new(vec![], &lat).unwrap();
        for seed in 0..50 {
            let arr = sample_arrivals(&p, seed).unwrap();
            let a = SourceSet::empty();
            let r = [Point::new(1, 0.123456)];
            assert_eq!(
                labels::count_reduced(&lat, &arr, &region, &a, &r).unwrap(),
                labels::count_compatible_with_r_constraints(&lat, &arr, &a, &r).unwrap()
            );
        }
    }

    #[test]
    fn reduced_count_frees_covered_circles() {
        let (_, lat) = chain(3, 1.0);
        let arr = Arrivals::empty(&lat);
        let full = Region::new(vec![Segment::full(1, 1.0)], &lat).unwrap();
        // covered circle contributes nothing, the other two contribute 2 each
        assert_eq!(
            labels::count_reduced(&lat, &arr, &full, &SourceSet::empty(), &[]).unwrap(),
            4
        );
        let part = Region::new(
            vec![Segment {
                site: 1,
                start: 0.2,
                end: 0.5,
            }],
            &lat,
        )
        .unwrap();
        // the open arc (0.5, 0.2) has two free labels; a source there adds a jump but no parity rule
        let a = SourceSet::new([Point::new(1, 0.7)]);
        assert_eq!(labels::count_reduced(&lat, &arr, &part, &a, &[]).unwrap(), 8);
        let r = [Point::new(1, 0.6), Point::new(1, 0.8)];
        assert_eq!(labels::count_reduced(&lat, &arr, &part, &a, &r).unwrap(), 0);
    }

    #[test]
    fn csv_appends_header_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("est.csv");
        let e = Estimate {
            mean: 0.1,
            stderr: 0.01,
            nsamples: 10,
            seed: 1,
            observable: "sz".into(),
            points: "0:0.1".into(),
        };
        append_csv(&path, std::slice::from_ref(&e), "abc").unwrap();
        append_csv(&path, &[e], "abc").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("observable,points,mean,stderr,nsamples,seed,params_hash"));
    }
}
