//! Poisson processes of flips and marks on the space-time circles, their
//! two-replica combination, and enumeration of splittings.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Edge, Lattice, ModelParams};
use crate::stats;

pub const SPLITTING_CAP: usize = 24;

/// Flip arrivals per edge (indexed as in [`Lattice::edges`]) and marks per site.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Arrivals {
    pub flips: Vec<Vec<f64>>,
    pub marks: Vec<Vec<f64>>,
}

impl Arrivals {
    pub fn empty(lat: &Lattice) -> Self {
        Arrivals {
            flips: vec![Vec::new(); lat.edges().len()],
            marks: vec![Vec::new(); lat.volume()],
        }
    }

    pub fn n_flips(&self) -> usize {
        self.flips.iter().map(Vec::len).sum()
    }

    pub fn n_marks(&self) -> usize {
        self.marks.iter().map(Vec::len).sum()
    }

    /// Checks sortedness, range and global distinctness of all times.
    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        if self.flips.len() != lat.edges().len() || self.marks.len() != lat.volume() {
            return Err(Error::InvalidParams("arrivals do not match the lattice".into()));
        }
        let beta = lat.beta();
        let mut all: Vec<(f64, usize)> = Vec::new();
        for (e, ts) in self.flips.iter().enumerate() {
            let site = lat.edges()[e].sites().0;
            check_times(ts, beta, site)?;
            all.extend(ts.iter().map(|&t| (t, site)));
        }
        for (site, ts) in self.marks.iter().enumerate() {
            check_times(ts, beta, site)?;
            all.extend(ts.iter().map(|&t| (t, site)));
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in all.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::TimeCollision {
                    site: w[1].1,
                    time: w[1].0,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self, lat: &Lattice) -> ArrivalsJson {
        let flips = lat
            .edges()
            .iter()
            .zip(&self.flips)
            .filter(|(_, ts)| !ts.is_empty())
            .map(|(edge, ts)| {
                let (base, displacement) = match edge {
                    Edge::Ground { a, displacement, .. } => (*a, Some(displacement.clone())),
                    Edge::Ghost { site } => (*site, None),
                };
                FlipJson {
                    base: lat.coords(base),
                    displacement,
                    times: ts.iter().map(|t| t.to_string()).collect(),
                }
            })
            .collect();
        let marks = self
            .marks
            .iter()
            .enumerate()
            .filter(|(_, ts)| !ts.is_empty())
            .map(|(s, ts)| MarkJson {
                site: lat.coords(s),
                times: ts.iter().map(|t| t.to_string()).collect(),
            })
            .collect();
        ArrivalsJson { flips, marks }
    }

    pub fn from_json(doc: &ArrivalsJson, lat: &Lattice) -> Result<Self> {
        let mut arr = Arrivals::empty(lat);
        let parse = |ts: &[String]| -> Result<Vec<f64>> {
            ts.iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::InvalidParams(format!("bad time {s:?}: {e}")))
                })
                .collect()
        };
        for f in &doc.flips {
            let base = lat.site_index(&f.base);
            let e = match &f.displacement {
                None => lat.ghost_edge(base),
                Some(v) => lat
                    .edges()
                    .iter()
                    .position(|e| matches!(e, Edge::Ground { a, displacement, .. } if *a == base && displacement == v))
                    .ok_or_else(|| Error::InvalidParams(format!("unknown edge {:?} + {:?}", f.base, v)))?,
            };
            arr.flips[e] = parse(&f.times)?;
        }
        for m in &doc.marks {
            arr.marks[lat.site_index(&m.site)] = parse(&m.times)?;
        }
        arr.validate(lat)?;
        Ok(arr)
    }
}

fn check_times(ts: &[f64], beta: f64, site: usize) -> Result<()> {
    for (k, &t) in ts.iter().enumerate() {
        if !(0.0..beta).contains(&t) {
            return Err(Error::InvalidParams(format!("time {t} outside [0, {beta})")));
        }
        if k > 0 && ts[k - 1] >= t {
            if ts[k - 1] == t {
                return Err(Error::TimeCollision { site, time: t });
            }
            return Err(Error::InvalidParams("arrival times not sorted".into()));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipJson {
    pub base: Vec<usize>,
    /// `None` for the ghost edge of `base`.
    pub displacement: Option<Vec<i64>>,
    pub times: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkJson {
    pub site: Vec<usize>,
    pub times: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalsJson {
    pub flips: Vec<FlipJson>,
    pub marks: Vec<MarkJson>,
}

fn uniform_times<R: Rng>(rng: &mut R, count: usize, beta: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..count)
        .map(|_| loop {
            let t = rng.random::<f64>() * beta;
            if t < beta {
                break t;
            }
        })
        .collect();
    ts.sort_by(f64::total_cmp);
    ts
}

fn poisson_times<R: Rng>(rng: &mut R, rate: f64, beta: f64) -> Vec<f64> {
    let mean = rate * beta;
    if mean <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("finite positive mean").sample(rng) as usize;
    uniform_times(rng, count, beta)
}

/// Draws one configuration from an already seeded generator.
pub fn sample_arrivals_with<R: Rng>(lat: &Lattice, rng: &mut R) -> Arrivals {
    let beta = lat.beta();
    loop {
        let flips = (0..lat.edges().len())
            .map(|e| poisson_times(rng, lat.edge_rate(e), beta))
            .collect();
        let marks = (0..lat.volume())
            .map(|_| poisson_times(rng, lat.params().lambda, beta))
            .collect();
        let arr = Arrivals { flips, marks };
        // exact coincidences have probability zero; redraw if one ever shows up
        if arr.validate(lat).is_ok() {
            return arr;
        }
    }
}

pub fn sample_arrivals(params: &ModelParams, seed: u64) -> Result<Arrivals> {
    let lat = Lattice::new(params)?;
    let mut rng = stats::sample_rng(seed, 0);
    Ok(sample_arrivals_with(&lat, &mut rng))
}

/// Piecewise-constant rate on `[0, beta)`.
///
/// `values[0]` holds on `[0, breakpoints[0])`, `values[k]` on
/// `[breakpoints[k-1], breakpoints[k])`, the last value up to `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseRate {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseRate {
    pub fn constant(v: f64) -> Self {
        PiecewiseRate {
            breakpoints: Vec::new(),
            values: vec![v],
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        self.values[k]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn integral(&self, beta: f64) -> f64 {
        let mut prev = 0.0;
        let mut total = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            let next = self.breakpoints.get(k).copied().unwrap_or(beta);
            total += v * (next - prev);
            prev = next;
        }
        total
    }

    fn validate(&self, beta: f64) -> Result<()> {
        if self.values.len() != self.breakpoints.len() + 1 {
            return Err(Error::InvalidParams(
                "rate profile needs one more value than breakpoints".into(),
            ));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParams("rate profile values must be nonnegative".into()));
        }
        if self.breakpoints.windows(2).any(|w| w[0] >= w[1]) || self.breakpoints.iter().any(|&b| !(b > 0.0 && b < beta))
        {
            return Err(Error::InvalidParams(
                "rate profile breakpoints must be sorted inside (0, beta)".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise `self <= other` on the whole circle.
    pub fn le(&self, other: &PiecewiseRate) -> bool {
        let mut starts = vec![0.0];
        starts.extend(&self.breakpoints);
        starts.extend(&other.breakpoints);
        starts.iter().all(|&t| self.at(t) <= other.at(t))
    }
}

/// Time-dependent ground rates (per ground edge, already including rho and J),
/// plus the homogeneous ghost rate and mark rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    pub ground: Vec<PiecewiseRate>,
    pub h: f64,
    pub lambda: f64,
}

impl RateProfile {
    pub fn homogeneous(lat: &Lattice) -> Self {
        RateProfile {
            ground: (0..lat.n_ground_edges())
                .map(|e| PiecewiseRate::constant(lat.edge_rate(e)))
                .collect(),
            h: lat.params().h,
            lambda: lat.params().lambda,
        }
    }

    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        if self.ground.len() != lat.n_ground_edges() {
            return Err(Error::InvalidParams(
                "rate profile does not match the ground edges".into(),
            ));
        }
        for r in &self.ground {
            r.validate(lat.beta())?;
        }
        Ok(())
    }

    pub fn le(&self, other: &RateProfile) -> bool {
        self.h <= other.h
            && self.lambda <= other.lambda
            && self.ground.len() == other.ground.len()
            && self.ground.iter().zip(&other.ground).all(|(a, b)| a.le(b))
    }
}

/// Draws flips from a time-dependent ground profile by thinning.
pub fn sample_inhomogeneous_with<R: Rng>(lat: &Lattice, profile: &RateProfile, rng: &mut R) -> Arrivals {
    let beta = lat.beta();
    loop {
        let mut flips = Vec::with_capacity(lat.edges().len());
        for rate in &profile.ground {
            let top = rate.max();
            let proposals = poisson_times(rng, top, beta);
            let kept = proposals
                .into_iter()
                .filter(|&t| rng.random::<f64>() * top < rate.at(t))
                .collect();
            flips.push(kept);
        }
        for _ in 0..lat.volume() {
            flips.push(poisson_times(rng, profile.h, beta));
        }
        let marks = (0..lat.volume())
            .map(|_| poisson_times(rng, profile.lambda, beta))
            .collect();
        let arr = Arrivals { flips, marks };
        if arr.validate(lat).is_ok() {
            return arr;
        }
    }
}

pub fn sample_inhomogeneous(params: &ModelParams, profile: &RateProfile, seed: u64) -> Result<Arrivals> {
    let lat = Lattice::new(params)?;
    profile.validate(&lat)?;
    let mut rng = stats::sample_rng(seed, 0);
    Ok(sample_inhomogeneous_with(&lat, profile, &mut rng))
}

/// A half-open arc `[start, end)` of one circle, `0 <= start < end <= beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub site: usize,
    pub start: f64,
    pub end: f64,
}

impl Segment {
    pub fn full(site: usize, beta: f64) -> Self {
        Segment {
            site,
            start: 0.0,
            end: beta,
        }
    }
}

/// Finite union of disjoint half-open segments where rates are reduced.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Region {
    pub segments: Vec<Segment>,
}

impl Region {
    pub fn new(mut segments: Vec<Segment>, lat: &Lattice) -> Result<Self> {
        segments.sort_by(|a, b| (a.site, a.start).partial_cmp(&(b.site, b.start)).expect("finite"));
        for s in &segments {
            if s.site >= lat.volume() || !(0.0 <= s.start && s.start < s.end && s.end <= lat.beta()) {
                return Err(Error::InvalidParams(format!("bad segment {s:?}")));
            }
        }
        for w in segments.windows(2) {
            if w[0].site == w[1].site && w[1].start < w[0].end {
                return Err(Error::OverlappingSegments(w[0].site));
            }
        }
        Ok(Region { segments })
    }

    pub fn contains(&self, site: usize, t: f64) -> bool {
        self.segments
            .iter()
            .any(|s| s.site == site && s.start <= t && t < s.end)
    }

    pub fn on_site(&self, site: usize) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(move |s| s.site == site)
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Ground rates with every flip joining the region to its complement removed.
pub fn reduced_rates(lat: &Lattice, region: &Region) -> RateProfile {
    let beta = lat.beta();
    let mut profile = RateProfile::homogeneous(lat);
    for (e, edge) in lat.edges()[..lat.n_ground_edges()].iter().enumerate() {
        let Edge::Ground { a, b, .. } = *edge else {
            unreachable!()
        };
        let full = lat.edge_rate(e);
        let mut cuts: Vec<f64> = region
            .on_site(a)
            .chain(region.on_site(b))
            .flat_map(|s| [s.start, s.end])
            .filter(|&t| t > 0.0 && t < beta)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut breakpoints = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for k in 0..=cuts.len() {
            let t = if k == 0 { 0.0 } else { cuts[k - 1] };
            let v = if region.contains(a, t) == region.contains(b, t) {
                full
            } else {
                0.0
            };
            if values.last() == Some(&v) {
                continue;
            }
            if k > 0 {
                breakpoints.push(t);
            }
            values.push(v);
        }
        profile.ground[e] = PiecewiseRate { breakpoints, values };
    }
    profile
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Replica {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub time: f64,
    pub replica: Replica,
}

/// Union of two replicas' arrivals, each arrival remembering its replica.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CombinedArrivals {
    pub eta: Vec<Vec<Tagged>>,
    pub n: Vec<Vec<Tagged>>,
}

fn merge(a: &[f64], b: &[f64]) -> Vec<Tagged> {
    let mut out: Vec<Tagged> = a
        .iter()
        .map(|&time| Tagged {
            time,
            replica: Replica::One,
        })
        .chain(b.iter().map(|&time| Tagged {
            time,
            replica: Replica::Two,
        }))
        .collect();
    out.sort_by(|x, y| x.time.total_cmp(&y.time));
    out
}

pub fn combine(r1: &Arrivals, r2: &Arrivals) -> Result<CombinedArrivals> {
    let c = CombinedArrivals {
        eta: r1.flips.iter().zip(&r2.flips).map(|(a, b)| merge(a, b)).collect(),
        n: r1.marks.iter().zip(&r2.marks).map(|(a, b)| merge(a, b)).collect(),
    };
    for (k, list) in c.eta.iter().chain(&c.n).enumerate() {
        for w in list.windows(2) {
            if w[0].time == w[1].time {
                return Err(Error::TimeCollision {
                    site: k,
                    time: w[0].time,
                });
            }
        }
    }
    Ok(c)
}

impl CombinedArrivals {
    pub fn count_eta(&self) -> usize {
        self.eta.iter().map(Vec::len).sum()
    }

    pub fn count_n(&self) -> usize {
        self.n.iter().map(Vec::len).sum()
    }

    fn pick(list: &[Tagged], which: Replica) -> Vec<f64> {
        list.iter().filter(|x| x.replica == which).map(|x| x.time).collect()
    }

    pub fn split(&self) -> (Arrivals, Arrivals) {
        let side = |r| Arrivals {
            flips: self.eta.iter().map(|l| Self::pick(l, r)).collect(),
            marks: self.n.iter().map(|l| Self::pick(l, r)).collect(),
        };
        (side(Replica::One), side(Replica::Two))
    }

    /// The combined configuration with tags forgotten.
    pub fn untagged(&self) -> Arrivals {
        Arrivals {
            flips: self.eta.iter().map(|l| l.iter().map(|x| x.time).collect()).collect(),
            marks: self.n.iter().map(|l| l.iter().map(|x| x.time).collect()).collect(),
        }
    }

    /// Tags every arrival as replica one.
    pub fn from_untagged(arr: &Arrivals) -> Self {
        let tag = |ts: &Vec<f64>| {
            ts.iter()
                .map(|&time| Tagged {
                    time,
                    replica: Replica::One,
                })
                .collect()
        };
        CombinedArrivals {
            eta: arr.flips.iter().map(tag).collect(),
            n: arr.marks.iter().map(tag).collect(),
        }
    }

    /// Retags according to `mask`: bit `k` set sends the `k`-th arrival
    /// (flips in edge order, then marks in site order) to replica two.
    pub fn retag(&self, mask: u64) -> CombinedArrivals {
        let mut k = 0;
        let mut tag = |list: &Vec<Tagged>| -> Vec<Tagged> {
            list.iter()
                .map(|x| {
                    let replica = if mask >> k & 1 == 1 { Replica::Two } else { Replica::One };
                    k += 1;
                    Tagged { time: x.time, replica }
                })
                .collect()
        };
        let eta = self.eta.iter().map(&mut tag).collect();
        let n = self.n.iter().map(&mut tag).collect();
        CombinedArrivals { eta, n }
    }
}

/// All `2^(#eta + #n)` ways of assigning each combined arrival to a replica.
pub fn enumerate_splittings(c: &CombinedArrivals) -> Result<impl Iterator<Item = (Arrivals, Arrivals)> + '_> {
    let total = c.count_eta() + c.count_n();
    if total > SPLITTING_CAP {
        return Err(Error::CapExceeded {
            what: "splittings",
            needed: total,
            cap: SPLITTING_CAP,
        });
    }
    Ok((0..1u64 << total).map(move |mask| c.retag(mask).split()))
}

/// Covariance between the total mark count and the indicator of an empty
/// window, with the standard error of the centred-product mean.
#[derive(Clone, Copy, Debug)]
pub struct FkgReport {
    pub covariance: f64,
    pub stderr: f64,
    pub pass: bool,
}

pub fn fkg_check(params: &ModelParams, window: Segment, nsamples: usize, seed: u64) -> Result<FkgReport> {
    let lat = Lattice::new(params)?;
    let draws = stats::map_samples(nsamples, seed, |_, rng| {
        let arr = sample_arrivals_with(&lat, rng);
        let f = arr.n_marks() as f64;
        let g = arr.marks[window.site]
            .iter()
            .all(|&t| !(window.start <= t && t < window.end)) as u8 as f64;
        (f, g)
    });
    let n = draws.len() as f64;
    let mf = draws.iter().map(|x| x.0).sum::<f64>() / n;
    let mg = draws.iter().map(|x| x.1).sum::<f64>() / n;
    let prods: Vec<f64> = draws.iter().map(|(f, g)| (f - mf) * (g - mg)).collect();
    let (covariance, stderr) = stats::mean_stderr(&prods);
    Ok(FkgReport {
        covariance,
        stderr,
        pass: covariance <= 3.0 * stderr,
    })
}
