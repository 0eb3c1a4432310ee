//! Discretised space-time site percolation driven by the combined marks,
//! first-passage times, and exponential decay fits.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::fmt17;
use crate::lattice::{Lattice, ModelParams};
use crate::pointprocess::CombinedArrivals;
use crate::stats::{self, linear_fit, wilson_interval, LinearFit};

pub const PERCOLATION_HEADER: [&str; 5] = ["pair_id", "d_delta", "frequency", "ci_low", "ci_high"];
pub const DEFAULT_DELTA: f64 = 0.1;

/// A cell of the discretised space-time: time slot `[slot δ, (slot + 1) δ)` on `site`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub slot: usize,
    pub site: usize,
}

impl Cell {
    pub fn new(slot: usize, site: usize) -> Self {
        Cell { slot, site }
    }
}

/// `X_δ` on every cell: `0` where a combined mark falls in the cell, `δ` elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteField {
    pub delta: f64,
    pub slots: usize,
    pub sites: usize,
    /// `open[slot * sites + site]` is true when the value is `0`.
    open: Vec<bool>,
    neighbours: Vec<Vec<usize>>,
}

pub fn slot_count(beta: f64, delta: f64) -> Result<usize> {
    let k = beta / delta;
    let r = k.round();
    if !(delta > 0.0) || r < 1.0 || (k - r).abs() > 1e-9 * r {
        return Err(Error::NonIntegralSlots(k));
    }
    Ok(r as usize)
}

fn site_neighbours(lat: &Lattice) -> Vec<Vec<usize>> {
    (0..lat.volume())
        .map(|s| {
            let mut out: Vec<usize> = lat.incident(s).iter().filter_map(|&(_, p)| p).collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect()
}

impl SiteField {
    /// Field from per-site combined mark times.
    pub fn from_marks(lat: &Lattice, marks: &[Vec<f64>], delta: f64) -> Result<Self> {
        let slots = slot_count(lat.beta(), delta)?;
        let sites = lat.volume();
        let mut open = vec![false; slots * sites];
        for (site, ts) in marks.iter().enumerate() {
            for &t in ts {
                let k = ((t / delta).floor() as usize).min(slots - 1);
                open[k * sites + site] = true;
            }
        }
        Ok(SiteField {
            delta,
            slots,
            sites,
            open,
            neighbours: site_neighbours(lat),
        })
    }

    pub fn index(&self, c: Cell) -> usize {
        c.slot * self.sites + c.site
    }

    pub fn cell(&self, i: usize) -> Cell {
        Cell::new(i / self.sites, i % self.sites)
    }

    pub fn value(&self, c: Cell) -> f64 {
        if self.open[self.index(c)] {
            0.0
        } else {
            self.delta
        }
    }

    pub fn set_open(&mut self, c: Cell, open: bool) {
        let i = self.index(c);
        self.open[i] = open;
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    /// Same site in the neighbouring slots (cyclically), and lattice
    /// neighbours in the same slot.
    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        let c = self.cell(i);
        let mut out = Vec::new();
        if self.slots > 1 {
            out.push(self.index(Cell::new((c.slot + 1) % self.slots, c.site)));
            let back = self.index(Cell::new((c.slot + self.slots - 1) % self.slots, c.site));
            if !out.contains(&back) {
                out.push(back);
            }
        }
        for &s in &self.neighbours[c.site] {
            out.push(self.index(Cell::new(c.slot, s)));
        }
        out
    }

    /// Number of `δ`-valued cells on a cheapest path from `from` to every
    /// cell, both endpoints included (0-1 BFS).
    fn closed_counts(&self, from: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let w = |i: usize| (!self.open[i]) as usize;
        dist[from] = w(from);
        let mut dq = VecDeque::from([from]);
        while let Some(x) = dq.pop_front() {
            for y in self.neighbours(x) {
                let d = dist[x] + w(y);
                if d < dist[y] {
                    dist[y] = d;
                    if w(y) == 0 {
                        dq.push_front(y);
                    } else {
                        dq.push_back(y);
                    }
                }
            }
        }
        dist
    }

    /// Hop count plus one from `from` to every cell.
    fn point_counts(&self, from: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        dist[from] = 1;
        let mut q = VecDeque::from([from]);
        while let Some(x) = q.pop_front() {
            for y in self.neighbours(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        dist
    }
}

pub fn discretize_marks(c: &CombinedArrivals, lat: &Lattice, delta: f64) -> Result<SiteField> {
    let marks: Vec<Vec<f64>> = c.n.iter().map(|l| l.iter().map(|m| m.time).collect()).collect();
    SiteField::from_marks(lat, &marks, delta)
}

/// `T_δ(p, q)`: least total value along a path, endpoints included.
pub fn passage_time(f: &SiteField, p: Cell, q: Cell) -> f64 {
    f.delta * f.closed_counts(f.index(p))[f.index(q)] as f64
}

/// `d_δ(p, q)`: least number of cells on a path, endpoints included.
pub fn graph_distance(f: &SiteField, p: Cell, q: Cell) -> usize {
    f.point_counts(f.index(p))[f.index(q)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercRow {
    pub pair_id: usize,
    pub d_delta: usize,
    pub hits: u64,
    pub nsamples: u64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercReport {
    pub rows: Vec<PercRow>,
    /// Fit of `log frequency` against `d_δ` over rows with positive frequency.
    pub fit: Option<(f64, f64, f64)>,
}

impl PercReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.0)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(PERCOLATION_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.pair_id.to_string(),
                r.d_delta.to_string(),
                fmt17(r.frequency),
                fmt17(r.ci_low),
                fmt17(r.ci_high),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cells drawn with the combined mark rate `2 lambda`.
pub fn sample_field<R: Rng>(lat: &Lattice, delta: f64, rng: &mut R) -> Result<SiteField> {
    let beta = lat.beta();
    let mean = 2.0 * lat.params().lambda * beta;
    let marks: Vec<Vec<f64>> = (0..lat.volume())
        .map(|_| {
            if mean <= 0.0 {
                return Vec::new();
            }
            let k = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
            (0..k).map(|_| rng.random::<f64>() * beta).collect()
        })
        .collect();
    SiteField::from_marks(lat, &marks, delta)
}

/// Empirical `P(T_δ(p, q) < (δ / 2) d_δ(p, q))` per pair with 95% Wilson
/// intervals, and a log-linear fit of the positive frequencies.
pub fn percbound_experiment(
    params: &ModelParams,
    delta: f64,
    pairs: &[(Cell, Cell)],
    nsamples: usize,
    seed: u64,
) -> Result<PercReport> {
    let lat = Lattice::new(params)?;
    let slots = slot_count(lat.beta(), delta)?;
    for (p, q) in pairs {
        for c in [p, q] {
            if c.slot >= slots || c.site >= lat.volume() {
                return Err(Error::InvalidParams(format!(
                    "cell {c:?} outside the discretised torus"
                )));
            }
        }
        if p == q {
            return Err(Error::InvalidParams("pair endpoints must differ".into()));
        }
    }
    let empty = SiteField::from_marks(&lat, &vec![Vec::new(); lat.volume()], delta)?;
    let dists: Vec<usize> = pairs.iter().map(|&(p, q)| graph_distance(&empty, p, q)).collect();
    let draws = stats::map_samples(nsamples, seed, |_, rng| -> Result<Vec<bool>> {
        let f = sample_field(&lat, delta, rng)?;
        Ok(pairs
            .iter()
            .zip(&dists)
            .map(|(&(p, q), &d)| {
                let closed = f.closed_counts(f.index(p))[f.index(q)];
                // T < (δ/2) d  <=>  2 * closed < d
                2 * closed < d
            })
            .collect())
    });
    let mut hits = vec![0u64; pairs.len()];
    for d in draws {
        for (h, b) in hits.iter_mut().zip(d?) {
            *h += b as u64;
        }
    }
    let n = nsamples as u64;
    let rows: Vec<PercRow> = hits
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let (lo, hi) = wilson_interval(k, n, 1.96);
            PercRow {
                pair_id: i,
                d_delta: dists[i],
                hits: k,
                nsamples: n,
                frequency: k as f64 / n as f64,
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();
    let pos: Vec<&PercRow> = rows.iter().filter(|r| r.frequency > 0.0).collect();
    let fit = if pos.len() >= 2 {
        let x: Vec<f64> = pos.iter().map(|r| r.d_delta as f64).collect();
        let y: Vec<f64> = pos.iter().map(|r| r.frequency.ln()).collect();
        let f = linear_fit(&x, &y);
        Some((f.slope, f.intercept, f.r2))
    } else {
        None
    };
    Ok(PercReport { rows, fit })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c1: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least squares of `log value` against distance over the positive values.
pub fn decay_fit(pairs: &[(f64, f64)]) -> Result<DecayFit> {
    let pos: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(_, v)| v > 0.0).collect();
    if pos.len() < 3 {
        return Err(Error::TooFewPoints(pos.len()));
    }
    let x: Vec<f64> = pos.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pos.iter().map(|p| p.1.ln()).collect();
    let LinearFit { slope, intercept, r2 } = linear_fit(&x, &y);
    Ok(DecayFit {
        c1: -slope,
        intercept,
        r2,
        points: pos.len(),
    })
}
