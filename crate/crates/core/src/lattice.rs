//! Model parameters, torus geometry and space-time points.
//!
//! Sites of the torus `T_N = (Z/NZ)^d` are stored as flat indices in
//! `0..N^d` (row-major in the coordinates). Imaginary time lives on the
//! half-open circle `[0, beta)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One entry of the translation-invariant coupling map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub displacement: Vec<i64>,
    #[serde(rename = "J")]
    pub j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub h: f64,
    pub rho: f64,
    pub lambda: f64,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
}

impl ModelParams {
    /// Nearest-neighbour chain (`d = 1`, `J = 1` on `±1`).
    pub fn chain(n: usize, beta: f64, h: f64, rho: f64, lambda: f64) -> Self {
        Self::nearest_neighbour(1, n, 1.0, beta, h, rho, lambda)
    }

    pub fn nearest_neighbour(d: usize, n: usize, j: f64, beta: f64, h: f64, rho: f64, lambda: f64) -> Self {
        let mut couplings = Vec::with_capacity(2 * d);
        for axis in 0..d {
            for sign in [1i64, -1] {
                let mut displacement = vec![0; d];
                displacement[axis] = sign;
                couplings.push(Coupling { displacement, j });
            }
        }
        ModelParams {
            d,
            n,
            beta,
            h,
            rho,
            lambda,
            couplings,
        }
    }

    pub fn with_fields(&self, h: f64, rho: f64, lambda: f64) -> Self {
        ModelParams {
            h,
            rho,
            lambda,
            ..self.clone()
        }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        ModelParams { beta, ..self.clone() }
    }

    pub fn volume(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.n == 0 {
            return bad("N must be positive".into());
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be finite and positive, got {}", self.beta));
        }
        for (name, x) in [("h", self.h), ("rho", self.rho), ("lambda", self.lambda)] {
            if !(x.is_finite() && x >= 0.0) {
                return bad(format!("{name} must be finite and nonnegative, got {x}"));
            }
        }
        let map = self.coupling_map()?;
        for (v, &j) in &map {
            let neg: Vec<i64> = v.iter().map(|x| -x).collect();
            let jn = map.get(&neg).copied().unwrap_or(0.0);
            if jn != j {
                return bad(format!("couplings not symmetric: J({v:?}) = {j} but J({neg:?}) = {jn}"));
            }
        }
        Ok(())
    }

    /// Displacement -> total J, merging repeated entries.
    fn coupling_map(&self) -> Result<BTreeMap<Vec<i64>, f64>> {
        let mut map = BTreeMap::new();
        for c in &self.couplings {
            if c.displacement.len() != self.d {
                return Err(Error::InvalidParams(format!(
                    "coupling displacement {:?} has length {}, expected d = {}",
                    c.displacement,
                    c.displacement.len(),
                    self.d
                )));
            }
            if c.displacement.iter().all(|&x| x == 0) {
                return Err(Error::InvalidParams("zero displacement in couplings".into()));
            }
            if !(c.j.is_finite() && c.j >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "coupling J must be nonnegative, got {}",
                    c.j
                )));
            }
            *map.entry(c.displacement.clone()).or_insert(0.0) += c.j;
        }
        Ok(map)
    }

    /// Short stable hash of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("params serialize");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Sum of the coupling constants over the coupling support.
pub fn jbar(params: &ModelParams) -> f64 {
    params.couplings.iter().map(|c| c.j).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub site: usize,
    pub time: f64,
}

impl Point {
    pub fn new(site: usize, time: f64) -> Self {
        Point { site, time }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GhostOrPoint {
    Ghost,
    Point(Point),
}

impl From<Point> for GhostOrPoint {
    fn from(p: Point) -> Self {
        GhostOrPoint::Point(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Edge {
    /// Unordered pair `a < b`. `j` is the summed coupling over every
    /// displacement taking `a` to `b` (more than one on tiny tori).
    Ground {
        a: usize,
        b: usize,
        j: f64,
        displacement: Vec<i64>,
    },
    Ghost {
        site: usize,
    },
}

impl Edge {
    pub fn is_ghost(&self) -> bool {
        matches!(self, Edge::Ghost { .. })
    }

    pub fn sites(&self) -> (usize, Option<usize>) {
        match *self {
            Edge::Ground { a, b, .. } => (a, Some(b)),
            Edge::Ghost { site } => (site, None),
        }
    }
}

/// Precomputed torus geometry for one parameter set.
#[derive(Clone, Debug)]
pub struct Lattice {
    params: ModelParams,
    volume: usize,
    edges: Vec<Edge>,
    n_ground: usize,
    /// Per site: `(edge index, partner site)`; partner is `None` for the ghost edge.
    incidence: Vec<Vec<(usize, Option<usize>)>>,
}

impl Lattice {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let volume = params.volume();
        let map = params.coupling_map()?;
        let mut pairs: BTreeMap<(usize, usize), (f64, Vec<i64>)> = BTreeMap::new();
        for i in 0..volume {
            let ci = coords_of(i, params.n, params.d);
            for (v, &j) in &map {
                if j <= 0.0 {
                    continue;
                }
                let cj: Vec<usize> = ci
                    .iter()
                    .zip(v)
                    .map(|(&c, &dv)| (c as i64 + dv).rem_euclid(params.n as i64) as usize)
                    .collect();
                let k = index_of(&cj, params.n);
                if k <= i {
                    continue;
                }
                let entry = pairs.entry((i, k)).or_insert((0.0, v.clone()));
                entry.0 += j;
            }
        }
        let mut edges: Vec<Edge> = pairs
            .into_iter()
            .map(|((a, b), (j, displacement))| Edge::Ground { a, b, j, displacement })
            .collect();
        let n_ground = edges.len();
        edges.extend((0..volume).map(|site| Edge::Ghost { site }));

        let mut incidence = vec![Vec::new(); volume];
        for (e, edge) in edges.iter().enumerate() {
            match *edge {
                Edge::Ground { a, b, .. } => {
                    incidence[a].push((e, Some(b)));
                    incidence[b].push((e, Some(a)));
                }
                Edge::Ghost { site } => incidence[site].push((e, None)),
            }
        }

        let lattice = Lattice {
            params: params.clone(),
            volume,
            edges,
            n_ground,
            incidence,
        };
        if params.rho > 0.0 && volume > 1 && !lattice.is_irreducible() {
            log::warn!("coupling graph does not connect the torus");
        }
        Ok(lattice)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_ground_edges(&self) -> usize {
        self.n_ground
    }

    pub fn ghost_edge(&self, site: usize) -> usize {
        self.n_ground + site
    }

    pub fn incident(&self, site: usize) -> &[(usize, Option<usize>)] {
        &self.incidence[site]
    }

    /// Poisson intensity of flips on an edge.
    pub fn edge_rate(&self, e: usize) -> f64 {
        match self.edges[e] {
            Edge::Ground { j, .. } => self.params.rho * j,
            Edge::Ghost { .. } => self.params.h,
        }
    }

    /// Total intensity of ground flips, `rho * sum_e J_e`.
    pub fn total_ground_rate(&self) -> f64 {
        self.edges[..self.n_ground]
            .iter()
            .map(|e| match e {
                Edge::Ground { j, .. } => self.params.rho * j,
                Edge::Ghost { .. } => 0.0,
            })
            .sum()
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        coords_of(site, self.params.n, self.params.d)
    }

    pub fn site_index(&self, coords: &[usize]) -> usize {
        index_of(coords, self.params.n)
    }

    /// l1 distance on the torus.
    pub fn site_distance(&self, a: usize, b: usize) -> usize {
        let n = self.params.n;
        self.coords(a)
            .into_iter()
            .zip(self.coords(b))
            .map(|(x, y)| {
                let dx = x.abs_diff(y);
                dx.min(n - dx)
            })
            .sum()
    }

    fn is_irreducible(&self) -> bool {
        let mut seen = vec![false; self.volume];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for &(_, partner) in &self.incidence[s] {
                if let Some(t) = partner {
                    if !seen[t] {
                        seen[t] = true;
                        stack.push(t);
                    }
                }
            }
        }
        seen.into_iter().all(|x| x)
    }
}

fn coords_of(mut site: usize, n: usize, d: usize) -> Vec<usize> {
    let mut c = vec![0; d];
    for k in (0..d).rev() {
        c[k] = site % n;
        site /= n;
    }
    c
}

fn index_of(coords: &[usize], n: usize) -> usize {
    coords.iter().fold(0, |acc, &c| acc * n + c)
}

/// All ground edges and ghost edges of the model.
pub fn edges(params: &ModelParams) -> Result<Vec<Edge>> {
    Ok(Lattice::new(params)?.edges)
}

/// Torus l1 distance plus circular time distance.
///
/// Time is measured around the circle, `min(|t - s|, beta - |t - s|)`.
pub fn spacetime_distance(u: Point, v: Point, lattice: &Lattice) -> f64 {
    let dt = (u.time - v.time).abs();
    let dt = dt.min(lattice.beta() - dt);
    lattice.site_distance(u.site, v.site) as f64 + dt
}
