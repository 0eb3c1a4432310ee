//! Exact small-system quantum computations by dense diagonalisation.
//!
//! Basis states are bit strings; bit `i` clear means `sigma^z_i = +1`.
//! `-H = sum_e rho J_e s^z_a s^z_b + h sum_i s^z_i + lambda sum_i (1 + s^x_i) / 2`
//! with one term per unordered ground edge.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fmt17, Kind, Observable};
use crate::lattice::{jbar, Edge, Lattice, ModelParams, Point};

pub const MAX_SITES: usize = 12;
pub const FD_STEP: f64 = 1e-4;
pub const QUADRATURE_NODES: usize = 64;
pub const SLACK_TOLERANCE: f64 = 1e-6;

pub const DIFFINEQ_HEADER: [&str; 13] = [
    "h",
    "rho",
    "lambda",
    "beta",
    "N",
    "M",
    "dMdh",
    "dMdrho",
    "dMdlambda",
    "slack1",
    "slack2a",
    "slack2b",
    "pass",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    /// `sigma^z`
    Sz,
    /// `(1 + sigma^x) / 2`
    Sx,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Insertion {
    pub op: Op,
    pub point: Point,
}

impl Insertion {
    pub fn new(op: Op, point: Point) -> Self {
        Insertion { op, point }
    }
}

fn spin(s: usize, i: usize) -> f64 {
    if s >> i & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Ground edges as `(a, b, J_e)`.
fn bonds(lat: &Lattice) -> Vec<(usize, usize, f64)> {
    lat.edges()
        .iter()
        .filter_map(|edge| match edge {
            Edge::Ground { a, b, j, .. } => Some((*a, *b, *j)),
            Edge::Ghost { .. } => None,
        })
        .collect()
}

fn check_size(params: &ModelParams) -> Result<Lattice> {
    let lat = Lattice::new(params)?;
    if lat.volume() > MAX_SITES {
        return Err(Error::DimensionCap {
            sites: lat.volume(),
            cap: MAX_SITES,
        });
    }
    Ok(lat)
}

/// No sign checks on the fields, so finite-difference stencils may step
/// below zero.
fn hamiltonian_from(lat: &Lattice, h: f64, rho: f64, lambda: f64) -> DMatrix<f64> {
    let v = lat.volume();
    let dim = 1usize << v;
    let bonds = bonds(lat);
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        let mut minus_h = 0.0;
        for &(a, b, j) in &bonds {
            minus_h += rho * j * spin(s, a) * spin(s, b);
        }
        for i in 0..v {
            minus_h += h * spin(s, i) + 0.5 * lambda;
            m[(s ^ (1 << i), s)] -= 0.5 * lambda;
        }
        m[(s, s)] -= minus_h;
    }
    m
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<DMatrix<f64>> {
    let lat = check_size(params)?;
    Ok(hamiltonian_from(&lat, params.h, params.rho, params.lambda))
}

/// Diagonalised Hamiltonian with thermal weights.
pub struct Oracle {
    pub params: ModelParams,
    lat: Lattice,
    sites: usize,
    /// Eigenvalues shifted so the smallest is zero.
    energies: DVector<f64>,
    shift: f64,
    vectors: DMatrix<f64>,
    /// `log sum_k exp(-beta E_k)` of the shifted spectrum.
    log_trace: f64,
}

impl Oracle {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let lat = check_size(params)?;
        Ok(Oracle::from_fields(lat, params.clone()))
    }

    /// `params` supplies `beta` and the lattice; its fields are used as is.
    fn from_fields(lat: Lattice, params: ModelParams) -> Self {
        let h = hamiltonian_from(&lat, params.h, params.rho, params.lambda);
        let eig = SymmetricEigen::new(h);
        let shift = eig.eigenvalues.min();
        let energies = eig.eigenvalues.map(|e| e - shift);
        let beta = params.beta;
        let log_trace = energies.iter().map(|e| (-beta * e).exp()).sum::<f64>().ln();
        Oracle {
            sites: lat.volume(),
            params,
            lat,
            energies,
            shift,
            vectors: eig.eigenvectors,
            log_trace,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lat
    }

    fn dim(&self) -> usize {
        1 << self.sites
    }

    /// `log Tr exp(-beta H)`.
    pub fn log_trace(&self) -> f64 {
        self.log_trace - self.params.beta * self.shift
    }

    /// Log of the normalised partition function
    /// `exp(-beta (sum_e rho J_e + V (h + lambda))) Tr exp(-beta H)`.
    pub fn log_partition(&self) -> f64 {
        let p = &self.params;
        let offset = self.lat.total_ground_rate() + self.sites as f64 * (p.h + p.lambda);
        self.log_trace() - p.beta * offset
    }

    fn weights(&self) -> DVector<f64> {
        let beta = self.params.beta;
        self.energies.map(|e| (-beta * e - self.log_trace).exp())
    }

    /// Thermal average of a function of the basis state.
    pub fn diagonal_expectation(&self, f: impl Fn(usize) -> f64) -> f64 {
        let w = self.weights();
        let fs: Vec<f64> = (0..self.dim()).map(f).collect();
        let mut total = 0.0;
        for k in 0..self.dim() {
            let col = self.vectors.column(k);
            let inner: f64 = col.iter().zip(&fs).map(|(u, f)| u * u * f).sum();
            total += w[k] * inner;
        }
        total
    }

    /// An operator in the eigenbasis.
    fn rotate(&self, op: Op, site: usize) -> DMatrix<f64> {
        let dim = self.dim();
        let u = &self.vectors;
        match op {
            Op::Sz => {
                let mut zu = u.clone();
                for s in 0..dim {
                    let z = spin(s, site);
                    zu.row_mut(s).scale_mut(z);
                }
                u.transpose() * zu
            }
            Op::Sx => {
                let mut xu = DMatrix::zeros(dim, dim);
                for s in 0..dim {
                    xu.row_mut(s).copy_from(&u.row(s ^ (1 << site)));
                }
                let mut m = u.transpose() * xu;
                for k in 0..dim {
                    m[(k, k)] += 1.0;
                }
                m * 0.5
            }
        }
    }

    /// Diagonal operator `diag(f(s))` in the eigenbasis.
    fn rotate_diagonal(&self, f: impl Fn(usize) -> f64) -> DMatrix<f64> {
        let mut fu = self.vectors.clone();
        for s in 0..self.dim() {
            fu.row_mut(s).scale_mut(f(s));
        }
        self.vectors.transpose() * fu
    }

    /// `Tr(e^{-(beta - t_k) H} O_k ... e^{-(t_2 - t_1) H} O_1 e^{-t_1 H}) / Tr e^{-beta H}`
    /// for non-decreasing insertion times.
    pub fn ordered_correlation(&self, insertions: &[Insertion]) -> Result<f64> {
        if insertions.windows(2).any(|w| w[0].point.time > w[1].point.time) {
            return Err(Error::UnsortedInsertions);
        }
        let beta = self.params.beta;
        for ins in insertions {
            if !(0.0..beta).contains(&ins.point.time) || ins.point.site >= self.sites {
                return Err(Error::InvalidObservable(format!(
                    "insertion {:?} outside space-time",
                    ins.point
                )));
            }
        }
        if insertions.is_empty() {
            return Ok(1.0);
        }
        let prop = |dt: f64| self.energies.map(|e| (-dt * e).exp());
        // rightmost factor first: e^{-t_1 H}
        let mut acc = DMatrix::from_diagonal(&prop(insertions[0].point.time));
        let mut last = insertions[0].point.time;
        for ins in insertions {
            let dt = ins.point.time - last;
            if dt > 0.0 {
                let d = prop(dt);
                for (r, mut row) in acc.row_iter_mut().enumerate() {
                    row.scale_mut(d[r]);
                }
            }
            acc = self.rotate(ins.op, ins.point.site) * acc;
            last = ins.point.time;
        }
        let d = prop(beta - last);
        let tr: f64 = (0..self.dim()).map(|k| d[k] * acc[(k, k)]).sum();
        Ok(tr / self.log_trace.exp())
    }

    /// Time-ordered expectation; insertions are sorted by time first
    /// (stable, so equal-time insertions keep their given order).
    pub fn expectation(&self, insertions: &[Insertion]) -> Result<f64> {
        let mut sorted = insertions.to_vec();
        sorted.sort_by(|a, b| a.point.time.total_cmp(&b.point.time));
        self.ordered_correlation(&sorted)
    }

    pub fn magnetization(&self) -> f64 {
        self.diagonal_expectation(|s| spin(s, 0))
    }

    /// `<A_u B_v> - <A_u><B_v>`.
    pub fn truncated(&self, a: Op, u: Point, b: Op, v: Point) -> Result<f64> {
        if a != b && u == v {
            return Err(Error::InvalidObservable(
                "mixed truncated correlation needs u != v".into(),
            ));
        }
        let ab = self.expectation(&[Insertion::new(a, u), Insertion::new(b, v)])?;
        let ea = self.expectation(&[Insertion::new(a, u)])?;
        let eb = self.expectation(&[Insertion::new(b, v)])?;
        Ok(ab - ea * eb)
    }

    /// Equal-time `<s^z_i ; s^z_j>` from the diagonal formula.
    pub fn truncated_zz_equal_time(&self, i: usize, j: usize) -> f64 {
        let zz = self.diagonal_expectation(|s| spin(s, i) * spin(s, j));
        let zi = self.diagonal_expectation(|s| spin(s, i));
        let zj = self.diagonal_expectation(|s| spin(s, j));
        zz - zi * zj
    }

    /// `int_0^beta <s^z_0 ; B(t)> dt` by the trapezoid rule, for `B` given in
    /// the eigenbasis.
    fn integrated_response(&self, b: &DMatrix<f64>) -> f64 {
        let beta = self.params.beta;
        let a = self.rotate(Op::Sz, 0);
        let dim = self.dim();
        let z = self.log_trace.exp();
        let ma = self.magnetization();
        let w = self.weights();
        let mb: f64 = (0..dim).map(|k| w[k] * b[(k, k)]).sum();
        let e = &self.energies;
        // <B(t) A(0)> = sum_jk e^{-(beta-t)E_j} B_jk e^{-t E_k} A_kj / Z
        let corr = |t: f64| {
            let mut s = 0.0;
            for j in 0..dim {
                let ej = (-(beta - t) * e[j]).exp();
                for k in 0..dim {
                    s += ej * b[(j, k)] * (-t * e[k]).exp() * a[(k, j)];
                }
            }
            s / z - ma * mb
        };
        let n = QUADRATURE_NODES;
        let h = beta / (n - 1) as f64;
        let mut total = 0.0;
        for m in 0..n {
            let w = if m == 0 || m == n - 1 { 0.5 } else { 1.0 };
            total += w * corr(m as f64 * h);
        }
        total * h
    }

    /// `(dM/dh, dM/drho, dM/dlambda)` from the integrated truncated
    /// correlations.
    pub fn derivatives_by_quadrature(&self) -> Derivatives {
        let v = self.sites;
        let bonds = bonds(&self.lat);
        let bh = self.rotate_diagonal(|s| (0..v).map(|i| spin(s, i)).sum());
        let brho = self.rotate_diagonal(|s| bonds.iter().map(|&(a, b, j)| j * spin(s, a) * spin(s, b)).sum());
        let mut bl = DMatrix::zeros(self.dim(), self.dim());
        for i in 0..v {
            bl += self.rotate(Op::Sx, i);
        }
        Derivatives {
            dh: self.integrated_response(&bh),
            drho: self.integrated_response(&brho),
            dlambda: self.integrated_response(&bl),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    pub dh: f64,
    pub drho: f64,
    pub dlambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub finite_difference: Derivatives,
    pub quadrature: Derivatives,
    /// Largest relative discrepancy between the two.
    pub discrepancy: f64,
}

pub fn partition_function(params: &ModelParams) -> Result<f64> {
    Ok(Oracle::new(params)?.log_partition().exp())
}

pub fn log_partition_function(params: &ModelParams) -> Result<f64> {
    Ok(Oracle::new(params)?.log_partition())
}

pub fn ordered_correlation(params: &ModelParams, insertions: &[Insertion]) -> Result<f64> {
    Oracle::new(params)?.ordered_correlation(insertions)
}

pub fn magnetization(params: &ModelParams) -> Result<f64> {
    Ok(Oracle::new(params)?.magnetization())
}

pub fn truncated(params: &ModelParams, a: Op, u: Point, b: Op, v: Point) -> Result<f64> {
    Oracle::new(params)?.truncated(a, u, b, v)
}

/// Exact value of an estimator observable; `partition` is the normalised
/// partition function the MC partition estimator targets.
pub fn observable_value(params: &ModelParams, obs: &Observable) -> Result<f64> {
    let o = Oracle::new(params)?;
    obs.validate(&o.lat)?;
    let p = &obs.points;
    let ins = |ops: &[(Op, Point)]| -> Vec<Insertion> { ops.iter().map(|&(op, q)| Insertion::new(op, q)).collect() };
    match obs.kind {
        Kind::Partition => Ok(o.log_partition().exp()),
        Kind::Sz => o.expectation(&ins(&[(Op::Sz, p[0])])),
        Kind::Szsz => o.expectation(&ins(&[(Op::Sz, p[0]), (Op::Sz, p[1])])),
        Kind::Sigx => o.expectation(&ins(&[(Op::Sx, p[0])])),
        Kind::Sigxsigx => o.expectation(&ins(&[(Op::Sx, p[0]), (Op::Sx, p[1])])),
        Kind::Szsigx => o.expectation(&ins(&[(Op::Sz, p[0]), (Op::Sx, p[1])])),
        Kind::TruncZz => o.truncated(Op::Sz, p[0], Op::Sz, p[1]),
        Kind::TruncXx => o.truncated(Op::Sx, p[0], Op::Sx, p[1]),
        Kind::TruncZx => o.truncated(Op::Sz, p[0], Op::Sx, p[1]),
        Kind::Triple => {
            let all = o.expectation(&ins(&[(Op::Sz, p[0]), (Op::Sz, p[1]), (Op::Sz, p[2])]))?;
            let pair = o.expectation(&ins(&[(Op::Sz, p[1]), (Op::Sz, p[2])]))?;
            Ok(all - o.expectation(&ins(&[(Op::Sz, p[0])]))? * pair)
        }
        Kind::Crossmany => {
            let xs: Vec<Insertion> = p[1..].iter().map(|&q| Insertion::new(Op::Sx, q)).collect();
            let mut all = xs.clone();
            all.push(Insertion::new(Op::Sz, p[0]));
            Ok(o.expectation(&all)? - o.expectation(&ins(&[(Op::Sz, p[0])]))? * o.expectation(&xs)?)
        }
    }
}

#[derive(Clone, Copy)]
enum Field {
    H,
    Rho,
    Lambda,
}

fn shifted(params: &ModelParams, field: Field, dx: f64) -> ModelParams {
    let (h, r, l) = (params.h, params.rho, params.lambda);
    match field {
        Field::H => params.with_fields(h + dx, r, l),
        Field::Rho => params.with_fields(h, r + dx, l),
        Field::Lambda => params.with_fields(h, r, l + dx),
    }
}

/// Central difference of `M` with step `FD_STEP * max(|x|, 1)` and one
/// Richardson step. Shifted parameters may go slightly negative; the
/// Hamiltonian is still well defined there.
fn fd_derivative(params: &ModelParams, field: Field) -> Result<f64> {
    let x = match field {
        Field::H => params.h,
        Field::Rho => params.rho,
        Field::Lambda => params.lambda,
    };
    let step = FD_STEP * x.abs().max(1.0);
    let lat = check_size(params)?;
    let m =
        |dx: f64| -> Result<f64> { Ok(Oracle::from_fields(lat.clone(), shifted(params, field, dx)).magnetization()) };
    let d = |s: f64| -> Result<f64> { Ok((m(s)? - m(-s)?) / (2.0 * s)) };
    let coarse = d(step)?;
    let fine = d(0.5 * step)?;
    let out = (4.0 * fine - coarse) / 3.0;
    if !out.is_finite() {
        return Err(Error::Numerical("finite difference is not finite".into()));
    }
    Ok(out)
}

pub fn derivatives(params: &ModelParams) -> Result<DerivativeReport> {
    let fd = Derivatives {
        dh: fd_derivative(params, Field::H)?,
        drho: fd_derivative(params, Field::Rho)?,
        dlambda: fd_derivative(params, Field::Lambda)?,
    };
    let q = Oracle::new(params)?.derivatives_by_quadrature();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-12);
    let discrepancy = rel(fd.dh, q.dh)
        .max(rel(fd.drho, q.drho))
        .max(rel(fd.dlambda, q.dlambda));
    Ok(DerivativeReport {
        finite_difference: fd,
        quadrature: q,
        discrepancy,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffIneqRow {
    pub h: f64,
    pub rho: f64,
    pub lambda: f64,
    pub beta: f64,
    pub n: usize,
    pub m: f64,
    pub dmdh: f64,
    pub dmdrho: f64,
    pub dmdlambda: f64,
    pub slack1: f64,
    pub slack2a: f64,
    pub slack2b: f64,
    pub pass: bool,
    /// `h M_h + M^3 - 3 M^2 lambda M_lambda - M`, reported only.
    pub large_beta_proxy: f64,
    pub quadrature_discrepancy: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DiffIneqReport {
    pub rows: Vec<DiffIneqRow>,
}

impl DiffIneqReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(DIFFINEQ_HEADER)?;
        for r in &self.rows {
            w.write_record([
                fmt17(r.h),
                fmt17(r.rho),
                fmt17(r.lambda),
                fmt17(r.beta),
                r.n.to_string(),
                fmt17(r.m),
                fmt17(r.dmdh),
                fmt17(r.dmdrho),
                fmt17(r.dmdlambda),
                fmt17(r.slack1),
                fmt17(r.slack2a),
                fmt17(r.slack2b),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Slacks of the three differential inequalities at one parameter point.
pub fn diffineq_row(params: &ModelParams) -> Result<DiffIneqRow> {
    let m = magnetization(params)?;
    if !(m < 1.0) {
        return Err(Error::Numerical(format!("magnetization {m} is not below 1")));
    }
    let d = derivatives(params)?;
    let (mh, mr, ml) = (
        d.finite_difference.dh,
        d.finite_difference.drho,
        d.finite_difference.dlambda,
    );
    let (h, rho, lambda) = (params.h, params.rho, params.lambda);
    let m2 = m * m;
    let slack1 = h * mh + m * m2 + m2 * rho * mr - 2.0 * lambda * m2 * ml - m;
    let slack2a = m / (1.0 - m2) * mh + ml;
    let slack2b = jbar(params) * m * mh - mr;
    let pass = [slack1, slack2a, slack2b].iter().all(|s| *s >= -SLACK_TOLERANCE);
    Ok(DiffIneqRow {
        h,
        rho,
        lambda,
        beta: params.beta,
        n: params.n,
        m,
        dmdh: mh,
        dmdrho: mr,
        dmdlambda: ml,
        slack1,
        slack2a,
        slack2b,
        pass,
        large_beta_proxy: h * mh + m * m2 - 3.0 * m2 * lambda * ml - m,
        quadrature_discrepancy: d.discrepancy,
    })
}

pub fn diffineq_report(points: &[ModelParams]) -> Result<DiffIneqReport> {
    use rayon::prelude::*;
    let rows = points.par_iter().map(diffineq_row).collect::<Result<Vec<_>>>()?;
    Ok(DiffIneqReport { rows })
}

/// `base` at every `(h, rho, lambda, beta)` of the Cartesian grid.
pub fn grid(base: &ModelParams, hs: &[f64], rhos: &[f64], lambdas: &[f64], betas: &[f64]) -> Vec<ModelParams> {
    let mut out = Vec::new();
    for &beta in betas {
        for &h in hs {
            for &rho in rhos {
                for &lambda in lambdas {
                    out.push(base.with_fields(h, rho, lambda).with_beta(beta));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_spin_hamiltonian() {
        let p = ModelParams::chain(1, 1.0, 0.3, 0.0, 0.8);
        let h = build_hamiltonian(&p).unwrap();
        // -h s^z - lambda (1 + s^x) / 2
        assert_abs_diff_eq!(h[(0, 0)], -0.3 - 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(1, 1)], 0.3 - 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(0, 1)], -0.4, epsilon = 1e-15);
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn classical_limit_is_diagonal() {
        let p = ModelParams::chain(3, 1.0, 0.3, 0.5, 0.0);
        let h = build_hamiltonian(&p).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn partition_closed_forms() {
        let beta = 1.3;
        let h = 0.7;
        let z = partition_function(&ModelParams::chain(1, beta, h, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(z, 1.0 + (-2.0 * beta * h).exp(), epsilon = 1e-12);
        let z0 = partition_function(&ModelParams::chain(3, 1.0, 0.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(z0, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn log_domain_matches_direct() {
        let p = ModelParams::chain(3, 2.0, 0.4, 0.5, 0.3);
        let o = Oracle::new(&p).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let direct: f64 = SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .map(|e| (-2.0 * e).exp())
            .sum();
        assert_abs_diff_eq!(o.log_trace(), direct.ln(), epsilon = 1e-12);
    }

    #[test]
    fn single_spin_magnetization_and_derivative() {
        let (beta, h) = (1.0, 0.5);
        let p = ModelParams::chain(1, beta, h, 0.0, 0.0);
        assert_abs_diff_eq!(magnetization(&p).unwrap(), (beta * h).tanh(), epsilon = 1e-12);
        let d = derivatives(&p).unwrap();
        let exact = beta * (1.0 - (beta * h).tanh().powi(2));
        assert_abs_diff_eq!(d.finite_difference.dh, exact, epsilon = 1e-6);
        assert_abs_diff_eq!(d.quadrature.dh, exact, epsilon = 1e-6);
    }

    #[test]
    fn zero_field_has_zero_magnetization() {
        let m = magnetization(&ModelParams::chain(4, 1.0, 0.0, 0.7, 0.3)).unwrap();
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn time_scaling() {
        let p = ModelParams::chain(3, 1.0, 0.4, 0.5, 0.3);
        for alpha in [0.5, 2.0] {
            let a = magnetization(&p.with_fields(alpha * 0.4, alpha * 0.5, alpha * 0.3)).unwrap();
            let b = magnetization(&p.with_beta(alpha)).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn ordered_correlation_basics() {
        let p = ModelParams::chain(2, 1.0, 0.4, 0.5, 0.3);
        let o = Oracle::new(&p).unwrap();
        assert_eq!(o.ordered_correlation(&[]).unwrap(), 1.0);
        let m = o.magnetization();
        for t in [0.0, 0.3, 0.9] {
            let v = o
                .ordered_correlation(&[Insertion::new(Op::Sz, Point::new(0, t))])
                .unwrap();
            assert_abs_diff_eq!(v, m, epsilon = 1e-12);
        }
        let a = Insertion::new(Op::Sz, Point::new(0, 0.7));
        let b = Insertion::new(Op::Sz, Point::new(1, 0.2));
        assert!(matches!(o.ordered_correlation(&[a, b]), Err(Error::UnsortedInsertions)));
        // global time rotation
        let x = o
            .expectation(&[a, b, Insertion::new(Op::Sx, Point::new(1, 0.5))])
            .unwrap();
        let shift = |i: Insertion| Insertion::new(i.op, Point::new(i.point.site, (i.point.time + 0.25) % 1.0));
        let y = o
            .expectation(&[shift(a), shift(b), shift(Insertion::new(Op::Sx, Point::new(1, 0.5)))])
            .unwrap();
        assert_abs_diff_eq!(x, y, epsilon = 1e-10);
    }

    #[test]
    fn decoupled_truncations_vanish() {
        let p = ModelParams::chain(3, 1.0, 0.4, 0.0, 0.3);
        let o = Oracle::new(&p).unwrap();
        let (u, v) = (Point::new(0, 0.2), Point::new(1, 0.6));
        for (a, b) in [(Op::Sz, Op::Sz), (Op::Sx, Op::Sx), (Op::Sz, Op::Sx)] {
            assert!(o.truncated(a, u, b, v).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_agrees_with_finite_differences() {
        let p = ModelParams::chain(3, 1.0, 0.5, 0.5, 0.5);
        let d = derivatives(&p).unwrap();
        assert!(d.discrepancy < 1e-3, "{d:?}");
        assert!(d.finite_difference.drho >= -1e-8);
        assert!(d.finite_difference.dlambda <= 1e-8);
    }

    #[test]
    fn dimension_cap() {
        let p = ModelParams::chain(13, 1.0, 0.5, 0.5, 0.5);
        assert!(matches!(Oracle::new(&p), Err(Error::DimensionCap { .. })));
    }
}
