//! Batch front end behind the `rcr` binary.
//!
//! Every subcommand reads an optional JSON [`RunConfig`]; command-line flags
//! override file fields and `RCR_SEED` overrides the file seed. Exit status is
//! 0 when every check passes, 1 when a check fails and 2 on usage errors.

use std::collections::HashSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimators::{self, fmt17, parse_points, Estimate, Kind, Observable, Variant};
use crate::lattice::{Lattice, ModelParams, Point};
use crate::oracle;
use crate::percolation::{self, Cell};
use crate::pointprocess::{reduced_rates, RateProfile, Region, Segment};
use crate::verify;

pub const BUILD_ID: &str = env!("RCR_BUILD_ID");
pub const SEED_ENV: &str = "RCR_SEED";
pub const SCAN_HEADER: [&str; 12] = [
    "h",
    "rho",
    "lambda",
    "beta",
    "observable",
    "points",
    "mean",
    "stderr",
    "nsamples",
    "seed",
    "params_hash",
    "scan_hash",
];

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Estimate,
    Oracle,
    VerifySwitching,
    VerifyLabels,
    VerifyTransform,
    Diffineq,
    Percolation,
    DecayScan,
    Monotonicity,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Mc,
    Oracle,
}

/// Parameter ranges; a missing axis means the single value from `params`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
}

impl Grid {
    pub fn points(&self, base: &ModelParams) -> Vec<ModelParams> {
        let or = |v: &Vec<f64>, x: f64| if v.is_empty() { vec![x] } else { v.clone() };
        oracle::grid(
            base,
            &or(&self.h, base.h),
            &or(&self.rho, base.rho),
            &or(&self.lambda, base.lambda),
            &or(&self.beta, base.beta),
        )
    }
}

/// One run, as read from a JSON document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub params: Option<ModelParams>,
    /// Estimator kind name, e.g. `trunc_zz`.
    pub observable: Option<String>,
    /// `site:time;site:time`.
    pub points: Option<String>,
    pub nsamples: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub instances: Option<usize>,
    pub variants: Option<Vec<String>>,
    pub grid: Option<Grid>,
    pub delta: Option<f64>,
    /// `slot:site-slot:site;...`.
    pub pairs: Option<String>,
    pub distances: Option<Vec<usize>>,
    pub rho_high: Option<f64>,
    pub region: Option<Vec<Segment>>,
    pub method: Option<Method>,
}

#[derive(Parser, Debug)]
#[command(
    name = "rcr",
    version,
    about = "Random current representation experiments for the transverse-field Ising model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    /// Print a machine-readable summary instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Monte Carlo estimate of an observable.
    Estimate(Opts),
    /// Exact value of an observable by diagonalisation.
    Oracle(Opts),
    /// Switching identities on random combined configurations.
    VerifySwitching(Opts),
    /// Label counting against brute force.
    VerifyLabels(Opts),
    /// Laws of the path transformation.
    VerifyTransform(Opts),
    /// Differential inequalities over a parameter grid.
    Diffineq(Opts),
    /// Passage-time bound experiment.
    Percolation(Opts),
    /// Decay fit of exact truncated correlations.
    DecayScan(Opts),
    /// Magnetization under increased ground rates.
    Monotonicity(Opts),
    /// An estimate or oracle value over a parameter grid, resumable.
    Scan(Opts),
}

#[derive(Args, Debug, Default, Clone)]
pub struct Opts {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub observable: Option<String>,
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long)]
    pub nsamples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub h_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub rho_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub beta_values: Option<Vec<f64>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<usize>>,
    #[arg(long)]
    pub rho_high: Option<f64>,
    /// `site:start:end;...`
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
}

fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub command: Command,
    pub params: ModelParams,
    pub seed: u64,
    pub seed_recorded: bool,
    pub cfg: RunConfig,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| cfg_err("config", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| cfg_err("config", e.to_string()))
}

fn parse_region(s: &str) -> Result<Vec<Segment>> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let f: Vec<&str> = t.trim().split(':').collect();
            let bad = || cfg_err("region", format!("bad segment `{t}`, expected site:start:end"));
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(Segment {
                site: f[0].parse().map_err(|_| bad())?,
                start: f[1].parse().map_err(|_| bad())?,
                end: f[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn parse_pairs(s: &str) -> Result<Vec<(Cell, Cell)>> {
    let cell = |t: &str| -> Option<Cell> {
        let (a, b) = t.trim().split_once(':')?;
        Some(Cell::new(a.parse().ok()?, b.parse().ok()?))
    };
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (p, q) = t
                .split_once('-')
                .ok_or_else(|| cfg_err("pairs", format!("bad pair `{t}`")))?;
            match (cell(p), cell(q)) {
                (Some(p), Some(q)) => Ok((p, q)),
                _ => Err(cfg_err(
                    "pairs",
                    format!("bad pair `{t}`, expected slot:site-slot:site"),
                )),
            }
        })
        .collect()
}

/// Merges file, environment and flags; validates the parameters.
pub fn resolve(command: Command, opts: &Opts, env_seed: Option<String>) -> Result<Resolved> {
    let mut cfg = match &opts.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = cfg.command {
        if c != command {
            return Err(cfg_err(
                "command",
                format!("config is for {c:?}, invoked as {command:?}"),
            ));
        }
    }
    let mut params = match cfg.params.clone() {
        Some(p) => p,
        None => ModelParams::nearest_neighbour(opts.d.unwrap_or(1), opts.n.unwrap_or(3), 1.0, 1.0, 0.4, 0.5, 0.3),
    };
    if cfg.params.is_some() {
        if let Some(d) = opts.d {
            params.d = d;
        }
        if let Some(n) = opts.n {
            params.n = n;
        }
    }
    macro_rules! over {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    over!(params.beta, opts.beta);
    over!(params.h, opts.h);
    over!(params.rho, opts.rho);
    over!(params.lambda, opts.lambda);
    params.validate().map_err(|e| {
        let msg = e.to_string();
        let field = if msg.contains("coupling") {
            "params.couplings"
        } else {
            "params"
        };
        cfg_err(field, msg)
    })?;
    cfg.params = Some(params.clone());

    macro_rules! over_opt {
        ($field:ident) => {
            if opts.$field.is_some() {
                cfg.$field = opts.$field.clone();
            }
        };
    }
    over_opt!(observable);
    over_opt!(points);
    over_opt!(nsamples);
    over_opt!(output);
    over_opt!(instances);
    over_opt!(variants);
    over_opt!(delta);
    over_opt!(pairs);
    over_opt!(distances);
    over_opt!(rho_high);
    over_opt!(method);
    if let Some(r) = &opts.region {
        cfg.region = Some(parse_region(r)?);
    }
    let axes = [&opts.h_values, &opts.rho_values, &opts.lambda_values, &opts.beta_values];
    if axes.iter().any(|a| a.is_some()) {
        let mut g = cfg.grid.take().unwrap_or_default();
        over!(g.h, opts.h_values);
        over!(g.rho, opts.rho_values);
        over!(g.lambda, opts.lambda_values);
        over!(g.beta, opts.beta_values);
        cfg.grid = Some(g);
    }

    let env_seed = match env_seed {
        Some(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|_| cfg_err(SEED_ENV, format!("`{s}` is not an unsigned integer")))?,
        ),
        None => None,
    };
    let (seed, seed_recorded) = match opts.seed.or(env_seed).or(cfg.seed) {
        Some(s) => (s, false),
        None => (rand::random::<u64>(), true),
    };
    cfg.seed = Some(seed);
    cfg.command = Some(command);
    Ok(Resolved {
        command,
        params,
        seed,
        seed_recorded,
        cfg,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub command: String,
    pub params_hash: String,
    pub seed: u64,
    pub build_id: &'static str,
    pub output: Option<PathBuf>,
    pub checks: Vec<Check>,
    pub result: Value,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

fn observable(cfg: &RunConfig) -> Result<Observable> {
    let name = cfg
        .observable
        .as_deref()
        .ok_or_else(|| cfg_err("observable", "required"))?;
    let kind: Kind = name
        .parse()
        .map_err(|_| cfg_err("observable", format!("unknown observable `{name}`")))?;
    let points = match &cfg.points {
        Some(s) => parse_points(s).map_err(|e| cfg_err("points", e.to_string()))?,
        None => vec![],
    };
    Observable::new(kind, points).map_err(|e| cfg_err("points", e.to_string()))
}

fn check_observable(lat: &Lattice, obs: &Observable) -> Result<()> {
    obs.validate(lat).map_err(|e| cfg_err("points", e.to_string()))
}

/// Rejects appending to a CSV whose rows carry another hash in `column`.
pub fn ensure_hash(path: &Path, column: &str, hash: &str) -> Result<()> {
    if !path.exists() || std::fs::metadata(path)?.len() == 0 {
        return Ok(());
    }
    let mut r = csv::Reader::from_path(path)?;
    let idx = r
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| cfg_err("output", format!("{} has no {column} column", path.display())))?;
    for rec in r.records() {
        let rec = rec?;
        if rec.get(idx) != Some(hash) {
            return Err(cfg_err(
                "output",
                format!(
                    "{} holds rows for {column} {:?}, this run is {hash}",
                    path.display(),
                    rec.get(idx).unwrap_or("")
                ),
            ));
        }
    }
    Ok(())
}

fn run_estimate(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let obs = observable(&r.cfg)?;
    let lat = Lattice::new(&r.params)?;
    check_observable(&lat, &obs)?;
    let n = r.cfg.nsamples.unwrap_or(10_000);
    let e = estimators::estimate(&r.params, &obs, n, r.seed)?;
    if let Some(out) = &r.cfg.output {
        let hash = r.params.hash();
        ensure_hash(out, "params_hash", &hash)?;
        estimators::append_csv(out, std::slice::from_ref(&e), &hash)?;
    }
    Ok((vec![], serde_json::to_value(&e)?))
}

fn run_oracle(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let obs = observable(&r.cfg)?;
    check_observable(&Lattice::new(&r.params)?, &obs)?;
    let value = oracle::observable_value(&r.params, &obs)?;
    if let Some(out) = &r.cfg.output {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["observable", "points", "value", "params_hash"])?;
        w.write_record([
            obs.kind.name().to_string(),
            obs.points_string(),
            fmt17(value),
            r.params.hash(),
        ])?;
        w.flush()?;
    }
    Ok((
        vec![],
        json!({ "observable": obs.kind.name(), "points": obs.points_string(), "value": value }),
    ))
}

fn variants(cfg: &RunConfig) -> Result<Vec<Variant>> {
    match &cfg.variants {
        None => Ok(Variant::ALL.to_vec()),
        Some(v) => v
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| cfg_err("variants", format!("unknown variant `{s}`")))
            })
            .collect(),
    }
}

fn run_verify_switching(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let vs = variants(&r.cfg)?;
    let n = r.cfg.instances.unwrap_or(500);
    let report = verify::check_switching(n, r.seed, &vs)?;
    if let Some(out) = &r.cfg.output {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["instance", "variant", "lhs", "rhs"])?;
        for row in &report.rows {
            w.write_record([
                row.instance.to_string(),
                row.variant.to_string(),
                row.lhs.to_string(),
                row.rhs.to_string(),
            ])?;
        }
        w.flush()?;
    }
    let checks = vs
        .iter()
        .map(|&v| {
            let rows: Vec<_> = report.rows.iter().filter(|x| x.variant == v.name()).collect();
            let bad = rows.iter().filter(|x| x.lhs != x.rhs).count();
            Check::new(
                format!("switching_{}", v.name()),
                bad == 0,
                format!(
                    "{} instances, {} nonzero, {bad} mismatches",
                    rows.len(),
                    report.nonzero(v)
                ),
            )
        })
        .collect();
    Ok((checks, json!({ "instances": n, "rows": report.rows })))
}

fn run_verify_labels(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let n = r.cfg.instances.unwrap_or(1000);
    let rep = verify::check_label_counting(n, r.seed)?;
    let check = Check::new(
        "label_counting",
        rep.pass(),
        format!(
            "{} instances, {} nonzero, {} mismatches",
            rep.instances,
            rep.nonzero,
            rep.mismatches.len()
        ),
    );
    Ok((vec![check], serde_json::to_value(&rep)?))
}

fn run_verify_transform(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let n = r.cfg.instances.unwrap_or(1000);
    let rep = verify::check_transform_laws(n, r.seed)?;
    let checks = rep
        .laws()
        .iter()
        .map(|(name, fails)| Check::new(*name, fails.is_empty(), format!("{} failures of {n}", fails.len())))
        .collect();
    Ok((checks, serde_json::to_value(&rep)?))
}

pub const DEFAULT_GRID: [f64; 3] = [0.2, 0.5, 1.0];

fn run_diffineq(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let grid = r.cfg.grid.clone().unwrap_or(Grid {
        h: DEFAULT_GRID.to_vec(),
        rho: DEFAULT_GRID.to_vec(),
        lambda: DEFAULT_GRID.to_vec(),
        beta: vec![],
    });
    let rep = oracle::diffineq_report(&grid.points(&r.params))?;
    if let Some(out) = &r.cfg.output {
        rep.write_csv(out)?;
    }
    let worst = |f: fn(&oracle::DiffIneqRow) -> f64| rep.rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::new(
            "slack1",
            rep.rows.iter().all(|x| x.slack1 >= -oracle::SLACK_TOLERANCE),
            format!("min {:.3e}", worst(|x| x.slack1)),
        ),
        Check::new(
            "slack2a",
            rep.rows.iter().all(|x| x.slack2a >= -oracle::SLACK_TOLERANCE),
            format!("min {:.3e}", worst(|x| x.slack2a)),
        ),
        Check::new(
            "slack2b",
            rep.rows.iter().all(|x| x.slack2b >= -oracle::SLACK_TOLERANCE),
            format!("min {:.3e}", worst(|x| x.slack2b)),
        ),
    ];
    Ok((checks, serde_json::to_value(&rep)?))
}

fn default_pairs(params: &ModelParams) -> Vec<(Cell, Cell)> {
    let far = (params.n / 2).clamp(1, 6);
    (1..=far)
        .map(|j| {
            let mut coords = vec![0; params.d];
            coords[0] = j;
            let site = coords.iter().rev().fold(0, |acc, &c| acc * params.n + c);
            (Cell::new(0, 0), Cell::new(0, site))
        })
        .collect()
}

fn run_percolation(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let delta = r.cfg.delta.unwrap_or(percolation::DEFAULT_DELTA);
    percolation::slot_count(r.params.beta, delta).map_err(|e| cfg_err("delta", e.to_string()))?;
    let pairs = match &r.cfg.pairs {
        Some(s) => parse_pairs(s)?,
        None => default_pairs(&r.params),
    };
    let n = r.cfg.nsamples.unwrap_or(10_000);
    let rep = percolation::percbound_experiment(&r.params, delta, &pairs, n, r.seed)?;
    if let Some(out) = &r.cfg.output {
        rep.write_csv(out)?;
    }
    let check = if r.params.lambda == 0.0 {
        let hits: u64 = rep.rows.iter().map(|x| x.hits).sum();
        Check::new("zero_without_marks", hits == 0, format!("{hits} hits"))
    } else {
        match rep.slope() {
            Some(s) => Check::new("negative_slope", s < 0.0, format!("slope {s:.4}")),
            None => Check::new("negative_slope", false, "fewer than two positive frequencies"),
        }
    };
    Ok((vec![check], serde_json::to_value(&rep)?))
}

fn run_decay_scan(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    if r.params.d != 1 {
        return Err(cfg_err("params.d", "decay-scan runs on chains"));
    }
    let ds = r
        .cfg
        .distances
        .clone()
        .unwrap_or_else(|| (1..=r.params.n / 2).collect());
    if ds.iter().any(|&d| d == 0 || d >= r.params.n) {
        return Err(cfg_err("distances", "distances must lie in 1..N"));
    }
    let o = oracle::Oracle::new(&r.params)?;
    let data: Vec<(f64, f64)> = ds
        .iter()
        .map(|&d| (d as f64, o.truncated_zz_equal_time(0, d)))
        .collect();
    if let Some(out) = &r.cfg.output {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["distance", "trunc_zz", "params_hash"])?;
        for (d, v) in &data {
            w.write_record([(*d as usize).to_string(), fmt17(*v), r.params.hash()])?;
        }
        w.flush()?;
    }
    let fit = percolation::decay_fit(&data)?;
    let checks = vec![
        Check::new("c1_positive", fit.c1 > 0.0, format!("c1 {:.4}", fit.c1)),
        Check::new("r2_above_0.9", fit.r2 > 0.9, format!("r2 {:.4}", fit.r2)),
    ];
    Ok((checks, json!({ "values": data, "fit": fit })))
}

fn run_monotonicity(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let rho_high = r.cfg.rho_high.unwrap_or(2.0 * r.params.rho);
    if !(rho_high >= r.params.rho) {
        return Err(cfg_err("rho_high", "must be at least rho"));
    }
    let u = match &r.cfg.points {
        Some(s) => *parse_points(s)?
            .first()
            .ok_or_else(|| cfg_err("points", "need one point"))?,
        None => Point::new(0, 0.5 * r.params.beta),
    };
    let lat_lo = Lattice::new(&r.params)?;
    let lat_hi = Lattice::new(&r.params.with_fields(r.params.h, rho_high, r.params.lambda))?;
    let (low, high) = match &r.cfg.region {
        Some(segs) => {
            let region = Region::new(segs.clone(), &lat_lo).map_err(|e| cfg_err("region", e.to_string()))?;
            (reduced_rates(&lat_lo, &region), reduced_rates(&lat_hi, &region))
        }
        None => (RateProfile::homogeneous(&lat_lo), RateProfile::homogeneous(&lat_hi)),
    };
    let n = r.cfg.nsamples.unwrap_or(100_000);
    let rep = estimators::monotonicity_check(&r.params, &low, &high, u, n, r.seed)?;
    if let Some(out) = &r.cfg.output {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record([
            "rho_low",
            "rho_high",
            "m_low",
            "m_low_stderr",
            "m_high",
            "m_high_stderr",
            "difference",
            "stderr",
            "pass",
        ])?;
        w.write_record([
            fmt17(r.params.rho),
            fmt17(rho_high),
            fmt17(rep.low),
            fmt17(rep.low_stderr),
            fmt17(rep.high),
            fmt17(rep.high_stderr),
            fmt17(rep.difference),
            fmt17(rep.stderr),
            rep.pass.to_string(),
        ])?;
        w.flush()?;
    }
    let check = Check::new(
        "monotone_in_rho",
        rep.pass,
        format!(
            "M({rho_high}) - M({}) = {:.5} +- {:.5}",
            r.params.rho, rep.difference, rep.stderr
        ),
    );
    Ok((vec![check], serde_json::to_value(rep)?))
}

/// Hash of everything that determines scan rows, excluding the output path.
fn scan_hash(r: &Resolved) -> String {
    use sha2::{Digest, Sha256};
    let mut cfg = r.cfg.clone();
    cfg.output = None;
    let digest = Sha256::digest(serde_json::to_string(&cfg).expect("config serializes").as_bytes());
    hex::encode(&digest[..8])
}

/// Params hashes of rows already present, after checking they belong to this scan.
fn completed_rows(path: &Path, hash: &str) -> Result<HashSet<String>> {
    let mut done = HashSet::new();
    if !path.exists() || std::fs::metadata(path)?.len() == 0 {
        return Ok(done);
    }
    ensure_hash(path, "scan_hash", hash)?;
    let mut rd = csv::Reader::from_path(path)?;
    let idx = rd
        .headers()?
        .iter()
        .position(|h| h == "params_hash")
        .ok_or_else(|| cfg_err("output", "no params_hash column"))?;
    for rec in rd.records() {
        done.insert(rec?.get(idx).unwrap_or_default().to_string());
    }
    Ok(done)
}

/// Evaluates the observable at every grid point, one CSV row per point.
/// Points whose params hash is already in the output file are skipped.
pub fn scan(r: &Resolved) -> Result<(Vec<Check>, Value)> {
    let obs = observable(&r.cfg)?;
    let grid = r.cfg.grid.clone().ok_or_else(|| cfg_err("grid", "required for scan"))?;
    for (name, axis) in [
        ("grid.h", &grid.h),
        ("grid.rho", &grid.rho),
        ("grid.lambda", &grid.lambda),
        ("grid.beta", &grid.beta),
    ] {
        if axis.iter().any(|x| !x.is_finite()) {
            return Err(cfg_err(name, "values must be finite"));
        }
    }
    let points = grid.points(&r.params);
    let method = r.cfg.method.unwrap_or_default();
    let n = r.cfg.nsamples.unwrap_or(10_000);
    let shash = scan_hash(r);
    let done = match &r.cfg.output {
        Some(out) => completed_rows(out, &shash)?,
        None => HashSet::new(),
    };
    let mut fresh = Vec::new();
    let mut skipped = 0;
    for p in &points {
        p.validate().map_err(|e| cfg_err("grid", e.to_string()))?;
        let phash = p.hash();
        if done.contains(&phash) {
            skipped += 1;
            continue;
        }
        check_observable(&Lattice::new(p)?, &obs)?;
        let e = match method {
            Method::Mc => estimators::estimate(p, &obs, n, r.seed)?,
            Method::Oracle => Estimate {
                mean: oracle::observable_value(p, &obs)?,
                stderr: 0.0,
                nsamples: 0,
                seed: r.seed,
                observable: obs.kind.name().into(),
                points: obs.points_string(),
            },
        };
        let row = vec![
            fmt17(p.h),
            fmt17(p.rho),
            fmt17(p.lambda),
            fmt17(p.beta),
            e.observable.clone(),
            e.points.clone(),
            fmt17(e.mean),
            fmt17(e.stderr),
            e.nsamples.to_string(),
            e.seed.to_string(),
            phash,
            shash.clone(),
        ];
        if let Some(out) = &r.cfg.output {
            append_row(out, &row)?;
        }
        fresh.push(row);
    }
    Ok((
        vec![],
        json!({ "points": points.len(), "computed": fresh.len(), "skipped": skipped, "rows": fresh }),
    ))
}

/// Appends one row, writing the header first when the file is new.
fn append_row(path: &Path, row: &[String]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(SCAN_HEADER)?;
    }
    w.write_record(row)?;
    w.flush()?;
    Ok(())
}

/// Runs a resolved configuration.
pub fn run(r: &Resolved, is_scan: bool) -> Result<Outcome> {
    let (checks, result) = if is_scan {
        scan(r)?
    } else {
        match r.command {
            Command::Estimate => run_estimate(r)?,
            Command::Oracle => run_oracle(r)?,
            Command::VerifySwitching => run_verify_switching(r)?,
            Command::VerifyLabels => run_verify_labels(r)?,
            Command::VerifyTransform => run_verify_transform(r)?,
            Command::Diffineq => run_diffineq(r)?,
            Command::Percolation => run_percolation(r)?,
            Command::DecayScan => run_decay_scan(r)?,
            Command::Monotonicity => run_monotonicity(r)?,
        }
    };
    Ok(Outcome {
        command: if is_scan {
            "scan".into()
        } else {
            format!("{:?}", r.command)
        },
        params_hash: r.params.hash(),
        seed: r.seed,
        build_id: BUILD_ID,
        output: r.cfg.output.clone(),
        checks,
        result,
    })
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_text(o: &Outcome, seed_recorded: bool) {
    emit(&format!(
        "command {} params {} seed {} build {}",
        o.command, o.params_hash, o.seed, o.build_id
    ));
    if seed_recorded {
        emit(&format!("seed was drawn at random; rerun with --seed {}", o.seed));
    }
    if o.checks.is_empty() {
        emit(&serde_json::to_string_pretty(&o.result).unwrap_or_default());
    }
    for c in &o.checks {
        emit(&format!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    if let Some(p) = &o.output {
        emit(&format!("wrote {}", p.display()));
    }
}

fn usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config { .. }
            | Error::InvalidParams(_)
            | Error::InvalidObservable(_)
            | Error::NonIntegralSlots(_)
            | Error::OverlappingSegments(_)
    )
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            return EXIT_USAGE;
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let (command, opts, is_scan) = match &cli.command {
        Sub::Estimate(o) => (Command::Estimate, o, false),
        Sub::Oracle(o) => (Command::Oracle, o, false),
        Sub::VerifySwitching(o) => (Command::VerifySwitching, o, false),
        Sub::VerifyLabels(o) => (Command::VerifyLabels, o, false),
        Sub::VerifyTransform(o) => (Command::VerifyTransform, o, false),
        Sub::Diffineq(o) => (Command::Diffineq, o, false),
        Sub::Percolation(o) => (Command::Percolation, o, false),
        Sub::DecayScan(o) => (Command::DecayScan, o, false),
        Sub::Monotonicity(o) => (Command::Monotonicity, o, false),
        Sub::Scan(o) => (Command::Estimate, o, true),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let resolved = if is_scan {
        // A scan config may name the command it was written for; ignore it.
        scan_resolve(opts, env_seed)
    } else {
        resolve(command, opts, env_seed)
    };
    let outcome = resolved.and_then(|r| run(&r, is_scan).map(|o| (o, r.seed_recorded)));
    match outcome {
        Ok((o, recorded)) => {
            if cli.json {
                emit(&serde_json::to_string_pretty(&o).unwrap_or_default());
            } else {
                print_text(&o, recorded);
            }
            o.exit_code()
        }
        Err(e) => {
            if cli.json {
                emit(&json!({ "error": e.to_string(), "usage": usage_error(&e) }).to_string());
            }
            eprintln!("error: {e}");
            if usage_error(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
    }
}

fn scan_resolve(opts: &Opts, env_seed: Option<String>) -> Result<Resolved> {
    let mut o = opts.clone();
    let cfg = match &opts.config {
        Some(p) => Some(load_config(p)?),
        None => None,
    };
    let command = cfg.as_ref().and_then(|c| c.command).unwrap_or(Command::Estimate);
    if !matches!(command, Command::Estimate | Command::Oracle) {
        return Err(cfg_err("command", "scan evaluates estimate or oracle"));
    }
    if command == Command::Oracle && o.method.is_none() {
        o.method = Some(Method::Oracle);
    }
    resolve(command, &o, env_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> Opts {
        Opts::default()
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"params":{"d":1,"N":4,"beta":1.0,"h":0.1,"rho":0.2,"lambda":0.3,"couplings":[{"displacement":[1],"J":1.0},{"displacement":[-1],"J":1.0}]},"seed":5,"nsamples":10}"#).unwrap();
        let mut o = opts();
        o.config = Some(p.clone());
        o.h = Some(0.7);
        let r = resolve(Command::Estimate, &o, None).unwrap();
        assert_eq!((r.params.n, r.params.h, r.params.rho, r.seed), (4, 0.7, 0.2, 5));
        let r = resolve(Command::Estimate, &o, Some("9".into())).unwrap();
        assert_eq!(r.seed, 9);
        o.seed = Some(11);
        assert_eq!(resolve(Command::Estimate, &o, Some("9".into())).unwrap().seed, 11);
    }

    #[test]
    fn bad_couplings_name_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"params":{"d":1,"N":4,"beta":1.0,"h":0.1,"rho":0.2,"lambda":0.3,"couplings":[{"displacement":[1,0],"J":1.0}]}}"#).unwrap();
        let mut o = opts();
        o.config = Some(p);
        match resolve(Command::Estimate, &o, None) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "params.couplings"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"nsample": 3}"#).unwrap();
        let mut o = opts();
        o.config = Some(p);
        let e = resolve(Command::Estimate, &o, None).unwrap_err();
        assert!(e.to_string().contains("nsample"), "{e}");
    }

    #[test]
    fn bad_env_seed() {
        assert!(matches!(
            resolve(Command::Estimate, &opts(), Some("x".into())),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn random_seed_recorded() {
        let r = resolve(Command::Estimate, &opts(), None).unwrap();
        assert!(r.seed_recorded);
        assert_eq!(r.cfg.seed, Some(r.seed));
    }

    #[test]
    fn pairs_and_regions_parse() {
        let p = parse_pairs("0:0-0:3; 2:1-5:1").unwrap();
        assert_eq!(
            p,
            vec![(Cell::new(0, 0), Cell::new(0, 3)), (Cell::new(2, 1), Cell::new(5, 1))]
        );
        assert!(parse_pairs("0:0").is_err());
        assert_eq!(parse_region("1:0.2:0.5").unwrap()[0].site, 1);
        assert!(parse_region("1:0.2").is_err());
    }
}
