//! Seeding, ratio estimation with jackknife errors, and small fitting helpers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const JACKKNIFE_BLOCKS: usize = 50;

/// Mixes a master seed and a sample index into an independent 64-bit seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        ^ index
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

/// Evaluates `f(index, rng)` for every sample index; output is in index order
/// regardless of how rayon schedules the work.
pub fn map_samples<T, F>(nsamples: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    (0..nsamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(master, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ratio {
    pub mean: f64,
    pub stderr: f64,
}

/// `mean(num) / mean(den)` with a blocked jackknife error.
pub fn ratio_jackknife(num: &[f64], den: &[f64]) -> Result<Ratio> {
    assert_eq!(num.len(), den.len());
    let n = num.len();
    let total_num: f64 = num.iter().sum();
    let total_den: f64 = den.iter().sum();
    if n == 0 || total_den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let mean = total_num / total_den;
    let blocks = JACKKNIFE_BLOCKS.min(n);
    if blocks < 2 {
        return Ok(Ratio { mean, stderr: f64::NAN });
    }
    let mut leave_out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let lo = b * n / blocks;
        let hi = (b + 1) * n / blocks;
        let bn: f64 = num[lo..hi].iter().sum();
        let bd: f64 = den[lo..hi].iter().sum();
        let d = total_den - bd;
        if d == 0.0 {
            return Err(Error::ZeroDenominator);
        }
        leave_out.push((total_num - bn) / d);
    }
    let avg = leave_out.iter().sum::<f64>() / blocks as f64;
    let var = leave_out.iter().map(|x| (x - avg).powi(2)).sum::<f64>() * (blocks as f64 - 1.0) / blocks as f64;
    Ok(Ratio {
        mean,
        stderr: var.sqrt(),
    })
}

/// Plain sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
///
/// With constant `y` the fit is exact and `r2` is reported as 1.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LinearFit { slope, intercept, r2 }
}
