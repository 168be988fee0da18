//! Empirical Orlicz norms `‖X‖_s = inf{ν : E exp(|X/ν|^s) ≤ e}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::summary::RunningStats;
use super::SampleSet;
use crate::error::{domain, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
    pub std_err: f64,
    /// `2 ν̂ - mean(ν̂*)`.
    pub bias_corrected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrliczEstimate {
    pub s: f64,
    pub nu_hat: f64,
    pub n: usize,
    pub bracket: (f64, f64),
    /// Relative width of the final bisection interval.
    pub tolerance: f64,
    pub bootstrap: Option<Bootstrap>,
}

impl OrliczEstimate {
    /// The bias-corrected value when a bootstrap was run, else `ν̂`.
    pub fn corrected(&self) -> f64 {
        self.bootstrap.as_ref().map_or(self.nu_hat, |b| b.bias_corrected)
    }

    pub fn std_err(&self) -> f64 {
        self.bootstrap.as_ref().map_or(0.0, |b| b.std_err)
    }
}

/// `ln mean exp(|x/ν|^s)`, evaluated as a log-sum-exp.
pub fn log_orlicz_moment(values: &[f64], s: f64, nu: f64) -> f64 {
    let terms = values.iter().map(|x| (x.abs() / nu).powf(s));
    let top = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.map(|t| (t - top).exp()).sum();
    top + sum.ln() - (values.len() as f64).ln()
}

fn check_exponent(s: f64) -> Result<()> {
    if !(s >= 1.0) || !s.is_finite() {
        return domain(format!("Orlicz exponent must be finite and >= 1, got {s}"));
    }
    Ok(())
}

fn solve(values: &[f64], s: f64, tol: f64) -> (f64, (f64, f64)) {
    let n = values.len() as f64;
    let max = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return (0.0, (0.0, 0.0));
    }
    if values.iter().all(|x| x.abs() == max) {
        return (max, (max, max));
    }
    let excess = |nu: f64| log_orlicz_moment(values, s, nu) - 1.0;
    let mut lo = max / (10.0 * n).ln().powf(1.0 / s);
    let mut hi = max * n.powf(1.0 / s);
    while excess(lo) < 0.0 {
        lo *= 0.5;
    }
    while excess(hi) > 0.0 {
        hi *= 2.0;
    }
    let bracket = (lo, hi);
    while hi / lo - 1.0 > tol {
        let mid = (lo * hi).sqrt();
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ((lo * hi).sqrt(), bracket)
}

/// Solves `mean exp(|X/ν|^s) = e` by bisection in `ln ν`.
pub fn orlicz_norm(samples: &SampleSet, s: f64) -> Result<OrliczEstimate> {
    check_exponent(s)?;
    let (nu_hat, bracket) = solve(&samples.values, s, DEFAULT_TOLERANCE);
    Ok(OrliczEstimate { s, nu_hat, n: samples.values.len(), bracket, tolerance: DEFAULT_TOLERANCE, bootstrap: None })
}

/// As [`orlicz_norm`], with a resampling standard error and bias correction.
pub fn orlicz_norm_bootstrap(samples: &SampleSet, s: f64, resamples: usize, seed: u64) -> Result<OrliczEstimate> {
    let mut est = orlicz_norm(samples, s)?;
    if resamples < 2 {
        return domain("bootstrap needs at least 2 resamples");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = samples.values.len();
    let mut buf = vec![0.0; n];
    let mut acc = RunningStats::new();
    for _ in 0..resamples {
        for b in buf.iter_mut() {
            *b = samples.values[rng.gen_range(0..n)];
        }
        acc.push(solve(&buf, s, 1e-8).0);
    }
    est.bootstrap = Some(Bootstrap {
        resamples,
        seed,
        std_err: acc.std_dev(),
        bias_corrected: 2.0 * est.nu_hat - acc.mean(),
    });
    Ok(est)
}
