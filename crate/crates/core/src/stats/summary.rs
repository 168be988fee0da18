//! Running moments, least squares and Kolmogorov–Smirnov statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{domain, Result};

/// Welford accumulation of mean and variance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: u64,
}

impl From<RunningStats> for Estimate {
    fn from(s: RunningStats) -> Self {
        Self { mean: s.mean(), std_err: s.std_err(), n: s.count }
    }
}

impl Estimate {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        values.into_iter().collect::<RunningStats>().into()
    }
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual variance (`n - 2` dof).
    pub slope_std_err: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl LinearFit {
    /// True when the slope is not above zero at the two-standard-error level.
    pub fn no_growth(&self) -> bool {
        self.slope <= 2.0 * self.slope_std_err
    }
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return domain(format!("least squares needs at least 3 paired points, got {} and {}", x.len(), y.len()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return domain("least squares needs at least two distinct abscissae");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - rss / syy };
    let slope_std_err = (rss / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit { slope, intercept, slope_std_err, r_squared, n })
}

/// Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `P(K > t)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn effective_sf(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample test against a continuous distribution.
pub fn ks_one_sample<D: ContinuousCDF<f64, f64>>(samples: &[f64], dist: &D) -> Result<KsResult> {
    if samples.is_empty() {
        return domain("KS test needs samples");
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        let f = dist.cdf(*x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult { statistic: d, p_value: effective_sf(d, n) })
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return domain("KS test needs samples on both sides");
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult { statistic: d, p_value: effective_sf(d, na * nb / (na + nb)) })
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return domain("median of an empty sample");
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::Normal;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| 1e8 + (i as f64 * 0.37).sin()).collect();
        let s: RunningStats = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert_relative_eq!(s.mean(), mean, max_relative = 1e-14);
        assert_relative_eq!(s.variance(), var, max_relative = 1e-8);
        assert_eq!(RunningStats::new().std_err(), 0.0);
    }

    #[test]
    fn std_err_scales_like_root_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Estimate::of((0..2000).map(|_| rng.gen::<f64>()));
        let b = Estimate::of((0..4000).map(|_| rng.gen::<f64>()));
        let ratio = a.std_err / b.std_err;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn ols_recovers_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = ols(&x, &y).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-12);
        assert_relative_eq!(f.intercept, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert!(f.slope_std_err < 1e-12);
        let g = ols(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(g.slope, 0.8, epsilon = 1e-12);
        assert_relative_eq!(g.r_squared, 0.64, epsilon = 1e-12);
        assert_relative_eq!(g.slope_std_err, (1.8 / 2.0 / 5.0f64).sqrt(), epsilon = 1e-12);
        assert!(ols(&x[..2], &y[..2]).is_err());
        assert!(ols(&[1.0; 3], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn kolmogorov_tail() {
        assert_relative_eq!(kolmogorov_sf(1.3581), 0.05, epsilon = 1e-4);
        assert_relative_eq!(kolmogorov_sf(1.6276), 0.01, epsilon = 1e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_accepts_and_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..2000).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        assert!(ks_one_sample(&xs, &n).unwrap().p_value > 0.01);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 0.3).collect();
        assert!(ks_one_sample(&shifted, &n).unwrap().p_value < 1e-6);
        let ys: Vec<f64> = (0..1500).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        assert!(ks_two_sample(&xs, &ys).unwrap().p_value > 0.01);
        assert!(ks_two_sample(&shifted, &ys).unwrap().p_value < 1e-6);
        assert_eq!(ks_two_sample(&xs, &xs).unwrap().statistic, 0.0);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
        assert!(median(&[]).is_err());
    }
}
