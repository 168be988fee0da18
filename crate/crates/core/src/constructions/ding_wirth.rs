//! The greedy scale-by-scale lower-bound construction.
//!
//! Going from the coarsest scale down, each tent of `h_l` is raised to height
//! `l` exactly when the noise integrated over the upper third of the tent's
//! triangle is nonnegative. Since the choice at scale `l` only looks at noise
//! above `h_{≥2l} + 2l/3`, and everything built later stays below that
//! level, the accepted triangles collect a positive expected field gain of
//! order `l` per tent and `L` per scale.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::energy::{self, HeightConfig};
use crate::error::{domain, Result};
use crate::multiscale;
use crate::potential::{self, Potential};
use crate::sum::CompensatedSum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwPeak {
    pub x_hat: usize,
    /// `0` or `l`.
    pub choice: f64,
    pub triangle_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwScale {
    pub l: usize,
    pub peaks: Vec<DwPeak>,
    /// `D(h_l)`.
    pub dirichlet: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwLedger {
    pub system_size: usize,
    /// Coarsest scale first.
    pub scales: Vec<DwScale>,
    pub config: HeightConfig,
    /// `W(h_DW)`.
    pub field_energy: f64,
    /// `D(h_l)/L ≤ 1/2` at every scale.
    pub per_scale_dirichlet_ok: bool,
    /// `sup h_{≤l/2} ≤ 2l/3` at every scale.
    pub nesting_ok: bool,
}

impl DwLedger {
    /// `l,x_hat,choice,triangle_sum` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["l", "x_hat", "choice", "triangle_sum"])?;
        for s in &self.scales {
            for p in &s.peaks {
                w.serialize((s.l, p.x_hat, p.choice, p.triangle_sum))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Columns of the upper-third triangle of peak `x_hat` at scale `l`: the
/// integers strictly between `2(x̂-1)l + 2l/3` and `2x̂l - 2l/3`.
pub(crate) fn upper_third_columns(l: usize, x_hat: usize) -> impl Iterator<Item = usize> {
    let left = 2 * (x_hat - 1) * l;
    let right = 2 * x_hat * l;
    (left..=right).filter(move |&x| 3 * x > 3 * left + 2 * l && 3 * x < 3 * right - 2 * l)
}

/// Runs the construction on `[0, L]` with zero boundary values.
pub fn ding_wirth<P: Potential + ?Sized>(field: &P, system_size: usize) -> Result<DwLedger> {
    if system_size < 4 || !system_size.is_power_of_two() {
        return domain(format!("system size {system_size} must be a power of two >= 4"));
    }
    if field.system_size() < system_size {
        return domain("field is smaller than the requested system");
    }
    let size = system_size;
    // Current h_{≥2l}; tents have integer heights and unit slopes, so everything stays integral.
    let mut coarse = vec![0.0f64; size + 1];
    let mut components: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut scales = Vec::new();
    let mut l = size / 2;
    while l >= 1 {
        let mut comp = vec![0.0f64; size + 1];
        let mut peaks = Vec::with_capacity(size / (2 * l));
        for x_hat in 1..=size / (2 * l) {
            let c = (2 * x_hat - 1) * l;
            let mut sum = CompensatedSum::new();
            for x in upper_third_columns(l, x_hat) {
                let base = coarse[x];
                let tent = (l - x.abs_diff(c)) as f64;
                let third = 2.0 * l as f64 / 3.0;
                sum.add(potential::increment(field, x, base + third, base + tent)?);
            }
            let triangle_sum = sum.value();
            let choice = if triangle_sum >= 0.0 { l as f64 } else { 0.0 };
            if choice > 0.0 {
                for (x, v) in comp.iter_mut().enumerate().take(c + l + 1).skip(c - l) {
                    *v = (l - x.abs_diff(c)) as f64;
                }
            }
            peaks.push(DwPeak { x_hat, choice, triangle_sum });
        }
        let comp_cfg = HeightConfig { x_offset: 0, heights: comp.clone() };
        scales.push(DwScale { l, peaks, dirichlet: energy::dirichlet(&comp_cfg) });
        for (acc, v) in coarse.iter_mut().zip(&comp) {
            *acc += v;
        }
        components.push((l, comp));
        l /= 2;
    }

    let config = HeightConfig { x_offset: 0, heights: coarse };
    let field_energy = energy::field_term(field, &config)?;
    let per_scale_dirichlet_ok = scales.iter().all(|s| 2.0 * s.dirichlet <= size as f64);
    // components are ordered coarse to fine; the finer part below scale l is the suffix.
    let mut nesting_ok = true;
    for (k, &(l, _)) in components.iter().enumerate() {
        let mut finer = vec![0.0f64; size + 1];
        for (_, comp) in &components[k + 1..] {
            for (acc, v) in finer.iter_mut().zip(comp) {
                *acc += v;
            }
        }
        let sup = finer.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if 3.0 * sup > 2.0 * l as f64 {
            nesting_ok = false;
        }
    }
    debug_assert!(multiscale::decompose(&config).is_ok());
    Ok(DwLedger { system_size, scales, config, field_energy, per_scale_dirichlet_ok, nesting_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{PotentialField, ZeroField};

    #[test]
    fn smallest_triangle_is_a_single_column() {
        assert_eq!(upper_third_columns(2, 1).collect::<Vec<_>>(), vec![2]);
        assert_eq!(upper_third_columns(1, 3).collect::<Vec<_>>(), vec![5]);
        assert_eq!(upper_third_columns(3, 1).collect::<Vec<_>>(), vec![3]);
        assert_eq!(upper_third_columns(6, 1).collect::<Vec<_>>(), vec![5, 6, 7]);
    }

    #[test]
    fn small_case_uses_one_increment() {
        let f = PotentialField::new(17, 4).unwrap();
        let led = ding_wirth(&f, 4).unwrap();
        let top = &led.scales[0];
        assert_eq!(top.l, 2);
        let want = f.increment(2, 4.0 / 3.0, 2.0).unwrap();
        assert_eq!(top.peaks[0].triangle_sum, want);
        assert_eq!(top.peaks[0].choice, if want >= 0.0 { 2.0 } else { 0.0 });
    }

    #[test]
    fn zero_field_raises_every_tent() {
        let z = ZeroField::new(16, 1.0 / 64.0);
        let led = ding_wirth(&z, 16).unwrap();
        assert!(led.scales.iter().all(|s| s.peaks.iter().all(|p| p.choice == s.l as f64)));
        assert!(led.scales.iter().all(|s| 2.0 * s.dirichlet == 16.0));
        assert!(led.nesting_ok);
        assert_eq!(led.config.at(8), 8.0);
        assert_eq!(led.config.at(4), 8.0);
        assert_eq!(led.config.at(2), 6.0);
        assert_eq!(led.config.at(1), 4.0);
    }

    #[test]
    fn invariants_and_reproducibility() {
        for seed in 0..20 {
            let f = PotentialField::new(seed, 64).unwrap();
            let a = ding_wirth(&f, 64).unwrap();
            assert!(a.per_scale_dirichlet_ok && a.nesting_ok);
            assert_eq!(a, ding_wirth(&f, 64).unwrap());
            let peak_counts: Vec<usize> = a.scales.iter().map(|s| s.peaks.len()).collect();
            assert_eq!(peak_counts, vec![1, 2, 4, 8, 16, 32]);
        }
    }

    #[test]
    fn csv_lists_every_peak() {
        let f = PotentialField::new(2, 8).unwrap();
        let led = ding_wirth(&f, 8).unwrap();
        let mut buf = Vec::new();
        led.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 1 + 2 + 4);
    }

    #[test]
    fn rejects_bad_sizes() {
        let f = PotentialField::new(2, 8).unwrap();
        assert!(ding_wirth(&f, 6).is_err());
        assert!(ding_wirth(&f, 2).is_err());
        assert!(ding_wirth(&f, 16).is_err());
    }
}
