//! Aggregation of sweep records into scaling estimates.

use serde::{Deserialize, Serialize};

use super::orlicz::{orlicz_norm, orlicz_norm_bootstrap, OrliczEstimate, BOOTSTRAP_RESAMPLES};
use super::summary::{median, ols, Estimate, LinearFit};
use super::sweep::{SweepRecord, SweepResult, SCHEMA_VERSION, TOOL_VERSION};
use super::SampleSet;
use crate::error::{domain, Result};
use crate::potential::hash_words;

const TAG_BOOTSTRAP: u64 = 0x626f_6f74_7374_7270;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub l: usize,
    pub estimate: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerScaleTable {
    pub p: f64,
    /// Means of `D_p(h_{*,l})/L` for `l = 1, …, L/2`.
    pub rows: Vec<ScaleRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    /// `max/min` of mean `D(h_{*,l})/L` over `l ∈ {2, …, L/4}`.
    pub ratio: Option<f64>,
    /// Means of `D(h_{*,≥l})/L`, `l = 1, …, L/2`.
    pub aggregated: Vec<ScaleRow>,
    /// Aggregated means against `ln(L/l)` over `l ∈ {2, …, L/4}`.
    pub aggregated_fit: Option<LinearFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub gap: usize,
    pub n: usize,
    /// Orlicz norm (`s = 2`) of `|h_*(x+g) - h_*(x)|`.
    pub norm: OrliczEstimate,
    /// `norm / (g (1 + ln^{4/3}(L/g)))`, bias corrected.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusTable {
    pub system_size: usize,
    pub rows: Vec<ModulusRow>,
    pub max_normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// `‖D(h_*)/L‖_{3/2}`.
    pub dirichlet_per_length: OrliczEstimate,
    /// `‖M(h_*)/L²‖_3`.
    pub mass: OrliczEstimate,
    /// `‖h_*(L/2)/L‖_3`.
    pub mid_height: OrliczEstimate,
    /// `‖Ŵ₁‖_2`.
    pub w1: Option<OrliczEstimate>,
    /// `‖D(h_*)/L‖_1 / ‖Ŵ₁‖_{4/3}^{4/3}`.
    pub dirichlet_to_frontier: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub system_size: usize,
    pub replicates: usize,
    pub excluded: usize,
    /// `-mean(min E)/(L ln L)`.
    pub c_l: Estimate,
    pub alpha1: f64,
    /// `3 mean(D(h_*))/(L ln L)`.
    pub alpha2: f64,
    /// `(3^{3/4}/4 · mean(Ŵ₁)/ln^{3/4} L)^{4/3}`.
    pub alpha3: Option<f64>,
    pub dirichlet_per_length: Estimate,
    /// Mean of the per-replicate ratio `W(h_*)/D(h_*)`.
    pub field_to_dirichlet: Estimate,
    pub per_scale: Vec<PerScaleTable>,
    pub flatness: Flatness,
    pub norms: Norms,
    pub modulus: ModulusTable,
    /// `W(h_DW)/(L ln L)`.
    pub ding_wirth: Option<Estimate>,
    /// Median `η` per linearization target.
    pub eta_median: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectRow {
    pub system_size: usize,
    pub block: usize,
    /// `c_L ln L - c_l ln l - c_{L/l} ln(L/l)`.
    pub defect: Estimate,
    /// `-defect / ln^{1/2}(L/l)`.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superadditivity {
    pub rows: Vec<DefectRow>,
    /// Smallest `C ≥ 0` with `defect ≥ -C ln^{1/2}(L/l)` on every row.
    pub fitted_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoGrowth {
    pub mass: LinearFit,
    pub mid_height: LinearFit,
    pub modulus_max: LinearFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub sizes: Vec<SizeSummary>,
    /// Mean `D(h_*)/L` against `ln L`.
    pub dirichlet_trend: LinearFit,
    /// Bias-corrected norms against `ln L`.
    pub no_growth: NoGrowth,
    pub superadditivity: Option<Superadditivity>,
}

impl ScalingReport {
    pub fn size(&self, system_size: usize) -> Option<&SizeSummary> {
        self.sizes.iter().find(|s| s.system_size == system_size)
    }

    /// Plot-ready `(x, y)` series keyed by name.
    pub fn plot_series(&self) -> Vec<(String, Vec<(f64, f64)>)> {
        let lnl = |s: &SizeSummary| (s.system_size as f64).ln();
        let mut out = vec![
            ("dirichlet_per_length_vs_lnL".to_string(), self.sizes.iter().map(|s| (lnl(s), s.dirichlet_per_length.mean)).collect()),
            ("c_L_vs_lnL".to_string(), self.sizes.iter().map(|s| (lnl(s), s.c_l.mean)).collect()),
            ("field_to_dirichlet_vs_lnL".to_string(), self.sizes.iter().map(|s| (lnl(s), s.field_to_dirichlet.mean)).collect()),
            ("mass_norm_vs_lnL".to_string(), self.sizes.iter().map(|s| (lnl(s), s.norms.mass.corrected())).collect()),
            ("mid_height_norm_vs_lnL".to_string(), self.sizes.iter().map(|s| (lnl(s), s.norms.mid_height.corrected())).collect()),
        ];
        for s in &self.sizes {
            if let Some(t) = s.per_scale.iter().find(|t| t.p == 2.0) {
                out.push((format!("per_scale_L{}", s.system_size), t.rows.iter().map(|r| (r.l as f64, r.estimate.mean)).collect()));
            }
            out.push((
                format!("aggregated_L{}", s.system_size),
                s.flatness.aggregated.iter().map(|r| ((s.system_size as f64 / r.l as f64).ln(), r.estimate.mean)).collect(),
            ));
            out.push((format!("modulus_L{}", s.system_size), s.modulus.rows.iter().map(|r| (r.gap as f64, r.normalized)).collect()));
        }
        if self.sizes.iter().any(|s| s.ding_wirth.is_some()) {
            out.push((
                "ding_wirth_vs_lnL".to_string(),
                self.sizes.iter().filter_map(|s| s.ding_wirth.map(|d| (lnl(s), d.mean))).collect(),
            ));
        }
        out
    }
}

fn boot_seed(master: u64, system_size: usize, what: u64) -> u64 {
    hash_words(&[TAG_BOOTSTRAP, master, system_size as u64, what])
}

fn norm(values: Vec<f64>, label: &str, s: f64, seed: u64) -> Result<OrliczEstimate> {
    orlicz_norm_bootstrap(&SampleSet::new(label, values)?, s, BOOTSTRAP_RESAMPLES, seed)
}

fn column(recs: &[&SweepRecord], f: impl Fn(&SweepRecord) -> Option<f64>) -> Option<Vec<f64>> {
    recs.iter().map(|r| f(r)).collect()
}

/// Per-gap Orlicz norms of the modulus samples, normalized by `g (1 + ln^{4/3}(L/g))`.
pub fn modulus_stats(result: &SweepResult, system_size: usize) -> Result<ModulusTable> {
    let recs: Vec<&SweepRecord> = result.ok_records(system_size).collect();
    if recs.is_empty() || recs.iter().any(|r| r.modulus.is_empty()) {
        return domain(format!("no modulus samples at L = {system_size}"));
    }
    let l = system_size as f64;
    let mut rows = Vec::new();
    for (k, (gap, _)) in recs[0].modulus.iter().enumerate() {
        let pooled: Vec<f64> = recs.iter().flat_map(|r| r.modulus[k].1.iter().copied()).collect();
        let est = norm(pooled, "modulus", 2.0, boot_seed(result.plan.master_seed, system_size, 100 + *gap as u64))?;
        let g = *gap as f64;
        let scale = g * (1.0 + (l / g).ln().powf(4.0 / 3.0));
        rows.push(ModulusRow { gap: *gap, n: est.n, normalized: est.corrected().max(0.0) / scale, norm: est });
    }
    let max_normalized = rows.iter().map(|r| r.normalized).fold(0.0, f64::max);
    Ok(ModulusTable { system_size, rows, max_normalized })
}

fn flatness(tables: &[PerScaleTable], recs: &[&SweepRecord], system_size: usize) -> Result<Flatness> {
    let l = system_size;
    let Some(quad) = tables.iter().find(|t| t.p == 2.0) else {
        return domain("per-scale energies for p = 2 are required");
    };
    let band: Vec<&ScaleRow> = quad.rows.iter().filter(|r| r.l >= 2 && 4 * r.l <= l).collect();
    let ratio = (!band.is_empty()).then(|| {
        let max = band.iter().map(|r| r.estimate.mean).fold(f64::NEG_INFINITY, f64::max);
        let min = band.iter().map(|r| r.estimate.mean).fold(f64::INFINITY, f64::min);
        max / min
    });
    let scales = quad.rows.len();
    let aggregated: Vec<ScaleRow> = (0..scales)
        .map(|k| ScaleRow {
            l: 1 << k,
            estimate: Estimate::of(recs.iter().map(|r| r.per_scale_for(2.0).map_or(f64::NAN, |v| v[k..].iter().sum()))),
        })
        .collect();
    let fit_rows: Vec<&ScaleRow> = aggregated.iter().filter(|r| r.l >= 2 && 4 * r.l <= l).collect();
    let aggregated_fit = if fit_rows.len() >= 3 {
        let x: Vec<f64> = fit_rows.iter().map(|r| (l as f64 / r.l as f64).ln()).collect();
        let y: Vec<f64> = fit_rows.iter().map(|r| r.estimate.mean).collect();
        Some(ols(&x, &y)?)
    } else {
        None
    };
    Ok(Flatness { ratio, aggregated, aggregated_fit })
}

fn summarize(result: &SweepResult, system_size: usize) -> Result<SizeSummary> {
    let recs: Vec<&SweepRecord> = result.ok_records(system_size).collect();
    let excluded = result.records.iter().filter(|r| r.system_size == system_size && !r.is_ok()).count();
    let (l, lnl) = (system_size as f64, (system_size as f64).ln());
    let llnl = l * lnl;
    let seed = |k| boot_seed(result.plan.master_seed, system_size, k);
    let missing = || crate::error::Error::Domain(format!("ground-state observables missing at L = {system_size}"));
    if recs.is_empty() {
        return domain(format!("no usable replicates at L = {system_size}"));
    }
    let energy = column(&recs, |r| r.min_energy).ok_or_else(missing)?;
    let dir = column(&recs, |r| r.dirichlet).ok_or_else(missing)?;
    let fld = column(&recs, |r| r.field).ok_or_else(missing)?;
    let mass = column(&recs, |r| r.mass).ok_or_else(missing)?;
    let mid = column(&recs, |r| r.mid_height).ok_or_else(missing)?;

    let c_l = Estimate::of(energy.iter().map(|e| -e / llnl));
    let dirichlet_per_length = Estimate::of(dir.iter().map(|d| d / l));
    let field_to_dirichlet = Estimate::of(fld.iter().zip(&dir).map(|(w, d)| w / d));
    let alpha2 = (3.0 * dirichlet_per_length.mean / lnl).max(0.0);

    let mut per_scale = Vec::new();
    for &p in &result.plan.exponents {
        let Some(first) = recs[0].per_scale_for(p) else { continue };
        let rows = (0..first.len())
            .map(|k| ScaleRow { l: 1 << k, estimate: Estimate::of(recs.iter().map(|r| r.per_scale_for(p).map_or(f64::NAN, |v| v[k]))) })
            .collect();
        per_scale.push(PerScaleTable { p, rows });
    }
    let flat = flatness(&per_scale, &recs, system_size)?;

    let w1 = column(&recs, |r| r.w1_hat);
    let alpha3 = w1.as_ref().map(|w| {
        let m = w.iter().sum::<f64>() / w.len() as f64;
        (3f64.powf(0.75) / 4.0 * m / lnl.powf(0.75)).max(0.0).powf(4.0 / 3.0)
    });
    let w1_norm = match &w1 {
        Some(w) => Some(norm(w.clone(), "w1_hat", 2.0, seed(4))?),
        None => None,
    };
    let dirichlet_to_frontier = match &w1 {
        Some(w) => {
            let d1 = orlicz_norm(&SampleSet::new("d", dir.iter().map(|d| d / l).collect())?, 1.0)?.nu_hat;
            let w43 = orlicz_norm(&SampleSet::new("w", w.clone())?, 4.0 / 3.0)?.nu_hat.powf(4.0 / 3.0);
            Some(d1 / w43)
        }
        None => None,
    };
    let norms = Norms {
        dirichlet_per_length: norm(dir.iter().map(|d| d / l).collect(), "dirichlet", 1.5, seed(1))?,
        mass: norm(mass.iter().map(|m| m / (l * l)).collect(), "mass", 3.0, seed(2))?,
        mid_height: norm(mid.iter().map(|h| h / l).collect(), "mid_height", 3.0, seed(3))?,
        w1: w1_norm,
        dirichlet_to_frontier,
    };
    let ding_wirth = column(&recs, |r| r.dw_field).map(|v| Estimate::of(v.iter().map(|w| w / llnl)));
    let mut eta_median = Vec::new();
    for (k, &t) in result.plan.linearization_targets.iter().enumerate() {
        let v: Vec<f64> = recs.iter().filter_map(|r| r.eta.get(k).copied()).collect();
        if !v.is_empty() {
            eta_median.push((t, median(&v)?));
        }
    }
    Ok(SizeSummary {
        system_size,
        replicates: recs.len(),
        excluded,
        alpha1: c_l.mean.max(0.0),
        c_l,
        alpha2,
        alpha3,
        dirichlet_per_length,
        field_to_dirichlet,
        per_scale,
        flatness: flat,
        norms,
        modulus: modulus_stats(result, system_size)?,
        ding_wirth,
        eta_median,
    })
}

/// `c_L ln L - c_l ln l - c_{L/l} ln(L/l)` for every `(L, l)` with `L`, `l`, `L/l` all swept.
pub fn superadditivity(sizes: &[SizeSummary]) -> Option<Superadditivity> {
    let find = |n: usize| sizes.iter().find(|s| s.system_size == n);
    let term = |s: &SizeSummary| {
        let ln = (s.system_size as f64).ln();
        (s.c_l.mean * ln, s.c_l.std_err * ln)
    };
    let mut rows = Vec::new();
    for big in sizes {
        for small in sizes {
            let (bl, sl) = (big.system_size, small.system_size);
            if sl <= 1 || sl >= bl || bl % sl != 0 {
                continue;
            }
            let Some(other) = find(bl / sl) else { continue };
            let (a, sa) = term(big);
            let (b, sb) = term(small);
            let (c, sc) = term(other);
            let defect = Estimate { mean: a - b - c, std_err: (sa * sa + sb * sb + sc * sc).sqrt(), n: big.c_l.n.min(small.c_l.n).min(other.c_l.n) };
            let normalized = -defect.mean / ((bl / sl) as f64).ln().sqrt();
            rows.push(DefectRow { system_size: bl, block: sl, defect, normalized });
        }
    }
    if rows.is_empty() {
        return None;
    }
    let fitted_c = rows.iter().map(|r| r.normalized).fold(0.0, f64::max);
    Some(Superadditivity { rows, fitted_c })
}

/// Pure function of the sweep; needs ground states at three or more sizes.
pub fn scaling_report(result: &SweepResult) -> Result<ScalingReport> {
    let sizes: Vec<usize> = result.sizes().into_iter().filter(|&l| result.ok_records(l).next().is_some()).collect();
    if sizes.len() < 3 {
        return domain(format!("a scaling report needs at least 3 system sizes, found {}", sizes.len()));
    }
    if !result.plan.ground_state {
        return domain("a scaling report needs ground-state observables");
    }
    let summaries = sizes.iter().map(|&l| summarize(result, l)).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = summaries.iter().map(|s| (s.system_size as f64).ln()).collect();
    let fit = |f: &dyn Fn(&SizeSummary) -> f64| ols(&x, &summaries.iter().map(f).collect::<Vec<_>>());
    Ok(ScalingReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        config_hash: result.config_hash.clone(),
        master_seed: result.plan.master_seed,
        dirichlet_trend: fit(&|s| s.dirichlet_per_length.mean)?,
        no_growth: NoGrowth {
            mass: fit(&|s| s.norms.mass.corrected())?,
            mid_height: fit(&|s| s.norms.mid_height.corrected())?,
            modulus_max: fit(&|s| s.modulus.max_normalized)?,
        },
        superadditivity: superadditivity(&summaries),
        sizes: summaries,
    })
}
