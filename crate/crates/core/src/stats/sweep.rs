//! Replicate-parallel Monte Carlo sweeps over system sizes.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::linearization::linearization_gap;
use crate::constructions::ding_wirth;
use crate::energy::{self, HeightConfig};
use crate::error::{domain, Error, Result};
use crate::minimizer::{lagrangian_frontier, DEFAULT_PENALTIES};
use crate::minimizer::{minimize_cached, Grid, MinimizeOptions, Span};
use crate::multiscale::{decompose, per_scale_energy};
use crate::potential::{hash_words, FieldTable, PotentialField, DEFAULT_RESOLUTION_EXP};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const TAG_REPLICATE: u64 = 0x7265_706c_6963_6174;
const MODULUS_PAIRS: usize = 16;

/// Seed of replicate `r` at size `L`: `hash(tag, master, L, r)`.
///
/// It does not depend on how many replicates are run, so growing a sweep keeps
/// every existing record.
pub fn replicate_seed(master_seed: u64, system_size: usize, replicate: usize) -> u64 {
    hash_words(&[TAG_REPLICATE, master_seed, system_size as u64, replicate as u64])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepPlan {
    pub master_seed: u64,
    pub system_sizes: Vec<usize>,
    pub replicates: usize,
    /// `δ_min = 2^-resolution_exp`.
    pub resolution_exp: u32,
    /// DP grid spacing `δ`; `None` uses `δ_min`.
    pub grid_spacing: Option<f64>,
    /// Fixed band half-width; `None` uses the default rule.
    pub band_half_width: Option<f64>,
    pub adaptive_band: bool,
    pub exponents: Vec<f64>,
    pub penalties: Vec<f64>,
    pub ground_state: bool,
    pub frontier: bool,
    pub ding_wirth: bool,
    /// Values of `ε^{4/3} ln L` at which the linearization gap is recorded.
    pub linearization_targets: Vec<f64>,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            master_seed: 0,
            system_sizes: vec![32, 64, 128],
            replicates: 10,
            resolution_exp: DEFAULT_RESOLUTION_EXP,
            grid_spacing: None,
            band_half_width: None,
            adaptive_band: true,
            exponents: energy::DEFAULT_EXPONENTS.to_vec(),
            penalties: DEFAULT_PENALTIES.to_vec(),
            ground_state: true,
            frontier: false,
            ding_wirth: false,
            linearization_targets: Vec::new(),
            jobs: None,
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.system_sizes.is_empty() {
            bad.push("system_sizes: empty".to_string());
        }
        for &l in &self.system_sizes {
            if l < 4 || !l.is_power_of_two() {
                bad.push(format!("system_sizes: {l} is not a power of two >= 4"));
            }
        }
        if self.replicates == 0 {
            bad.push("replicates: must be >= 1".into());
        }
        if self.resolution_exp > 40 {
            bad.push(format!("resolution_exp: {} exceeds 40", self.resolution_exp));
        }
        if let Some(d) = self.grid_spacing {
            let units = d * 2f64.powi(self.resolution_exp as i32);
            if !(d > 0.0) || (units - units.round()).abs() > 1e-9 || units.round() < 1.0 {
                bad.push(format!("grid_spacing: {d} is not a positive multiple of 2^-{}", self.resolution_exp));
            }
        }
        if let Some(b) = self.band_half_width {
            if !(b > 0.0) {
                bad.push(format!("band_half_width: {b} must be positive"));
            }
        }
        if self.exponents.iter().any(|p| !(*p >= 1.0)) {
            bad.push("exponents: every p must be >= 1".into());
        }
        if self.frontier && (self.penalties.is_empty() || self.penalties.windows(2).any(|w| w[0] >= w[1]) || self.penalties[0] <= 0.0) {
            bad.push("penalties: must be positive and strictly increasing".into());
        }
        if self.linearization_targets.iter().any(|t| !(*t > 0.0)) {
            bad.push("linearization_targets: must be positive".into());
        }
        if !self.linearization_targets.is_empty() && !self.ground_state {
            bad.push("linearization_targets: need ground_state".into());
        }
        if self.jobs == Some(0) {
            bad.push("jobs: must be >= 1".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            grid_spacing: self.grid_spacing,
            band_half_width: self.band_half_width,
            adaptive_band: self.adaptive_band,
            ..MinimizeOptions::default()
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex_digest(serde_json::to_string(self).expect("plan serializes").as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `ε` with `ε^{4/3} ln L = target`.
pub fn eps_for_target(target: f64, system_size: usize) -> f64 {
    (target / (system_size as f64).ln()).powf(0.75)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub system_size: usize,
    pub replicate: usize,
    pub seed: u64,
    /// `ok`, or the reason the replicate was excluded.
    pub status: String,
    pub min_energy: Option<f64>,
    pub dirichlet: Option<f64>,
    pub field: Option<f64>,
    pub mass: Option<f64>,
    pub mid_height: Option<f64>,
    pub band_hits: Option<u32>,
    /// `p ↦ [D_p(h_{*,l})/L for l = 1, 2, …, L/2]`.
    pub per_scale: Vec<(f64, Vec<f64>)>,
    /// `g ↦ |h_*(x+g) - h_*(x)|` on up to 16 disjoint windows.
    pub modulus: Vec<(usize, Vec<f64>)>,
    pub w1_hat: Option<f64>,
    pub w1_extrapolated: Option<bool>,
    pub dw_field: Option<f64>,
    pub dw_dirichlet: Option<f64>,
    /// `η` at each linearization target.
    pub eta: Vec<f64>,
    #[serde(skip)]
    pub runtime: Elapsed,
}

/// Wall-clock time of a replicate. It never takes part in equality, so reruns
/// compare equal record for record.
#[derive(Clone, Copy, Debug, Default)]
pub struct Elapsed(pub f64);

impl PartialEq for Elapsed {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn per_scale_for(&self, p: f64) -> Option<&[f64]> {
        self.per_scale.iter().find(|(q, _)| *q == p).map(|(_, v)| v.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub config_hash: String,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn ok_records(&self, system_size: usize) -> impl Iterator<Item = &SweepRecord> {
        self.records.iter().filter(move |r| r.system_size == system_size && r.is_ok())
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.records.iter().map(|r| r.system_size).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Appends the records of `other`, which must share the sampling settings.
    pub fn merge(&mut self, other: SweepResult) -> Result<()> {
        let strip = |p: &SweepPlan| SweepPlan { system_sizes: Vec::new(), replicates: 0, jobs: None, ..p.clone() };
        if strip(&self.plan) != strip(&other.plan) {
            return domain("cannot merge sweeps with different sampling settings");
        }
        let seen: std::collections::HashSet<(usize, usize)> = self.records.iter().map(|r| (r.system_size, r.replicate)).collect();
        self.records.extend(other.records.into_iter().filter(|r| !seen.contains(&(r.system_size, r.replicate))));
        self.records.sort_by_key(|r| (r.system_size, r.replicate));
        for l in other.plan.system_sizes {
            if !self.plan.system_sizes.contains(&l) {
                self.plan.system_sizes.push(l);
            }
        }
        self.plan.system_sizes.sort_unstable();
        self.plan.replicates = self.plan.replicates.max(other.plan.replicates);
        Ok(())
    }

    fn columns(&self) -> (Vec<f64>, usize) {
        (self.plan.exponents.clone(), self.plan.linearization_targets.len())
    }

    /// CSV with `#` header lines carrying the schema, tool version, hash and plan.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# polylab sweep")?;
        writeln!(out, "# schema_version: {SCHEMA_VERSION}")?;
        writeln!(out, "# tool_version: {TOOL_VERSION}")?;
        writeln!(out, "# config_hash: {}", self.config_hash)?;
        writeln!(out, "# master_seed: {}", self.plan.master_seed)?;
        writeln!(out, "# plan: {}", serde_json::to_string(&self.plan)?)?;
        writeln!(out, "# per_scale columns list D_p(h_l)/L for l = 1, 2, ..., L/2; modulus lists gap:values groups separated by '|'")?;
        let (exps, n_eta) = self.columns();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "system_size", "replicate", "seed", "status", "min_energy", "dirichlet", "field", "mass", "mid_height", "band_hits",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(exps.iter().map(|p| format!("dp_{p}")));
        header.extend(["modulus", "w1_hat", "w1_extrapolated", "dw_field", "dw_dirichlet"].iter().map(|s| s.to_string()));
        header.extend(self.plan.linearization_targets.iter().map(|t| format!("eta_{t}")));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.system_size.to_string(),
                r.replicate.to_string(),
                r.seed.to_string(),
                r.status.clone(),
                opt(r.min_energy),
                opt(r.dirichlet),
                opt(r.field),
                opt(r.mass),
                opt(r.mid_height),
                r.band_hits.map_or(String::new(), |b| b.to_string()),
            ];
            for p in &exps {
                row.push(r.per_scale_for(*p).map_or(String::new(), join));
            }
            row.push(r.modulus.iter().map(|(g, v)| format!("{g}:{}", join(v))).collect::<Vec<_>>().join("|"));
            row.push(opt(r.w1_hat));
            row.push(r.w1_extrapolated.map_or(String::new(), |b| b.to_string()));
            row.push(opt(r.dw_field));
            row.push(opt(r.dw_dirichlet));
            for k in 0..n_eta {
                row.push(r.eta.get(k).map_or(String::new(), |v| v.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut plan = None;
        let mut config_hash = String::new();
        let mut body = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# plan: ") {
                plan = Some(serde_json::from_str::<SweepPlan>(rest)?);
            } else if let Some(rest) = line.strip_prefix("# config_hash: ") {
                config_hash = rest.trim().to_string();
            } else if let Some(rest) = line.strip_prefix("# schema_version: ") {
                if rest.trim() != SCHEMA_VERSION.to_string() {
                    return domain(format!("unsupported sweep schema version {}", rest.trim()));
                }
            } else if !line.starts_with('#') {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let plan = plan.ok_or_else(|| Error::Domain("sweep file has no plan header".into()))?;
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let header = rd.headers()?.clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let need = |name: &str| col(name).ok_or_else(|| Error::Domain(format!("sweep file lacks column {name}")));
        let (i_l, i_r, i_s, i_st) = (need("system_size")?, need("replicate")?, need("seed")?, need("status")?);
        let mut records = Vec::new();
        for row in rd.records() {
            let row = row?;
            let get = |name: &str| col(name).and_then(|i| row.get(i)).unwrap_or("");
            let mut r = SweepRecord {
                system_size: parse(&row[i_l])?,
                replicate: parse(&row[i_r])?,
                seed: parse(&row[i_s])?,
                status: row[i_st].to_string(),
                min_energy: parse_opt(get("min_energy"))?,
                dirichlet: parse_opt(get("dirichlet"))?,
                field: parse_opt(get("field"))?,
                mass: parse_opt(get("mass"))?,
                mid_height: parse_opt(get("mid_height"))?,
                band_hits: parse_opt(get("band_hits"))?,
                w1_hat: parse_opt(get("w1_hat"))?,
                w1_extrapolated: parse_opt(get("w1_extrapolated"))?,
                dw_field: parse_opt(get("dw_field"))?,
                dw_dirichlet: parse_opt(get("dw_dirichlet"))?,
                ..Default::default()
            };
            for p in &plan.exponents {
                let cell = get(&format!("dp_{p}"));
                if !cell.is_empty() {
                    r.per_scale.push((*p, split(cell)?));
                }
            }
            for group in get("modulus").split('|').filter(|g| !g.is_empty()) {
                let (g, vals) = group.split_once(':').ok_or_else(|| Error::Domain(format!("bad modulus cell {group}")))?;
                r.modulus.push((parse(g)?, split(vals)?));
            }
            for t in &plan.linearization_targets {
                if let Some(v) = parse_opt::<f64>(get(&format!("eta_{t}")))? {
                    r.eta.push(v);
                }
            }
            records.push(r);
        }
        Ok(Self { plan, config_hash, records })
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Domain(format!("cannot parse {s:?} in sweep file")))
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse(s).map(Some)
    }
}

fn split(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(parse).collect()
}

/// `|h(x+g) - h(x)|` on up to 16 evenly spread disjoint windows, for dyadic `g ≤ L`.
pub fn modulus_samples(h: &HeightConfig) -> Vec<(usize, Vec<f64>)> {
    let size = h.span();
    let mut out = Vec::new();
    let mut g = 1;
    while g <= size {
        let windows = size / g;
        let count = windows.min(MODULUS_PAIRS);
        let vals = (0..count)
            .map(|i| {
                let k = i * windows / count;
                (h.heights[(k + 1) * g] - h.heights[k * g]).abs()
            })
            .collect();
        out.push((g, vals));
        g *= 2;
    }
    out
}

/// One replicate of the plan.
pub fn run_replicate(plan: &SweepPlan, system_size: usize, replicate: usize) -> Result<SweepRecord> {
    let start = Instant::now();
    let seed = replicate_seed(plan.master_seed, system_size, replicate);
    let field = PotentialField::with_resolution_exp(seed, system_size, plan.resolution_exp)?;
    let mut rec = SweepRecord { system_size, replicate, seed, status: "ok".into(), ..Default::default() };
    let opts = plan.minimize_options();
    if plan.ground_state {
        let grid = Grid::resolve(&field, opts.grid_spacing)?;
        let mut table = FieldTable::new(&field, grid.stride, 1, system_size - 1);
        match minimize_cached(&mut table, Span::whole(system_size), 0.0, 0.0, &opts) {
            Ok(gs) => {
                let h = &gs.config;
                rec.min_energy = Some(gs.breakdown.total);
                rec.dirichlet = Some(gs.breakdown.dirichlet);
                rec.field = Some(gs.breakdown.field);
                rec.mass = Some(gs.breakdown.mass);
                rec.mid_height = Some(h.at(system_size / 2));
                rec.band_hits = Some(gs.band_hits);
                let dec = decompose(h)?;
                for &p in &plan.exponents {
                    rec.per_scale.push((p, per_scale_energy(&dec, p)?.into_values().collect()));
                }
                rec.modulus = modulus_samples(h);
                for &t in &plan.linearization_targets {
                    rec.eta.push(linearization_gap(h, eps_for_target(t, system_size))?.eta);
                }
            }
            Err(e @ Error::BandExhausted { .. }) => {
                log::warn!("L = {system_size}, replicate {replicate}: {e}; excluded");
                rec.status = format!("excluded: {e}");
            }
            Err(e) => return Err(e),
        }
    }
    if plan.frontier && rec.is_ok() {
        match lagrangian_frontier(&field, system_size, &plan.penalties, &opts) {
            Ok(fr) => {
                rec.w1_hat = Some(fr.w1_hat);
                rec.w1_extrapolated = Some(fr.extrapolated);
            }
            Err(e @ Error::BandExhausted { .. }) => {
                log::warn!("L = {system_size}, replicate {replicate}: frontier {e}; excluded");
                rec.status = format!("excluded: frontier {e}");
            }
            Err(e) => return Err(e),
        }
    }
    if plan.ding_wirth {
        let dw = ding_wirth(&field, system_size)?;
        rec.dw_field = Some(dw.field_energy);
        rec.dw_dirichlet = Some(energy::dirichlet(&dw.config));
    }
    rec.runtime = Elapsed(start.elapsed().as_secs_f64());
    Ok(rec)
}

/// Runs every `(L, replicate)` of the plan. Records come back ordered by
/// `(L, replicate)` and are identical for any worker count.
pub fn mc_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let tasks: Vec<(usize, usize)> =
        plan.system_sizes.iter().flat_map(|&l| (0..plan.replicates).map(move |r| (l, r))).collect();
    let run = || tasks.par_iter().map(|&(l, r)| run_replicate(plan, l, r)).collect::<Result<Vec<_>>>();
    let mut records = match plan.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    records.sort_by_key(|r| (r.system_size, r.replicate));
    let mut per_size: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for r in &records {
        let e = per_size.entry(r.system_size).or_default();
        e.0 += usize::from(!r.is_ok());
        e.1 += r.runtime.0;
    }
    for (l, (fails, secs)) in per_size {
        log::info!("L = {l}: {secs:.2} s total");
        if fails > 0 {
            log::warn!("L = {l}: {fails} replicate(s) excluded after band exhaustion");
        }
    }
    Ok(SweepResult { config_hash: plan.hash(), plan: plan.clone(), records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepPlan {
        SweepPlan {
            system_sizes: vec![16, 32],
            replicates: 2,
            grid_spacing: Some(0.25),
            ding_wirth: true,
            linearization_targets: vec![0.5, 0.1],
            ..SweepPlan::default()
        }
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(replicate_seed(1, 32, 0), replicate_seed(1, 32, 0));
        assert_ne!(replicate_seed(1, 32, 0), replicate_seed(1, 32, 1));
        assert_ne!(replicate_seed(1, 32, 0), replicate_seed(1, 64, 0));
        assert_ne!(replicate_seed(1, 32, 0), replicate_seed(2, 32, 0));
    }

    #[test]
    fn csv_round_trip() {
        let res = mc_sweep(&tiny()).unwrap();
        assert_eq!(res.records.len(), 4);
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let back = SweepResult::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn record_contents() {
        let res = mc_sweep(&tiny()).unwrap();
        let r = &res.records[2];
        assert_eq!((r.system_size, r.replicate), (32, 0));
        assert_eq!(r.per_scale.len(), 3);
        assert_eq!(r.per_scale[0].1.len(), 5);
        let d: f64 = r.per_scale_for(2.0).unwrap().iter().sum();
        assert!((d * 32.0 - r.dirichlet.unwrap()).abs() < 1e-9 * r.dirichlet.unwrap());
        assert_eq!(r.modulus.len(), 6);
        assert_eq!(r.modulus.last().unwrap(), &(32, vec![0.0]));
        assert_eq!(r.eta.len(), 2);
        assert!(r.eta[1] <= r.eta[0]);
        assert!(r.dw_field.unwrap().is_finite());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let a = mc_sweep(&SweepPlan { jobs: Some(1), ..tiny() }).unwrap();
        let b = mc_sweep(&SweepPlan { jobs: Some(3), ..tiny() }).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn validation_lists_every_problem() {
        let plan = SweepPlan { system_sizes: vec![24], replicates: 0, grid_spacing: Some(0.3), ..SweepPlan::default() };
        match plan.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn merge_extends_replicates() {
        let mut a = mc_sweep(&SweepPlan { system_sizes: vec![16], ..tiny() }).unwrap();
        let b = mc_sweep(&SweepPlan { system_sizes: vec![16, 32], replicates: 3, ..tiny() }).unwrap();
        a.merge(b.clone()).unwrap();
        assert_eq!(a.records, b.records);
        let c = mc_sweep(&SweepPlan { grid_spacing: Some(0.5), ..tiny() }).unwrap();
        assert!(a.merge(c).is_err());
    }
}
