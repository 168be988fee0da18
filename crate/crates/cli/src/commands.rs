use std::fs::File;
use std::io::{BufReader, Write};

use anyhow::{Context, Result};
use polylab::combinatorics::{self, count_bins};
use polylab::config::ExperimentConfig;
use polylab::constructions::{ding_wirth, two_scale_competitor};
use polylab::multiscale::{decompose, per_scale_energy};
use polylab::stats::{comparison_suite, mc_sweep, replicate_seed, scaling_report, SweepResult};
use polylab::{minimize, PotentialField, Span};
use serde::Serialize;

use crate::output::Artifacts;

const SWEEP_FILE: &str = "sweep.csv";
const BIN_CASES: [(usize, usize); 3] = [(8, 2), (16, 2), (16, 4)];
const BIN_BUDGETS: [f64; 6] = [0.0, 0.1, 0.5, 1.0, 2.0, 4.0];

fn field(cfg: &ExperimentConfig, seed: u64, system_size: usize) -> Result<PotentialField> {
    Ok(PotentialField::with_resolution(seed, system_size, cfg.delta_min)?)
}

#[derive(Serialize)]
struct SimulateSummary {
    system_size: usize,
    breakdown: polylab::EnergyBreakdown,
    band_hits: u32,
    grid_spacing: f64,
    band_half_width: f64,
    per_scale: Vec<(f64, Vec<(usize, f64)>)>,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let out = Artifacts::new(cfg)?;
    let size = cfg.system_sizes[0];
    let seed = cfg.master_seed;
    let f = field(cfg, seed, size)?;
    let opts = cfg.sweep_plan()?.minimize_options();
    let gs = minimize(&f, Span::whole(size), 0.0, 0.0, &opts)?;
    let mut w = out.text("ground_state.csv", "ground_state", seed)?;
    gs.write_csv(&mut w)?;
    w.flush()?;
    let dec = decompose(&gs.config)?;
    let mut w = out.text("decomposition.csv", "decomposition", seed)?;
    dec.write_csv(&mut w)?;
    w.flush()?;
    let mut per_scale = Vec::new();
    for &p in &cfg.exponents {
        per_scale.push((p, per_scale_energy(&dec, p)?.into_iter().collect()));
    }
    let summary = SimulateSummary {
        system_size: size,
        breakdown: gs.breakdown.clone(),
        band_hits: gs.band_hits,
        grid_spacing: gs.grid_spacing,
        band_half_width: gs.band_half_width,
        per_scale,
    };
    out.json("ground_state.json", "ground_state", seed, &summary)?;
    println!(
        "L = {size}, seed = {seed}: min E = {:.6}, D = {:.6}, W = {:.6}",
        gs.breakdown.total, gs.breakdown.dirichlet, gs.breakdown.field
    );
    Ok(())
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let out = Artifacts::new(cfg)?;
    let mut result = mc_sweep(&cfg.sweep_plan()?)?;
    result.config_hash = out.hash().to_string();
    let mut w = out.create(SWEEP_FILE)?;
    result.write_csv(&mut w)?;
    w.flush()?;
    println!("{} records written to {}", result.records.len(), out.path(SWEEP_FILE).display());
    println!("excluded replicates (band exhausted): {}", result.failures());
    if cfg.comparison {
        let seeds: Vec<u64> = (0..cfg.comparison_trials).map(|t| replicate_seed(cfg.master_seed, cfg.comparison_size, t)).collect();
        let counts = comparison_suite(&seeds, cfg.comparison_size, cfg.comparison_trials, &cfg.sweep_plan()?.minimize_options())?;
        out.json("comparison.json", "comparison", cfg.master_seed, &counts)?;
        println!(
            "comparison: {} submodularity and {} order violations in {} trials",
            counts.submodularity_violations, counts.order_violations, counts.order_trials
        );
    }
    Ok(())
}

pub fn report(cfg: &ExperimentConfig) -> Result<()> {
    let out = Artifacts::new(cfg)?;
    let path = out.path(SWEEP_FILE);
    let file = File::open(&path).with_context(|| format!("reading {}; run `sweep` first", path.display()))?;
    let result = SweepResult::read_csv(BufReader::new(file))?;
    let rep = scaling_report(&result)?;
    out.json("report.json", "scaling_report", cfg.master_seed, &rep)?;
    for (name, points) in rep.plot_series() {
        out.series(&format!("plots/{name}.dat"), cfg.master_seed, ("x", "y"), &points)?;
    }
    println!("{:>8} {:>10} {:>10} {:>10} {:>8}", "L", "c_L", "D/L", "W/D", "excluded");
    for s in &rep.sizes {
        println!(
            "{:>8} {:>10.5} {:>10.5} {:>10.5} {:>8}",
            s.system_size, s.c_l.mean, s.dirichlet_per_length.mean, s.field_to_dirichlet.mean, s.excluded
        );
    }
    let excluded: usize = rep.sizes.iter().map(|s| s.excluded).sum();
    println!("D/L vs ln L: slope {:.5} ± {:.5}, R² {:.4}", rep.dirichlet_trend.slope, rep.dirichlet_trend.slope_std_err, rep.dirichlet_trend.r_squared);
    println!("excluded replicates (band exhausted): {excluded}");
    Ok(())
}

pub fn construct(cfg: &ExperimentConfig) -> Result<()> {
    let out = Artifacts::new(cfg)?;
    let seed = cfg.master_seed;
    if cfg.ding_wirth {
        for &size in &cfg.system_sizes {
            let f = field(cfg, seed, size)?;
            let ledger = ding_wirth(&f, size)?;
            out.json(&format!("ding_wirth_L{size}.json"), "ding_wirth", seed, &ledger)?;
            let mut w = out.text(&format!("ding_wirth_L{size}.csv"), "ding_wirth", seed)?;
            ledger.write_csv(&mut w)?;
            w.flush()?;
            println!("Ding-Wirth L = {size}: W = {:.6}, D = {:.6}", ledger.field_energy, polylab::energy::dirichlet(&ledger.config));
        }
    }
    if cfg.two_scale {
        let opts = cfg.sweep_plan()?.minimize_options();
        for &(size, block) in &cfg.two_scale_pairs {
            let f = field(cfg, seed, size)?;
            let ledger = two_scale_competitor(&f, size, block, &opts)?;
            out.json(&format!("two_scale_L{size}_l{block}.json"), "two_scale", seed, &ledger)?;
            println!(
                "two-scale L = {size}, l = {block}: E(competitor) = {:.6}, min E = {:.6}, valid = {}",
                ledger.competitor_energy,
                ledger.unconstrained_energy,
                ledger.competitor_is_valid()
            );
        }
    }
    if !cfg.ding_wirth && !cfg.two_scale {
        log::warn!("construct: both ding_wirth and two_scale are disabled");
    }
    Ok(())
}

pub fn count(cfg: &ExperimentConfig) -> Result<()> {
    let out = Artifacts::new(cfg)?;
    let seed = cfg.master_seed;
    let steps = (cfg.count_max_d * 4.0).floor() as usize;
    let grid: Vec<(usize, f64)> = (1..=cfg.count_max_dim).flat_map(|n| (0..=steps).map(move |k| (n, k as f64 / 4.0))).collect();
    let (c0, n_at, d_at) = combinatorics::minimal_c0(&grid)?;
    let mut w = out.text("count.csv", "count", seed)?;
    writeln!(w, "# minimal C0 on this grid: {c0} (attained at N = {n_at}, D = {d_at})")?;
    writeln!(w, "N,D,Z,bound,ok")?;
    let mut so = std::io::stdout().lock();
    writeln!(so, "minimal C0 = {c0:.6} (N = {n_at}, D = {d_at})")?;
    writeln!(so, "{:>3} {:>7} {:>10} {:>14} {:>4}", "N", "D", "Z", "bound", "ok")?;
    for &(n, d) in &grid {
        let z = combinatorics::count_ball(n, d)?.z;
        let bound = combinatorics::ball_bound(n, d, c0);
        let ok = z as f64 <= bound * (1.0 + 1e-12);
        writeln!(w, "{n},{d},{z},{bound},{ok}")?;
        writeln!(so, "{n:>3} {d:>7} {z:>10} {bound:>14.3} {ok:>4}")?;
    }
    w.flush()?;
    let mut w = out.text("bins.csv", "bins", seed)?;
    writeln!(w, "L,l,D_hat,count,product_bound,ok")?;
    for (size, block) in BIN_CASES {
        for d in BIN_BUDGETS {
            let b = count_bins(size, block, d)?;
            writeln!(w, "{size},{block},{d},{},{},{}", b.count, b.product_bound, b.count as f64 <= b.product_bound)?;
        }
    }
    w.flush()?;
    Ok(())
}
