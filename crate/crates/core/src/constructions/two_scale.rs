//! The two-scale superadditivity competitor.
//!
//! Block averages of the fine columns form a coarse family of independent
//! Brownian motions on the lattice of size `L/l`. The coarse minimizer is
//! binned to integers, blown back up to a piecewise-affine integer profile on
//! the fine lattice, and the fine energy is then minimized with the profile
//! pinned at the block corners.

use serde::{Deserialize, Serialize};

use crate::energy::{self, HeightConfig};
use crate::error::{domain, Result};
use crate::minimizer::{minimize, minimize_cached, Grid, MinimizeOptions, Span};
use crate::potential::{FieldTable, Potential};

/// `Ŵ_x̂(ĥ) = (1/l) Σ_{x=l(x̂-1)+1}^{lx̂} W_x(lĥ)` on the lattice `{0, …, L/l}`.
///
/// Coarse heights are addressed in units of `δ_min / l`, so the coarse integer
/// `n` and the fine integer `n` name the same physical height `n δ_min`.
pub struct BlockField<'a, P: Potential + ?Sized> {
    fine: &'a P,
    block: usize,
    coarse_size: usize,
}

impl<'a, P: Potential + ?Sized> BlockField<'a, P> {
    pub fn new(fine: &'a P, system_size: usize, block: usize) -> Result<Self> {
        if block == 0 || system_size % block != 0 || system_size > fine.system_size() {
            return domain(format!("block {block} does not tile the system of size {system_size}"));
        }
        Ok(Self { fine, block, coarse_size: system_size / block })
    }

    pub fn block(&self) -> usize {
        self.block
    }
}

impl<P: Potential + ?Sized> Potential for BlockField<'_, P> {
    fn system_size(&self) -> usize {
        self.coarse_size
    }

    fn resolution(&self) -> f64 {
        self.fine.resolution() / self.block as f64
    }

    fn value_at(&self, x_hat: usize, n: i64) -> f64 {
        let l = self.block;
        let s: f64 = (l * (x_hat - 1) + 1..=l * x_hat).map(|x| self.fine.value_at(x, n)).sum();
        s / l as f64
    }

    fn fill_column(&self, x_hat: usize, first: i64, stride: i64, out: &mut [f64]) {
        let l = self.block;
        let mut buf = vec![0.0; out.len()];
        out.fill(0.0);
        for x in l * (x_hat - 1) + 1..=l * x_hat {
            self.fine.fill_column(x, first, stride, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += b;
            }
        }
        let inv = 1.0 / l as f64;
        for o in out.iter_mut() {
            *o *= inv;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseSite {
    pub x_hat: usize,
    /// `ĥ_*(x̂)`.
    pub height: f64,
    /// `Ŵ_x̂(ĥ_*(x̂))`.
    pub field_at_height: f64,
    /// The bin `b(x̂)`, with `ĥ_*(x̂) ∈ (b - ½, b + ½]`.
    pub bin: i64,
    /// `Ŵ_x̂(b(x̂))`.
    pub field_at_bin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoScaleLedger {
    pub system_size: usize,
    pub block: usize,
    /// Interior coarse sites `1..L/l`.
    pub sites: Vec<CoarseSite>,
    pub coarse_minimizer: HeightConfig,
    /// `Ê(ĥ_*)`.
    pub coarse_energy: f64,
    /// `Ê(b)`.
    pub bin_energy: f64,
    /// `h̄`: `l b` at block corners, affine in between.
    pub rescaled: HeightConfig,
    /// `E(h̄)`.
    pub rescaled_energy: f64,
    /// `h̄_*`: the minimizer of `E` pinned to `h̄` at block corners.
    pub competitor: HeightConfig,
    /// `E(h̄_*)`.
    pub competitor_energy: f64,
    /// `min E` on the same realization and grid.
    pub unconstrained_energy: f64,
    /// `l (Ê(b) - Ê(ĥ_*))`.
    pub binning_error: f64,
    /// `E(h̄) - l Ê(b)`.
    pub scaling_error: f64,
    /// `E(h̄_*) - E(h̄)`.
    pub small_scale_term: f64,
}

impl TwoScaleLedger {
    /// `E(h̄_*) ≥ min E` up to rounding.
    pub fn competitor_is_valid(&self) -> bool {
        self.competitor_energy >= self.unconstrained_energy - 1e-9 * self.unconstrained_energy.abs().max(1.0)
    }

    /// `h̄_*(l x̂) = l b(x̂)` at every block corner.
    pub fn pins_hold(&self) -> bool {
        let l = self.block;
        self.sites.iter().all(|s| self.competitor.at(l * s.x_hat) == (l as i64 * s.bin) as f64)
    }
}

/// `b` with `h ∈ (b - ½, b + ½]`.
pub fn bin_of(h: f64) -> i64 {
    let b = (h - 0.5).ceil();
    b as i64
}

/// Builds the competitor `h̄_*` for the zero-boundary problem on `[0, L]`.
///
/// The penalty in `opts` is ignored; both levels minimize `D - W`. The coarse
/// problem uses the grid `δ/l`, which queries the fine field on the same
/// physical heights as the fine grid `δ`.
pub fn two_scale_competitor<P: Potential + ?Sized>(
    field: &P,
    system_size: usize,
    block: usize,
    opts: &MinimizeOptions,
) -> Result<TwoScaleLedger> {
    if !system_size.is_power_of_two() || !block.is_power_of_two() || block <= 1 || block >= system_size {
        return domain(format!("need powers of two with 1 < l < L, got L = {system_size}, l = {block}"));
    }
    let grid = Grid::resolve(field, opts.grid_spacing)?;
    let fine_opts = MinimizeOptions { penalty: 1.0, pins: Vec::new(), ..opts.clone() };
    let coarse_field = BlockField::new(field, system_size, block)?;
    let coarse_size = system_size / block;
    let coarse_opts = MinimizeOptions {
        grid_spacing: Some(grid.delta / block as f64),
        band_half_width: None,
        ..fine_opts.clone()
    };
    let coarse = minimize(&coarse_field, Span::whole(coarse_size), 0.0, 0.0, &coarse_opts)?;
    let bins: Vec<i64> = coarse.config.heights.iter().map(|&h| bin_of(h)).collect();
    let bin_cfg = HeightConfig { x_offset: 0, heights: bins.iter().map(|&b| b as f64).collect() };
    let bin_energy = energy::total_energy(&coarse_field, &bin_cfg)?.total;

    let mut sites = Vec::with_capacity(coarse_size.saturating_sub(1));
    for x_hat in 1..coarse_size {
        let height = coarse.config.heights[x_hat];
        sites.push(CoarseSite {
            x_hat,
            height,
            field_at_height: crate::potential::value(&coarse_field, x_hat, height)?,
            bin: bins[x_hat],
            field_at_bin: crate::potential::value(&coarse_field, x_hat, bins[x_hat] as f64)?,
        });
    }

    let l = block;
    let rescaled_heights: Vec<f64> = (0..=system_size)
        .map(|x| {
            let (k, r) = (x / l, x % l);
            if r == 0 {
                (l as i64 * bins[k]) as f64
            } else {
                (l as i64 * bins[k] + r as i64 * (bins[k + 1] - bins[k])) as f64
            }
        })
        .collect();
    let rescaled = HeightConfig { x_offset: 0, heights: rescaled_heights };
    let rescaled_energy = energy::total_energy(field, &rescaled)?.total;

    let mut table = FieldTable::new(field, grid.stride, 1, system_size - 1);
    let pinned_opts = MinimizeOptions {
        pins: (1..coarse_size).map(|k| (l * k, (l as i64 * bins[k]) as f64)).collect(),
        band_half_width: None,
        ..fine_opts.clone()
    };
    let competitor = minimize_cached(&mut table, Span::whole(system_size), 0.0, 0.0, &pinned_opts)?;
    let mut free = minimize_cached(&mut table, Span::whole(system_size), 0.0, 0.0, &fine_opts)?;
    let competitor_energy = competitor.breakdown.total;
    if competitor_energy < free.breakdown.total {
        // The pinned competitor left the unconstrained band; widen it to cover the competitor.
        let reach = competitor.config.heights.iter().fold(0.0f64, |m, h| m.max(h.abs()));
        let wider = MinimizeOptions { band_half_width: Some(2.0 * reach.max(free.band_half_width)), ..fine_opts.clone() };
        free = minimize_cached(&mut table, Span::whole(system_size), 0.0, 0.0, &wider)?;
    }

    let lf = l as f64;
    Ok(TwoScaleLedger {
        system_size,
        block,
        sites,
        coarse_minimizer: coarse.config.clone(),
        coarse_energy: coarse.breakdown.total,
        bin_energy,
        rescaled,
        rescaled_energy,
        competitor: competitor.config,
        competitor_energy,
        unconstrained_energy: free.breakdown.total,
        binning_error: lf * (bin_energy - coarse.breakdown.total),
        scaling_error: rescaled_energy - lf * bin_energy,
        small_scale_term: competitor_energy - rescaled_energy,
    })
}
