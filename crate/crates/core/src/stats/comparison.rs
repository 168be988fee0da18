//! Monte Carlo checks of submodularity and of the comparison principle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{total_energy, HeightConfig};
use crate::error::{domain, Result};
use crate::minimizer::{minimize_cached, Grid, MinimizeOptions, Span};
use crate::potential::{FieldTable, Potential, PotentialField};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCounts {
    pub submodularity_trials: usize,
    pub submodularity_violations: usize,
    /// Largest `E(h∧h') + E(h∨h') - E(h) - E(h')` seen.
    pub worst_submodularity_excess: f64,
    pub order_trials: usize,
    pub order_violations: usize,
    /// Largest `max_x (h_*(x) - h'_*(x))` seen.
    pub worst_order_excess: f64,
    pub grid_spacing: f64,
}

impl ComparisonCounts {
    pub fn clean(&self) -> bool {
        self.submodularity_violations == 0 && self.order_violations == 0
    }
}

/// `E(h∧h') + E(h∨h') - E(h) - E(h')`, non-positive for every pair.
pub fn submodularity_excess<P: Potential + ?Sized>(field: &P, h: &HeightConfig, g: &HeightConfig) -> Result<f64> {
    let lo = HeightConfig { x_offset: h.x_offset, heights: h.heights.iter().zip(&g.heights).map(|(a, b)| a.min(*b)).collect() };
    let hi = HeightConfig { x_offset: h.x_offset, heights: h.heights.iter().zip(&g.heights).map(|(a, b)| a.max(*b)).collect() };
    let e = |c: &HeightConfig| total_energy(field, c).map(|b| b.total);
    Ok(e(&lo)? + e(&hi)? - e(h)? - e(g)?)
}

/// Runs `trials` submodularity pairs and `trials` ordered-boundary minimizer pairs
/// at system size `L`, cycling through the field seeds.
pub fn comparison_suite(seeds: &[u64], system_size: usize, trials: usize, opts: &MinimizeOptions) -> Result<ComparisonCounts> {
    if trials == 0 || seeds.is_empty() {
        return domain("comparison suite needs at least one trial and one seed");
    }
    let l = system_size as f64;
    let mut out = ComparisonCounts { submodularity_trials: trials, order_trials: trials, ..Default::default() };
    for t in 0..trials {
        let seed = seeds[t % seeds.len()];
        let field = PotentialField::new(seed, system_size)?;
        let grid = Grid::resolve(&field, opts.grid_spacing)?;
        out.grid_spacing = grid.delta;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));

        let mut draw = || HeightConfig {
            x_offset: 0,
            heights: (0..=system_size).map(|_| rng.gen_range(-0.5 * l..0.5 * l)).collect(),
        };
        let (h, g) = (draw(), draw());
        let excess = submodularity_excess(&field, &h, &g)?;
        let scale = total_energy(&field, &h)?.total.abs() + total_energy(&field, &g)?.total.abs();
        out.worst_submodularity_excess = out.worst_submodularity_excess.max(excess);
        if excess > 1e-9 * scale.max(1.0) {
            out.submodularity_violations += 1;
        }

        let mut boundary = || grid.delta * rng.gen_range(0..=(l / grid.delta) as i64) as f64;
        let (a, b) = (boundary(), boundary());
        let (a2, b2) = (a + boundary(), b + boundary());
        let mut table = FieldTable::new(&field, grid.stride, 1, system_size - 1);
        let low = minimize_cached(&mut table, Span::whole(system_size), a, b, opts)?;
        let high = minimize_cached(&mut table, Span::whole(system_size), a2, b2, opts)?;
        let worst = low.config.heights.iter().zip(&high.config.heights).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
        out.worst_order_excess = out.worst_order_excess.max(worst);
        if worst > grid.delta {
            out.order_violations += 1;
        }
    }
    Ok(out)
}
