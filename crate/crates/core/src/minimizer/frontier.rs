use serde::{Deserialize, Serialize};

use super::{minimize_cached, Grid, MinimizeOptions, Span};
use crate::error::{domain, Result};
use crate::potential::{FieldTable, Potential};

/// Penalties swept by default when tracing the frontier.
pub const DEFAULT_PENALTIES: [f64; 8] = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub penalty: f64,
    pub dirichlet_per_length: f64,
    pub field_per_length: f64,
    pub energy_per_length: f64,
}

/// Penalized minimizers across `μ` and the interpolated supremum of `W/L` on `D/L ≤ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierEstimate {
    pub points: Vec<FrontierPoint>,
    pub w1_hat: f64,
    /// Set when no pair of points brackets `D/L = 1`, so `w1_hat` was extrapolated.
    pub extrapolated: bool,
}

/// Traces `μ ↦ (D/L, W/L)` for the zero-boundary problem on `[0, L]`.
///
/// `W1_hat` interpolates linearly in `D/L` after replacing `W/L` by its running
/// maximum, since the constrained supremum is non-decreasing in the radius.
/// Without a bracketing pair the nearest point is carried to `D/L = 1` with
/// the exact `D^{1/4}` scaling of the supremum.
pub fn lagrangian_frontier<P: Potential + ?Sized>(
    field: &P,
    system_size: usize,
    penalties: &[f64],
    opts: &MinimizeOptions,
) -> Result<FrontierEstimate> {
    if penalties.is_empty() {
        return domain("empty penalty list");
    }
    if penalties.windows(2).any(|w| !(w[0] < w[1])) {
        return domain("penalties must be strictly ascending");
    }
    let grid = Grid::resolve(field, opts.grid_spacing)?;
    let mut table = FieldTable::new(field, grid.stride, 1, system_size.saturating_sub(1));
    let size = system_size as f64;
    let mut points = Vec::with_capacity(penalties.len());
    for &mu in penalties {
        let o = MinimizeOptions { penalty: mu, ..opts.clone() };
        let gs = minimize_cached(&mut table, Span::whole(system_size), 0.0, 0.0, &o)?;
        points.push(FrontierPoint {
            penalty: mu,
            dirichlet_per_length: gs.breakdown.dirichlet / size,
            field_per_length: gs.breakdown.field / size,
            energy_per_length: gs.breakdown.total / size,
        });
    }
    let (w1_hat, extrapolated) = interpolate_unit(&points);
    Ok(FrontierEstimate { points, w1_hat: w1_hat.max(0.0), extrapolated })
}

fn interpolate_unit(points: &[FrontierPoint]) -> (f64, bool) {
    let mut curve: Vec<(f64, f64)> = points.iter().map(|p| (p.dirichlet_per_length, p.field_per_length)).collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut running = f64::NEG_INFINITY;
    for c in curve.iter_mut() {
        running = running.max(c.1);
        c.1 = running;
    }
    for w in curve.windows(2) {
        let ((d0, w0), (d1, w1)) = (w[0], w[1]);
        if d0 <= 1.0 && 1.0 <= d1 {
            if d1 == d0 {
                return (w1, false);
            }
            return (w0 + (w1 - w0) * (1.0 - d0) / (d1 - d0), false);
        }
    }
    let (d, w) = if curve[0].0 > 1.0 { curve[0] } else { curve[curve.len() - 1] };
    if d <= 0.0 {
        return (0.0, true);
    }
    (w * d.powf(-0.25), true)
}
