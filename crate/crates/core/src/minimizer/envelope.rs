use serde::{Deserialize, Serialize};

use super::{minimize_cached, GroundState, Grid, MinimizeOptions, Span};
use crate::error::{domain, Result};
use crate::potential::{FieldTable, Potential};

/// Corner minimizers bracketing a bin of boundary data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnvelopeResult {
    /// Boundary data `(h̄0 - l, h̄1 - l)`.
    pub lower: GroundState,
    /// Boundary data `(h̄0 + l, h̄1 + l)`.
    pub upper: GroundState,
    /// Upper bound on the normalized midpoint deviation over the bin.
    pub x: f64,
}

/// Minimizers on `[start, start + 2l]` for the lowest and highest corners of
/// the bin `[h̄0 - l, h̄0 + l] × [h̄1 - l, h̄1 + l]`.
///
/// By order preservation every minimizer with data in the bin lies between
/// the two, so `(max{dev_upper, -dev_lower} + 2l) / 2l` bounds the midpoint
/// deviation `|h(mid) - (h0 + h1)/2| / 2l` over the whole bin.
pub fn envelope_minimizers<P: Potential + ?Sized>(
    field: &P,
    start: usize,
    half_len: usize,
    centre: (f64, f64),
    opts: &MinimizeOptions,
) -> Result<EnvelopeResult> {
    if half_len == 0 {
        return domain("half-length must be positive");
    }
    let l = half_len as f64;
    let (c0, c1) = centre;
    for c in [c0, c1] {
        if !c.is_finite() || (c / l).fract() != 0.0 {
            return domain(format!("bin centre {c} is not on the grid {l}ℤ"));
        }
    }
    let grid = Grid::resolve(field, opts.grid_spacing)?;
    let span = Span::new(start, 2 * half_len);
    let mut table = FieldTable::new(field, grid.stride, start + 1, span.len - 1);
    let lower = minimize_cached(&mut table, span, c0 - l, c1 - l, opts)?;
    let upper = minimize_cached(&mut table, span, c0 + l, c1 + l, opts)?;
    let mid = start + half_len;
    let dev_lower = lower.config.at(mid) - 0.5 * (c0 + c1 - 2.0 * l);
    let dev_upper = upper.config.at(mid) - 0.5 * (c0 + c1 + 2.0 * l);
    let x = (dev_upper.max(-dev_lower) + 2.0 * l) / (2.0 * l);
    Ok(EnvelopeResult { lower, upper, x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{PotentialField, ZeroField};

    #[test]
    fn zero_field_gives_unit_bound() {
        let z = ZeroField::new(16, 0.25);
        let r = envelope_minimizers(&z, 0, 8, (8.0, -16.0), &MinimizeOptions::default()).unwrap();
        assert_eq!(r.x, 1.0);
    }

    #[test]
    fn corners_are_ordered() {
        for seed in 0..20 {
            let f = PotentialField::with_resolution_exp(seed, 32, 3).unwrap();
            let r = envelope_minimizers(&f, 8, 8, (0.0, 8.0), &MinimizeOptions::default()).unwrap();
            for (a, b) in r.lower.config.heights.iter().zip(&r.upper.config.heights) {
                assert!(a <= b);
            }
            assert!(r.x >= 0.0);
        }
    }

    #[test]
    fn centres_must_be_on_the_bin_grid() {
        let f = PotentialField::new(0, 16).unwrap();
        assert!(envelope_minimizers(&f, 0, 4, (2.0, 0.0), &MinimizeOptions::default()).is_err());
    }
}
