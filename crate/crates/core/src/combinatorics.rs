//! Exact lattice-point counts behind the bin-counting estimate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::multiscale;
use crate::energy::HeightConfig;

pub const MAX_BALL_DIM: usize = 8;
pub const MAX_BALL_RADIUS_SQ: f64 = 64.0;
pub const MAX_BIN_SYSTEM: usize = 16;
pub const MAX_BIN_RATIO: usize = 8;

/// `Z(N, D) = #{y ∈ ℤ^N : (1/N) Σ y² < D}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCount {
    pub n: usize,
    pub d: f64,
    pub z: u64,
}

/// Largest integer `s` with `s < N D`, or `None` when no such `s ≥ 0` exists.
fn budget(n: usize, d: f64) -> Option<u64> {
    let bound = n as f64 * d;
    if bound <= 0.0 {
        return None;
    }
    Some(bound.ceil() as u64 - 1)
}

/// Points of `ℤ^n` with `Σ y² ≤ s`, enumerated coordinate by coordinate.
fn lattice_points(n: usize, s: u64, memo: &mut HashMap<(usize, u64), u64>) -> u64 {
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return 2 * s.isqrt() + 1;
    }
    if let Some(&c) = memo.get(&(n, s)) {
        return c;
    }
    let r = s.isqrt();
    let mut total = lattice_points(n - 1, s, memo);
    for y in 1..=r {
        total += 2 * lattice_points(n - 1, s - y * y, memo);
    }
    memo.insert((n, s), total);
    total
}

fn lattice_count(n: usize, d: f64) -> u64 {
    match budget(n, d) {
        None => 0,
        Some(s) => lattice_points(n, s, &mut HashMap::new()),
    }
}

pub fn count_ball(n: usize, d: f64) -> Result<BallCount> {
    if n == 0 || n > MAX_BALL_DIM {
        return domain(format!("N = {n} outside 1..={MAX_BALL_DIM}"));
    }
    if !(0.0..=MAX_BALL_RADIUS_SQ).contains(&d) {
        return domain(format!("D = {d} outside [0, {MAX_BALL_RADIUS_SQ}]"));
    }
    Ok(BallCount { n, d, z: lattice_count(n, d) })
}

/// `(C₀ (D + 1))^{N/2}`.
pub fn ball_bound(n: usize, d: f64, c0: f64) -> f64 {
    (c0 * (d + 1.0)).powf(n as f64 / 2.0)
}

/// `Z(N, D) ≤ (C₀ (D + 1))^{N/2}`.
pub fn bound_check(n: usize, d: f64, c0: f64) -> Result<bool> {
    let c = count_ball(n, d)?;
    Ok(c.z as f64 <= ball_bound(n, d, c0))
}

/// The search grid: `N = 1, …, 6` and `D = 0, ¼, ½, …, 16`.
pub fn default_grid() -> Vec<(usize, f64)> {
    (1..=6).flat_map(|n| (0..=64).map(move |k| (n, k as f64 / 4.0))).collect()
}

/// Smallest `C₀` for which the bound holds at every grid point, with the point that attains it.
pub fn minimal_c0(grid: &[(usize, f64)]) -> Result<(f64, usize, f64)> {
    let mut best = (0.0, 0, 0.0);
    for &(n, d) in grid {
        let z = count_ball(n, d)?.z;
        if z == 0 {
            continue;
        }
        let c = (z as f64).powf(2.0 / n as f64) / (d + 1.0);
        if c > best.0 {
            best = (c, n, d);
        }
    }
    Ok(best)
}

/// Smallest `C` with `ln Z(N, D) ≤ C N ln D` on the grid points with `D ≥ 2`.
pub fn log_growth_constant(grid: &[(usize, f64)]) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &(n, d) in grid.iter().filter(|p| p.1 >= 2.0) {
        let z = count_ball(n, d)?.z as f64;
        c = c.max(z.ln() / (n as f64 * d.ln()));
    }
    Ok(c)
}

/// Exact count of coarse profiles next to the product bound obtained from the
/// per-scale tent coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinCount {
    pub system_size: usize,
    pub block: usize,
    pub d_hat: f64,
    pub count: u64,
    /// `Π_ρ Z(L/(2ρ), 2(ρ/l)⁴ D̂)` over `ρ ∈ {2l, …, L/2}`.
    pub product_bound: f64,
    /// Coarse values range over `2l·{-k, …, k}`.
    pub box_half_width: i64,
}

fn check_bins(system_size: usize, block: usize) -> Result<()> {
    if !system_size.is_power_of_two() || !block.is_power_of_two() || system_size > MAX_BIN_SYSTEM {
        return domain(format!("need dyadic L <= {MAX_BIN_SYSTEM} and l, got L = {system_size}, l = {block}"));
    }
    let ratio = system_size / block.max(1);
    if block * ratio != system_size || !(4..=MAX_BIN_RATIO).contains(&ratio) {
        return domain(format!("L/l = {ratio} outside 4..={MAX_BIN_RATIO}"));
    }
    Ok(())
}

/// `max_ρ (l/ρ)² D(h̄_ρ)/L` for the profile with values `2l·k` at the coarse nodes.
fn constraint(system_size: usize, block: usize, nodes: &[i64]) -> f64 {
    let step = 2 * block;
    let heights = (0..=system_size)
        .map(|x| {
            let (k, r) = (x / step, x % step);
            let a = (step as i64 * nodes[k]) as f64;
            if r == 0 {
                a
            } else {
                a + ((step as i64 * nodes[k + 1]) as f64 - a) * r as f64 / step as f64
            }
        })
        .collect();
    let h = HeightConfig { x_offset: 0, heights };
    let mut worst: f64 = 0.0;
    let mut rho = step;
    while 2 * rho <= system_size {
        let c = multiscale::component(&h, rho).expect("dyadic scale");
        let d = crate::energy::dirichlet(&c) / system_size as f64;
        worst = worst.max((block as f64 / rho as f64).powi(2) * d);
        rho *= 2;
    }
    worst
}

/// Counts `h̄ : 2l{0, …, L/(2l)} → 2lℤ` with zero ends and
/// `max_ρ (l/ρ)² D(h̄_ρ)/L < D̂`, enumerating coarse values in `2l·{-k, …, k}`.
pub fn count_bins_in_box(system_size: usize, block: usize, d_hat: f64, half_width: i64) -> Result<BinCount> {
    check_bins(system_size, block)?;
    if !(d_hat >= 0.0) || half_width < 0 {
        return domain("D̂ and the box half-width must be non-negative");
    }
    let interior = system_size / (2 * block) - 1;
    let mut nodes = vec![0i64; interior + 2];
    let mut count = 0u64;
    let side = (2 * half_width + 1) as u64;
    for code in 0..side.pow(interior as u32) {
        let mut c = code;
        for v in nodes[1..=interior].iter_mut() {
            *v = (c % side) as i64 - half_width;
            c /= side;
        }
        if constraint(system_size, block, &nodes) < d_hat {
            count += 1;
        }
    }
    let mut product_bound = 1.0;
    let mut rho = 2 * block;
    while 2 * rho <= system_size {
        let n = system_size / (2 * rho);
        product_bound *= lattice_count(n, 2.0 * (rho as f64 / block as f64).powi(4) * d_hat) as f64;
        rho *= 2;
    }
    Ok(BinCount { system_size, block, d_hat, count, product_bound, box_half_width: half_width })
}

/// As [`count_bins_in_box`], with a box wide enough to hold every admissible profile.
///
/// The constraint bounds `D(h̄) < D̂ L Σ_ρ (ρ/l)²`, and `|h̄| ≤ (D(h̄) L / 2)^{1/2}`.
pub fn count_bins(system_size: usize, block: usize, d_hat: f64) -> Result<BinCount> {
    check_bins(system_size, block)?;
    let l = system_size as f64;
    let mut weight = 0.0;
    let mut rho = 2 * block;
    while 2 * rho <= system_size {
        weight += (rho as f64 / block as f64).powi(2);
        rho *= 2;
    }
    let reach = (d_hat * l * weight * l / 2.0).sqrt();
    let half_width = (reach / (2 * block) as f64).floor() as i64;
    count_bins_in_box(system_size, block, d_hat, half_width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(n: usize, d: f64) -> u64 {
        let r = (n as f64 * d).sqrt().ceil() as i64;
        let side = (2 * r + 1) as u64;
        let mut count = 0;
        for code in 0..side.pow(n as u32) {
            let mut c = code;
            let mut s = 0i64;
            for _ in 0..n {
                let y = (c % side) as i64 - r;
                c /= side;
                s += y * y;
            }
            if (s as f64) < n as f64 * d {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn small_balls() {
        assert_eq!(count_ball(1, 2.0).unwrap().z, 3);
        assert_eq!(count_ball(2, 1.0).unwrap().z, 5);
        assert_eq!(count_ball(3, 0.0).unwrap().z, 0);
        assert_eq!(count_ball(1, 0.25).unwrap().z, 1);
        assert_eq!(count_ball(1, 1.0).unwrap().z, 1);
        assert!(count_ball(0, 1.0).is_err());
        assert!(count_ball(9, 1.0).is_err());
        assert!(count_ball(2, 65.0).is_err());
    }

    #[test]
    fn matches_plain_enumeration() {
        for n in 1..=4 {
            for k in 0..=24 {
                let d = k as f64 / 3.0;
                assert_eq!(count_ball(n, d).unwrap().z, brute(n, d), "N {n} D {d}");
            }
        }
    }

    #[test]
    fn bound_examples() {
        assert!(bound_check(1, 2.0, 3.0).unwrap());
        assert!(!bound_check(1, 2.0, 2.9).unwrap());
        let grid = default_grid();
        let (c0, _, _) = minimal_c0(&grid).unwrap();
        assert!(grid.iter().all(|&(n, d)| bound_check(n, d, c0 * (1.0 + 1e-12)).unwrap()));
        assert!(grid.iter().all(|&(n, d)| bound_check(n, d, 2.0 * c0).unwrap()));
    }

    #[test]
    fn bins_degenerate_cases() {
        assert_eq!(count_bins(16, 4, 0.0).unwrap().count, 0);
        let wide = count_bins_in_box(16, 2, 1e12, 2).unwrap();
        assert_eq!(wide.count, 5u64.pow(3));
        assert!(count_bins(32, 4, 1.0).is_err());
        assert!(count_bins(16, 8, 1.0).is_err());
        assert!(count_bins(16, 1, 1.0).is_err());
    }

    #[test]
    fn zero_profile_counts_once_for_positive_budget() {
        assert_eq!(count_bins(16, 4, 1e-9).unwrap().count, 1);
    }

    #[test]
    fn bins_below_product_bound() {
        for (l, b) in [(8, 2), (16, 4), (16, 2)] {
            for d in [0.01, 0.1, 0.5, 1.0, 2.0, 4.0] {
                let c = count_bins(l, b, d).unwrap();
                assert!(c.count as f64 <= c.product_bound, "{c:?}");
                let wider = count_bins_in_box(l, b, d, c.box_half_width + 2).unwrap();
                assert_eq!(wider.count, c.count, "box too narrow for {c:?}");
            }
        }
    }

    #[test]
    fn point_set_is_symmetric() {
        let (n, d) = (3usize, 2.5);
        let r = 3i64;
        let mut pts = std::collections::HashSet::new();
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    if ((a * a + b * b + c * c) as f64) < n as f64 * d {
                        pts.insert([a, b, c]);
                    }
                }
            }
        }
        assert_eq!(pts.len() as u64, count_ball(n, d).unwrap().z);
        for p in &pts {
            assert!(pts.contains(&[p[2], p[0], p[1]]));
            assert!(pts.contains(&[p[1], p[0], p[2]]));
            assert!(pts.contains(&[-p[0], p[1], -p[2]]));
        }
    }

    #[test]
    fn logarithmic_growth_constant() {
        let c = log_growth_constant(&default_grid()).unwrap();
        assert!(c > 0.0 && c < 3.0, "{c}");
    }

    proptest! {
        #[test]
        fn monotone_in_d(n in 1usize..5, k in 0u32..40) {
            let d = k as f64 / 4.0;
            prop_assert!(count_ball(n, d).unwrap().z <= count_ball(n, d + 0.25).unwrap().z);
        }
    }
}
