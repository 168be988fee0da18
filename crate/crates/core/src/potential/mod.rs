//! The quenched disorder: one two-sided Brownian motion per interior column.
//!
//! Each motion is built hierarchically. Values at heights `±2^k` come from a
//! chain of keyed Gaussian increments (variance `2^(k-1)`), and everything in
//! between is filled in by dyadic midpoint bridges down to the resolution
//! floor `δ_min`. Every Gaussian is keyed on `(seed, column, side, level,
//! index)`, where `level`/`index` name the dyadic interval in absolute height
//! units, so values do not depend on query order, on the thread that asks, or
//! on `δ_min` itself: halving `δ_min` only adds nodes.

mod keyed;
mod table;

pub use keyed::{hash_words, keyed_normal, mix64, normal_quantile, open_unit};
pub use table::FieldTable;

use crate::error::{domain, Result};

/// Default resolution exponent: `δ_min = 2^-6`.
pub const DEFAULT_RESOLUTION_EXP: u32 = 6;

const TAG_TOP: u64 = 0x746f_705f_6368_6169;
const TAG_NODE: u64 = 0x6272_6964_6765_5f6e;
const MAX_UNITS: i64 = 1 << 52;

/// Anything that can serve as a column potential for the minimizer.
///
/// Heights are addressed in integer multiples of [`Potential::resolution`].
pub trait Potential: Sync {
    /// System size `L`; interior columns are `1..=L-1`.
    fn system_size(&self) -> usize;

    /// Height quantum of the integer addressing.
    fn resolution(&self) -> f64;

    /// Value at column `x` and height `n * resolution()`.
    fn value_at(&self, x: usize, n: i64) -> f64;

    /// Writes the values at heights `(first + t * stride) * resolution()` for
    /// `t = 0..out.len()` into `out`. `stride` must be positive.
    fn fill_column(&self, x: usize, first: i64, stride: i64, out: &mut [f64]) {
        for (t, slot) in out.iter_mut().enumerate() {
            *slot = self.value_at(x, first + t as i64 * stride);
        }
    }
}

/// Checks that `x` is an interior column of a system of size `size`.
pub fn check_column(size: usize, x: usize) -> Result<()> {
    if x == 0 || x >= size {
        return domain(format!("column {x} outside 1..={}", size.saturating_sub(1)));
    }
    Ok(())
}

/// Rounds a real height to the nearest multiple of `resolution`.
pub fn height_units(resolution: f64, y: f64) -> Result<i64> {
    if !y.is_finite() {
        return domain(format!("non-finite height {y}"));
    }
    let n = (y / resolution).round();
    if n.abs() >= MAX_UNITS as f64 {
        return domain(format!("height {y} beyond the addressable range"));
    }
    Ok(n as i64)
}

/// `W(x, y)` with domain checks; `y` is rounded to the potential's resolution.
pub fn value<P: Potential + ?Sized>(field: &P, x: usize, y: f64) -> Result<f64> {
    check_column(field.system_size(), x)?;
    let n = height_units(field.resolution(), y)?;
    Ok(field.value_at(x, n))
}

/// `W(x, y_hi) - W(x, y_lo)`.
pub fn increment<P: Potential + ?Sized>(field: &P, x: usize, y_lo: f64, y_hi: f64) -> Result<f64> {
    Ok(value(field, x, y_hi)? - value(field, x, y_lo)?)
}

/// Semi-discrete white-noise potential with lazily evaluated Brownian columns.
#[derive(Clone, Debug)]
pub struct PotentialField {
    seed: u64,
    system_size: usize,
    resolution_exp: u32,
}

impl PotentialField {
    /// Field for a system of size `L` with the default resolution floor.
    pub fn new(seed: u64, system_size: usize) -> Result<Self> {
        Self::with_resolution_exp(seed, system_size, DEFAULT_RESOLUTION_EXP)
    }

    /// Field with `δ_min = 2^-exp`.
    pub fn with_resolution_exp(seed: u64, system_size: usize, exp: u32) -> Result<Self> {
        if system_size < 1 {
            return domain("system size must be positive");
        }
        if exp > 40 {
            return domain(format!("resolution exponent {exp} too fine (max 40)"));
        }
        Ok(Self { seed, system_size, resolution_exp: exp })
    }

    /// Field with an explicit `δ_min`, which must be `2^-k` for some `k >= 0`.
    pub fn with_resolution(seed: u64, system_size: usize, delta_min: f64) -> Result<Self> {
        Self::with_resolution_exp(seed, system_size, resolution_exponent(delta_min)?)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn resolution_exp(&self) -> u32 {
        self.resolution_exp
    }

    /// `W(x, y)`; see [`value`].
    pub fn value(&self, x: usize, y: f64) -> Result<f64> {
        value(self, x, y)
    }

    /// `W(x, y_hi) - W(x, y_lo)`; see [`increment`].
    pub fn increment(&self, x: usize, y_lo: f64, y_hi: f64) -> Result<f64> {
        increment(self, x, y_lo, y_hi)
    }

    #[inline]
    fn unit(&self) -> i64 {
        1i64 << self.resolution_exp
    }

    #[inline]
    fn column_key(&self, x: usize, negative: bool) -> u64 {
        hash_words(&[self.seed, x as u64, negative as u64])
    }

    /// Key shared by all dyadic intervals of length `2^level` in one column side.
    #[inline]
    fn level_key(column_key: u64, level: i32) -> u64 {
        mix64(column_key ^ mix64(TAG_NODE ^ (level as i64 as u64)))
    }

    /// Gaussian attached to the interval `[index * 2^level, (index+1) * 2^level]`.
    #[inline]
    fn node_normal(level_key: u64, index: i64) -> f64 {
        keyed_normal(level_key.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }

    /// `W(2^j)` on one side, for `j = 0..=top`.
    fn top_chain(column_key: u64, top: u32) -> Vec<f64> {
        let mut values = Vec::with_capacity(top as usize + 1);
        let mut w = keyed_normal(mix64(column_key ^ TAG_TOP));
        values.push(w);
        for k in 1..=top {
            let var = (1u64 << (k - 1)) as f64;
            w += var.sqrt() * keyed_normal(mix64(column_key ^ TAG_TOP ^ mix64(k as u64)));
            values.push(w);
        }
        values
    }

    /// Smallest `j >= 0` with `n <= 2^j * unit`.
    fn top_level(&self, n: i64) -> u32 {
        let unit = self.unit();
        let mut j = 0u32;
        while (unit << j) < n {
            j += 1;
        }
        j
    }

    /// Dyadic level (log2 of the interval length in height units) of an interval of `len` units.
    #[inline]
    fn level_of(&self, len: i64) -> i32 {
        len.trailing_zeros() as i32 - self.resolution_exp as i32
    }

    /// The top interval containing `n > 0`: `(start, len, w_start, w_end)`.
    fn top_interval(&self, chain: &[f64], j: u32) -> (i64, i64, f64, f64) {
        let unit = self.unit();
        if j == 0 {
            (0, unit, 0.0, chain[0])
        } else {
            let start = unit << (j - 1);
            (start, start, chain[j as usize - 1], chain[j as usize])
        }
    }

    fn value_one_side(&self, x: usize, negative: bool, n: i64) -> f64 {
        debug_assert!(n > 0);
        let ck = self.column_key(x, negative);
        let j = self.top_level(n);
        let chain = Self::top_chain(ck, j);
        let (mut a, mut len, mut wa, mut wb) = self.top_interval(&chain, j);
        let quantum = self.resolution();
        loop {
            if n == a {
                return wa;
            }
            if n == a + len {
                return wb;
            }
            let half = len / 2;
            let mid = a + half;
            let lk = Self::level_key(ck, self.level_of(len));
            let wm = 0.5 * (wa + wb) + 0.5 * (len as f64 * quantum).sqrt() * Self::node_normal(lk, a / len);
            if n < mid {
                wb = wm;
            } else {
                a = mid;
                wa = wm;
            }
            len = half;
        }
    }

    /// Bulk evaluation on one side at positions `q0 + u * step` (`u < count`, all `> 0`).
    fn fill_one_side(&self, x: usize, negative: bool, prog: Progression, out: &mut [f64], map: impl Fn(usize) -> usize + Copy) {
        if prog.count == 0 {
            return;
        }
        let ck = self.column_key(x, negative);
        let last = prog.q0 + (prog.count as i64 - 1) * prog.step;
        let j_max = self.top_level(last);
        let chain = Self::top_chain(ck, j_max);
        let j_min = self.top_level(prog.q0);
        let mut levels = LevelCache::new(ck, self.resolution_exp, self.resolution());
        let aligned = prog.step.count_ones() == 1 && prog.q0 % prog.step == 0;
        for j in j_min..=j_max {
            let (a, len, wa, wb) = self.top_interval(&chain, j);
            if let Some(u) = prog.index_of(a) {
                if a > 0 {
                    out[map(u)] = wa;
                }
            }
            if let Some(u) = prog.index_of(a + len) {
                out[map(u)] = wb;
            }
            if aligned {
                let ctx = Aligned { lo: prog.q0, hi: last, shift: prog.step.trailing_zeros(), step: prog.step };
                refine_aligned(&mut levels, &ctx, a, len, wa, wb, out, map);
            } else {
                refine(&mut levels, a, len, wa, wb, &prog, out, map);
            }
        }
    }
}

/// Level keys and bridge scales, computed once per bulk fill.
struct LevelCache {
    column_key: u64,
    exp: u32,
    quantum: f64,
    keys: [u64; 64],
    scales: [f64; 64],
    ready: u64,
}

impl LevelCache {
    fn new(column_key: u64, exp: u32, quantum: f64) -> Self {
        Self { column_key, exp, quantum, keys: [0; 64], scales: [0.0; 64], ready: 0 }
    }

    /// `(level key, ½√(len δ_min))` for an interval of `len` units.
    #[inline]
    fn get(&mut self, len: i64) -> (u64, f64) {
        let t = len.trailing_zeros() as usize;
        if self.ready & (1 << t) == 0 {
            let level = t as i32 - self.exp as i32;
            self.keys[t] = PotentialField::level_key(self.column_key, level);
            self.scales[t] = 0.5 * (len as f64 * self.quantum).sqrt();
            self.ready |= 1 << t;
        }
        (self.keys[t], self.scales[t])
    }
}

struct Aligned {
    lo: i64,
    hi: i64,
    shift: u32,
    step: i64,
}

/// Refinement when every requested position is a multiple of a power-of-two step.
#[allow(clippy::too_many_arguments)]
fn refine_aligned(levels: &mut LevelCache, ctx: &Aligned, a: i64, len: i64, wa: f64, wb: f64, out: &mut [f64], map: impl Fn(usize) -> usize + Copy) {
    if len <= ctx.step || a + len <= ctx.lo || a >= ctx.hi {
        return;
    }
    let half = len >> 1;
    let mid = a + half;
    let (key, scale) = levels.get(len);
    let wm = 0.5 * (wa + wb) + scale * PotentialField::node_normal(key, a >> len.trailing_zeros());
    if mid >= ctx.lo && mid <= ctx.hi {
        out[map(((mid - ctx.lo) >> ctx.shift) as usize)] = wm;
    }
    refine_aligned(levels, ctx, a, half, wa, wm, out, map);
    refine_aligned(levels, ctx, mid, half, wm, wb, out, map);
}

#[allow(clippy::too_many_arguments)]
fn refine(levels: &mut LevelCache, a: i64, len: i64, wa: f64, wb: f64, prog: &Progression, out: &mut [f64], map: impl Fn(usize) -> usize + Copy) {
    if len < 2 || !prog.any_inside(a, a + len) {
        return;
    }
    let half = len / 2;
    let mid = a + half;
    let (key, scale) = levels.get(len);
    let wm = 0.5 * (wa + wb) + scale * PotentialField::node_normal(key, a / len);
    if let Some(u) = prog.index_of(mid) {
        out[map(u)] = wm;
    }
    refine(levels, a, half, wa, wm, prog, out, map);
    refine(levels, mid, half, wm, wb, prog, out, map);
}

impl Potential for PotentialField {
    fn system_size(&self) -> usize {
        self.system_size
    }

    fn resolution(&self) -> f64 {
        1.0 / self.unit() as f64
    }

    fn value_at(&self, x: usize, n: i64) -> f64 {
        match n.signum() {
            0 => 0.0,
            1 => self.value_one_side(x, false, n),
            _ => self.value_one_side(x, true, -n),
        }
    }

    fn fill_column(&self, x: usize, first: i64, stride: i64, out: &mut [f64]) {
        assert!(stride > 0, "stride must be positive");
        let count = out.len();
        if count == 0 {
            return;
        }
        // t in [0, neg_end) are negative heights, t == zero_at (if any) is zero.
        let neg_end = if first >= 0 { 0 } else { (((-first) + stride - 1) / stride) as usize }.min(count);
        if neg_end > 0 {
            // Ascending |p| runs over t = neg_end-1 down to 0.
            let t_last = neg_end - 1;
            let q0 = -(first + t_last as i64 * stride);
            let prog = Progression { q0, step: stride, count: neg_end };
            self.fill_one_side(x, true, prog, out, move |u| t_last - u);
        }
        let mut t0 = neg_end;
        if t0 < count && first + t0 as i64 * stride == 0 {
            out[t0] = 0.0;
            t0 += 1;
        }
        if t0 < count {
            let q0 = first + t0 as i64 * stride;
            let prog = Progression { q0, step: stride, count: count - t0 };
            self.fill_one_side(x, false, prog, out, move |u| t0 + u);
        }
    }
}

/// `δ_min = 2^-k` → `k`.
pub fn resolution_exponent(delta_min: f64) -> Result<u32> {
    if !(delta_min > 0.0 && delta_min <= 1.0) {
        return domain(format!("resolution floor {delta_min} must lie in (0, 1]"));
    }
    let k = (-delta_min.log2()).round();
    if (2f64.powi(-(k as i32)) - delta_min).abs() > 0.0 || k > 40.0 {
        return domain(format!("resolution floor {delta_min} must be a power of two 2^-k with k <= 40"));
    }
    Ok(k as u32)
}

/// Positions `q0 + u * step`, `u = 0..count`.
#[derive(Clone, Copy, Debug)]
struct Progression {
    q0: i64,
    step: i64,
    count: usize,
}

impl Progression {
    #[inline]
    fn index_of(&self, p: i64) -> Option<usize> {
        let d = p - self.q0;
        if d < 0 || d % self.step != 0 {
            return None;
        }
        let u = (d / self.step) as usize;
        (u < self.count).then_some(u)
    }

    /// Whether some position lies strictly between `a` and `b`.
    #[inline]
    fn any_inside(&self, a: i64, b: i64) -> bool {
        let u = if a < self.q0 { 0 } else { (a - self.q0) / self.step + 1 };
        if u as usize >= self.count {
            return false;
        }
        self.q0 + u * self.step < b
    }
}

/// The zero potential: every column is identically zero.
#[derive(Clone, Debug)]
pub struct ZeroField {
    system_size: usize,
    resolution: f64,
}

impl ZeroField {
    pub fn new(system_size: usize, resolution: f64) -> Self {
        Self { system_size, resolution }
    }
}

impl Potential for ZeroField {
    fn system_size(&self) -> usize {
        self.system_size
    }

    fn resolution(&self) -> f64 {
        self.resolution
    }

    fn value_at(&self, _x: usize, _n: i64) -> f64 {
        0.0
    }

    fn fill_column(&self, _x: usize, _first: i64, _stride: i64, out: &mut [f64]) {
        out.fill(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_at_origin() {
        let f = PotentialField::new(7, 16).unwrap();
        for x in 1..16 {
            assert_eq!(f.value(x, 0.0).unwrap(), 0.0);
            assert_eq!(f.value(x, 1e-9).unwrap(), 0.0);
        }
    }

    #[test]
    fn purity_under_interleaving() {
        let f = PotentialField::new(11, 8).unwrap();
        let first = f.value(3, 1.25).unwrap();
        for x in 1..8 {
            for k in -40..40 {
                let _ = f.value(x, k as f64 * 0.37).unwrap();
            }
        }
        let mut buf = vec![0.0; 500];
        f.fill_column(3, -250, 1, &mut buf);
        assert_eq!(first.to_bits(), f.value(3, 1.25).unwrap().to_bits());
    }

    #[test]
    fn domain_errors() {
        let f = PotentialField::new(1, 8).unwrap();
        assert!(f.value(0, 1.0).is_err());
        assert!(f.value(8, 1.0).is_err());
        assert!(f.value(3, f64::NAN).is_err());
        assert!(f.value(3, f64::INFINITY).is_err());
        assert!(PotentialField::with_resolution(1, 8, 0.3).is_err());
        assert!(PotentialField::with_resolution(1, 8, 0.125).is_ok());
    }

    #[test]
    fn bulk_fill_matches_point_queries() {
        let f = PotentialField::with_resolution_exp(5, 10, 4).unwrap();
        for &(first, stride, count) in &[(-37i64, 1i64, 90usize), (-64, 4, 50), (3, 3, 40), (-5, 2, 3), (0, 8, 30), (-200, 16, 40), (100, 1, 5)] {
            let mut out = vec![f64::NAN; count];
            f.fill_column(4, first, stride, &mut out);
            for (t, v) in out.iter().enumerate() {
                let n = first + t as i64 * stride;
                assert_eq!(v.to_bits(), f.value_at(4, n).to_bits(), "first={first} stride={stride} t={t}");
            }
        }
    }

    #[test]
    fn refining_resolution_keeps_values() {
        let coarse = PotentialField::with_resolution_exp(9, 6, 3).unwrap();
        let fine = PotentialField::with_resolution_exp(9, 6, 7).unwrap();
        for k in -50..50 {
            let y = k as f64 * 0.125;
            assert_eq!(coarse.value(2, y).unwrap().to_bits(), fine.value(2, y).unwrap().to_bits());
        }
    }

    #[test]
    fn columns_and_seeds_differ() {
        let a = PotentialField::new(1, 8).unwrap();
        let b = PotentialField::new(2, 8).unwrap();
        assert_ne!(a.value(2, 1.0).unwrap(), a.value(3, 1.0).unwrap());
        assert_ne!(a.value(2, 1.0).unwrap(), b.value(2, 1.0).unwrap());
        assert_ne!(a.value(2, 1.0).unwrap(), a.value(2, -1.0).unwrap());
    }

    #[test]
    fn increment_wrappers() {
        let f = PotentialField::new(3, 8).unwrap();
        assert_eq!(f.increment(2, 0.7, 0.7).unwrap(), 0.0);
        assert_eq!(f.increment(2, 0.0, 2.5).unwrap(), f.value(2, 2.5).unwrap());
    }

    #[test]
    fn zero_field_is_zero() {
        let z = ZeroField::new(8, 0.25);
        let mut out = vec![1.0; 5];
        z.fill_column(3, -2, 1, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
        assert_eq!(value(&z, 3, 2.0).unwrap(), 0.0);
    }
}
