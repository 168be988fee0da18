//! Exact grid ground states of `μD - W`.
//!
//! Interior heights range over a grid `δℤ` restricted to a band around the
//! interpolation of the boundary data (and pins). A forward dynamic program
//! over sites computes the optimum; the inner minimization over the previous
//! height is a one-dimensional squared-distance transform, done in `O(K)` per
//! site with a lower envelope of parabolas.

mod envelope;
mod frontier;

pub use envelope::{envelope_minimizers, EnvelopeResult};
pub use frontier::{lagrangian_frontier, FrontierEstimate, FrontierPoint, DEFAULT_PENALTIES};

use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyBreakdown, HeightConfig};
use crate::error::{domain, Error, Result};
use crate::potential::{check_column, FieldTable, Potential};

/// Largest DP table (sites × band points) a single call may allocate.
pub const MAX_CELLS: usize = 1 << 28;

/// How grid ties are resolved when several predecessors give the same cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    /// Prefer the smallest `|height|`, then the lower height.
    #[default]
    SmallestAbsThenLower,
}

/// A lattice interval `[start, start + len]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

impl Span {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    /// `[0, L]`.
    pub fn whole(system_size: usize) -> Self {
        Self { start: 0, len: system_size }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Height grid `δ`; defaults to the field's resolution.
    pub grid_spacing: Option<f64>,
    /// Initial band half-width `B`; see [`default_half_width`].
    pub band_half_width: Option<f64>,
    pub adaptive_band: bool,
    pub max_doublings: u32,
    /// Weight `μ` of the Dirichlet term.
    pub penalty: f64,
    /// `(site, height)` constraints; heights must lie on the grid.
    pub pins: Vec<(usize, f64)>,
    pub tie_break: TieBreak,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grid_spacing: None,
            band_half_width: None,
            adaptive_band: true,
            max_doublings: 6,
            penalty: 1.0,
            pins: Vec::new(),
            tie_break: TieBreak::SmallestAbsThenLower,
        }
    }
}

impl MinimizeOptions {
    pub fn with_grid(mut self, delta: f64) -> Self {
        self.grid_spacing = Some(delta);
        self
    }

    pub fn with_band(mut self, half_width: f64) -> Self {
        self.band_half_width = Some(half_width);
        self
    }

    pub fn with_penalty(mut self, mu: f64) -> Self {
        self.penalty = mu;
        self
    }

    pub fn fixed_band(mut self) -> Self {
        self.adaptive_band = false;
        self
    }
}

/// A grid minimizer with its energies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundState {
    pub config: HeightConfig,
    /// Energies of `E = D - W` (at unit weight).
    pub breakdown: EnergyBreakdown,
    /// The optimized objective `μD - W`.
    pub objective: f64,
    pub penalty: f64,
    pub band_hits: u32,
    pub grid_spacing: f64,
    pub band_half_width: f64,
}

impl GroundState {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "height"])?;
        for (i, h) in self.config.heights.iter().enumerate() {
            w.serialize((self.config.x_offset + i, h))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Grid step in field units and in height units.
#[derive(Clone, Copy, Debug)]
pub struct Grid {
    pub stride: i64,
    pub delta: f64,
}

impl Grid {
    pub fn resolve<P: Potential + ?Sized>(field: &P, spacing: Option<f64>) -> Result<Self> {
        let res = field.resolution();
        let delta = spacing.unwrap_or(res);
        if !(delta.is_finite() && delta > 0.0) {
            return domain(format!("grid spacing {delta} must be positive"));
        }
        let ratio = delta / res;
        let stride = ratio.round();
        if stride < 1.0 || (ratio - stride).abs() > 1e-9 * ratio {
            return domain(format!("grid spacing {delta} is not a positive multiple of the field resolution {res}"));
        }
        Ok(Self { stride: stride as i64, delta: stride * res })
    }

    /// Grid index of an on-grid height.
    pub fn index_of(&self, y: f64) -> Option<i64> {
        let r = y / self.delta;
        let k = r.round();
        ((r - k).abs() <= 1e-9 * r.abs().max(1.0)).then_some(k as i64)
    }
}

/// Exact grid minimizer of `μD - W` on `span` with boundary values `(h0, h1)`.
pub fn minimize<P: Potential + ?Sized>(field: &P, span: Span, h0: f64, h1: f64, opts: &MinimizeOptions) -> Result<GroundState> {
    let grid = Grid::resolve(field, opts.grid_spacing)?;
    let mut table = FieldTable::new(field, grid.stride, span.start + 1, span.len.saturating_sub(1));
    minimize_cached(&mut table, span, h0, h1, opts)
}

/// [`minimize`] reusing the column values cached in `table`.
///
/// The table must cover the interior columns of `span` and use the grid of `opts`.
pub fn minimize_cached<P: Potential + ?Sized>(
    table: &mut FieldTable<'_, P>,
    span: Span,
    h0: f64,
    h1: f64,
    opts: &MinimizeOptions,
) -> Result<GroundState> {
    let field = table.field();
    let grid = Grid::resolve(field, opts.grid_spacing)?;
    if grid.stride != table.stride() {
        return domain("field table grid does not match the requested grid spacing");
    }
    if span.len == 0 {
        return domain("empty span");
    }
    if span.end() > field.system_size() {
        return domain(format!("span [{}, {}] exceeds the lattice [0, {}]", span.start, span.end(), field.system_size()));
    }
    if span.len >= 2 {
        check_column(field.system_size(), span.start + 1)?;
    }
    if !(h0.is_finite() && h1.is_finite()) {
        return domain("boundary values must be finite");
    }
    if !(opts.penalty.is_finite() && opts.penalty > 0.0) {
        return domain(format!("penalty {} must be positive", opts.penalty));
    }
    let pins = resolve_pins(span, &grid, &opts.pins)?;
    let mut half_width = match opts.band_half_width {
        Some(b) => b,
        None => default_half_width(span, &pins, grid.delta),
    };
    if !(half_width >= grid.delta) {
        return domain(format!("band half-width {half_width} is below the grid spacing {}", grid.delta));
    }

    let centre = band_centre(span, h0, h1, &pins, grid.delta);
    let mut hits = 0u32;
    loop {
        let run = run_dp(table, span, h0, h1, &grid, half_width, opts.penalty, &pins, &centre)?;
        if opts.adaptive_band && span.len >= 2 {
            if let Some(site) = run.edge_site {
                if hits >= opts.max_doublings {
                    return Err(Error::BandExhausted { doublings: hits, half_width, site: span.start + site });
                }
                hits += 1;
                half_width *= 2.0;
                continue;
            }
        }
        let config = HeightConfig { x_offset: span.start, heights: run.heights };
        let breakdown = energy::total_energy(field, &config)?;
        let objective = opts.penalty * breakdown.dirichlet - breakdown.field;
        if (objective - run.value).abs() > 1e-9 * run.value.abs().max(1.0) {
            return Err(Error::Inconsistent(format!(
                "dynamic-programming optimum {} differs from the recomputed energy {objective}",
                run.value
            )));
        }
        return Ok(GroundState {
            config,
            breakdown,
            objective,
            penalty: opts.penalty,
            band_hits: hits,
            grid_spacing: grid.delta,
            band_half_width: half_width,
        });
    }
}

/// `max(4√g, g)` rounded to the grid, where `g` is the longest run of sites
/// between consecutive anchors (boundary points and pins).
///
/// Minimizer excursions grow linearly with the run length, so a band of
/// order `√g` is routinely too narrow; a too-narrow band can hide the true
/// optimum without its own optimum ever touching the edge.
pub fn default_half_width(span: Span, pins: &[(usize, i64)], delta: f64) -> f64 {
    let mut prev = 0usize;
    let mut gap = 0usize;
    for &(i, _) in pins.iter().chain(std::iter::once(&(span.len, 0))) {
        gap = gap.max(i - prev);
        prev = i;
    }
    let g = gap as f64;
    (g.max(4.0 * g.sqrt()) / delta).round().max(1.0) * delta
}

/// Pins as `local site -> grid index`, sorted by site.
fn resolve_pins(span: Span, grid: &Grid, pins: &[(usize, f64)]) -> Result<Vec<(usize, i64)>> {
    let mut out: Vec<(usize, i64)> = Vec::with_capacity(pins.len());
    for &(x, y) in pins {
        if x <= span.start || x >= span.end() {
            return domain(format!("pin at site {x} is not strictly inside [{}, {}]", span.start, span.end()));
        }
        let Some(j) = grid.index_of(y).filter(|_| y.is_finite()) else {
            return domain(format!("pin height {y} at site {x} is not on the grid δ = {}", grid.delta));
        };
        out.push((x - span.start, j));
    }
    out.sort_unstable();
    for w in out.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
            return domain(format!("conflicting pins at site {}", span.start + w[0].0));
        }
    }
    out.dedup();
    Ok(out)
}

/// Piecewise-linear interpolation through the boundary values and the pins, per local site.
fn band_centre(span: Span, h0: f64, h1: f64, pins: &[(usize, i64)], delta: f64) -> Vec<f64> {
    let mut anchors = vec![(0usize, h0)];
    anchors.extend(pins.iter().map(|&(i, j)| (i, delta * j as f64)));
    anchors.push((span.len, h1));
    let mut centre = vec![0.0; span.len + 1];
    for w in anchors.windows(2) {
        let ((a, ya), (b, yb)) = (w[0], w[1]);
        for (i, c) in centre.iter_mut().enumerate().take(b + 1).skip(a) {
            *c = ya + (yb - ya) * (i - a) as f64 / (b - a) as f64;
        }
    }
    centre
}

struct DpRun {
    heights: Vec<f64>,
    value: f64,
    /// First local site whose argmin lies within two grid steps of the band edge.
    edge_site: Option<usize>,
}

#[inline]
fn prefer(cost: f64, k: i64, best_cost: f64, best_k: i64) -> bool {
    cost < best_cost || (cost == best_cost && (k.abs() < best_k.abs() || (k.abs() == best_k.abs() && k < best_k)))
}

#[allow(clippy::too_many_arguments)]
fn run_dp<P: Potential + ?Sized>(
    table: &mut FieldTable<'_, P>,
    span: Span,
    h0: f64,
    h1: f64,
    grid: &Grid,
    half_width: f64,
    mu: f64,
    pins: &[(usize, i64)],
    centre_heights: &[f64],
) -> Result<DpRun> {
    let n = span.len;
    let delta = grid.delta;
    if n == 1 {
        let d = h1 - h0;
        return Ok(DpRun { heights: vec![h0, h1], value: 0.5 * mu * d * d, edge_site: None });
    }
    // Band limits in grid indices, per local interior site 1..n-1.
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    let mut pinned = vec![false; n];
    for &(i, j) in pins {
        lo[i] = j;
        hi[i] = j;
        pinned[i] = true;
    }
    let mut cells = 0usize;
    for i in 1..n {
        if !pinned[i] {
            let c = centre_heights[i];
            lo[i] = ((c - half_width) / delta).ceil() as i64;
            hi[i] = ((c + half_width) / delta).floor() as i64;
            if lo[i] > hi[i] {
                return domain(format!("empty band at site {}", span.start + i));
            }
        }
        cells += (hi[i] - lo[i] + 1) as usize;
    }
    if cells > MAX_CELLS {
        return domain(format!("band of {cells} grid cells exceeds the limit {MAX_CELLS}"));
    }

    let a = 0.5 * mu * delta * delta;
    let half_mu = 0.5 * mu;
    let mut offsets = vec![0usize; n + 1];
    for i in 1..n {
        offsets[i + 1] = offsets[i] + (hi[i] - lo[i] + 1) as usize;
    }
    let mut back = vec![0i32; cells];
    let mut env = Envelope::default();

    // Site 1: boundary transition from the real value h0.
    let w1 = table.slice(span.start + 1, lo[1], hi[1] + 1);
    let mut f: Vec<f64> = (lo[1]..=hi[1])
        .zip(w1)
        .map(|(j, w)| {
            let d = delta * j as f64 - h0;
            half_mu * d * d - w
        })
        .collect();
    let mut g = Vec::new();
    let mut arg = Vec::new();
    for i in 2..n {
        let width = (hi[i] - lo[i] + 1) as usize;
        g.resize(width, 0.0);
        arg.resize(width, 0);
        env.transform(&f, lo[i - 1], a, lo[i], &mut g, &mut arg);
        let w = table.slice(span.start + i, lo[i], hi[i] + 1);
        let row = &mut back[offsets[i]..offsets[i + 1]];
        for t in 0..width {
            g[t] -= w[t];
            let j = lo[i] + t as i64;
            row[t] = (arg[t] - j) as i32;
        }
        std::mem::swap(&mut f, &mut g);
    }

    // Final boundary transition to the real value h1.
    let last = n - 1;
    let (mut best, mut best_k) = (f64::INFINITY, 0i64);
    for (t, fv) in f.iter().enumerate() {
        let k = lo[last] + t as i64;
        let d = h1 - delta * k as f64;
        let cost = fv + half_mu * d * d;
        if prefer(cost, k, best, best_k) {
            best = cost;
            best_k = k;
        }
    }

    let mut idx = vec![0i64; n + 1];
    idx[last] = best_k;
    for i in (2..n).rev() {
        let t = (idx[i] - lo[i]) as usize;
        idx[i - 1] = idx[i] + back[offsets[i] + t] as i64;
    }
    let mut heights = vec![0.0; n + 1];
    heights[0] = h0;
    heights[n] = h1;
    let mut edge_site = None;
    for i in 1..n {
        heights[i] = delta * idx[i] as f64;
        if edge_site.is_none() && !pinned[i] && (idx[i] - lo[i] <= 2 || hi[i] - idx[i] <= 2) {
            edge_site = Some(i);
        }
    }
    Ok(DpRun { heights, value: best, edge_site })
}

/// Lower envelope of the parabolas `k ↦ f(k) + a(j - k)²`.
#[derive(Default)]
struct Envelope {
    vertices: Vec<usize>,
    starts: Vec<f64>,
    /// `1 / (2 a d)` for gaps `d`, valid for `reciprocal_weight == a`.
    reciprocals: Vec<f64>,
    reciprocal_weight: f64,
}

impl Envelope {
    /// `g(j) = min_k f(k) + a (j - k)²` for `j = q_lo, q_lo+1, …` (as many as `g` holds),
    /// with `f` indexed from `src_lo`. `arg` receives the minimizing `k`.
    fn transform(&mut self, f: &[f64], src_lo: i64, a: f64, q_lo: i64, g: &mut [f64], arg: &mut [i64]) {
        if self.reciprocals.len() < f.len() {
            self.reciprocals = (0..f.len()).map(|d| 0.5 / (a * d as f64)).collect();
            self.reciprocal_weight = a;
        } else if self.reciprocal_weight != a {
            for (d, r) in self.reciprocals.iter_mut().enumerate() {
                *r = 0.5 / (a * d as f64);
            }
            self.reciprocal_weight = a;
        }
        let (v, z, recip) = (&mut self.vertices, &mut self.starts, &self.reciprocals);
        v.clear();
        z.clear();
        v.push(0);
        z.push(f64::NEG_INFINITY);
        for q in 1..f.len() {
            loop {
                let p = *v.last().unwrap();
                let s = (f[q] - f[p]) * recip[q - p] + 0.5 * (q + p) as f64;
                if s <= *z.last().unwrap() {
                    v.pop();
                    z.pop();
                } else {
                    v.push(q);
                    z.push(s);
                    break;
                }
            }
        }
        let mut k = 0usize;
        let shift = q_lo - src_lo;
        for (t, (gv, av)) in g.iter_mut().zip(arg.iter_mut()).enumerate() {
            let pos = (shift + t as i64) as f64;
            while k + 1 < v.len() && z[k + 1] < pos {
                k += 1;
            }
            let p = v[k];
            let d = pos - p as f64;
            let mut best = f[p] + a * d * d;
            let mut best_k = src_lo + p as i64;
            if k + 1 < v.len() && z[k + 1] - pos <= 1e-7 {
                let p2 = v[k + 1];
                let d2 = pos - p2 as f64;
                let c2 = f[p2] + a * d2 * d2;
                let k2 = src_lo + p2 as i64;
                if prefer(c2, k2, best, best_k) {
                    best = c2;
                    best_k = k2;
                }
            }
            *gv = best;
            *av = best_k;
        }
    }
}
