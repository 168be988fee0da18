//! Energy functionals on height configurations.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::potential::{self, Potential};
use crate::sum::CompensatedSum;

/// Exponents reported in every [`EnergyBreakdown`].
pub const DEFAULT_EXPONENTS: [f64; 3] = [2.0, 2.5, 3.0];

/// A height function on the lattice interval `x_offset ..= x_offset + span`.
///
/// The first and last entries are the boundary values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightConfig {
    pub x_offset: usize,
    pub heights: Vec<f64>,
}

impl HeightConfig {
    pub fn new(x_offset: usize, heights: Vec<f64>) -> Result<Self> {
        if heights.len() < 2 {
            return domain(format!("a configuration needs at least 2 sites, got {}", heights.len()));
        }
        if let Some(i) = heights.iter().position(|h| !h.is_finite()) {
            return domain(format!("non-finite height at index {i}"));
        }
        Ok(Self { x_offset, heights })
    }

    /// The zero configuration on `0..=span`.
    pub fn zeros(span: usize) -> Self {
        Self { x_offset: 0, heights: vec![0.0; span + 1] }
    }

    /// Affine interpolation of `(h0, h1)` on `x_offset..=x_offset + span`.
    pub fn affine(x_offset: usize, span: usize, h0: f64, h1: f64) -> Self {
        let heights = (0..=span).map(|i| h0 + (h1 - h0) * i as f64 / span as f64).collect();
        Self { x_offset, heights }
    }

    /// Number of lattice bonds.
    pub fn span(&self) -> usize {
        self.heights.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.heights[0]
    }

    pub fn last(&self) -> f64 {
        self.heights[self.span()]
    }

    /// Height at absolute lattice position `x`.
    pub fn at(&self, x: usize) -> f64 {
        self.heights[x - self.x_offset]
    }

    /// `(x, h(x))` over the interior sites.
    pub fn interior(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let n = self.heights.len();
        self.heights[1..n - 1].iter().enumerate().map(move |(i, &h)| (self.x_offset + 1 + i, h))
    }

    /// Increments `h(x) - h(x-1)`.
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.heights.windows(2).map(|w| w[1] - w[0])
    }

    pub fn has_zero_boundary(&self) -> bool {
        self.first() == 0.0 && self.last() == 0.0
    }

    /// Pointwise `c * h`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { x_offset: self.x_offset, heights: self.heights.iter().map(|h| c * h).collect() }
    }

    fn check_same_span(&self, other: &Self) -> Result<()> {
        if self.x_offset != other.x_offset || self.heights.len() != other.heights.len() {
            return domain(format!(
                "span mismatch: [{}, {}] vs [{}, {}]",
                self.x_offset,
                self.x_offset + self.span(),
                other.x_offset,
                other.x_offset + other.span()
            ));
        }
        Ok(())
    }
}

/// All energy functionals of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    /// `(p, D_p)` pairs.
    pub p_dirichlet: Vec<(f64, f64)>,
    pub field: f64,
    /// `dirichlet - field`.
    pub total: f64,
    pub mass: f64,
}

impl EnergyBreakdown {
    pub fn p_dirichlet(&self, p: f64) -> Option<f64> {
        self.p_dirichlet.iter().find(|(q, _)| *q == p).map(|&(_, v)| v)
    }
}

/// `D(h) = ½ Σ (h(x) - h(x-1))²`.
pub fn dirichlet(h: &HeightConfig) -> f64 {
    let mut s = CompensatedSum::new();
    for d in h.increments() {
        s.add(d * d);
    }
    0.5 * s.value()
}

/// `D_p(h) = 2^{-p/2} Σ |h(x) - h(x-1)|^p`.
pub fn dirichlet_p(h: &HeightConfig, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return domain(format!("exponent p = {p} must be a finite real >= 1"));
    }
    if p == 2.0 {
        return Ok(dirichlet(h));
    }
    let mut s = CompensatedSum::new();
    for d in h.increments() {
        s.add(d.abs().powf(p));
    }
    Ok(2f64.powf(-p / 2.0) * s.value())
}

/// `W(h) = Σ_x W(x, h(x))` over interior sites.
pub fn field_term<P: Potential + ?Sized>(field: &P, h: &HeightConfig) -> Result<f64> {
    let size = field.system_size();
    if h.x_offset + h.span() > size {
        return domain(format!(
            "configuration span [{}, {}] exceeds the field's lattice [0, {size}]",
            h.x_offset,
            h.x_offset + h.span()
        ));
    }
    let mut s = CompensatedSum::new();
    for (x, y) in h.interior() {
        s.add(potential::value(field, x, y)?);
    }
    Ok(s.value())
}

/// `M(h) = Σ |h(x)|` over interior sites.
pub fn mass(h: &HeightConfig) -> f64 {
    let mut s = CompensatedSum::new();
    for (_, y) in h.interior() {
        s.add(y.abs());
    }
    s.value()
}

/// `Σ (h(x) - h(x-1)) (g(x) - g(x-1))`.
pub fn dirichlet_form(h: &HeightConfig, g: &HeightConfig) -> Result<f64> {
    h.check_same_span(g)?;
    let mut s = CompensatedSum::new();
    for (a, b) in h.increments().zip(g.increments()) {
        s.add(a * b);
    }
    Ok(s.value())
}

/// Every functional at once, with `D_p` for each exponent in `exponents`.
pub fn total_energy_with<P: Potential + ?Sized>(field: &P, h: &HeightConfig, exponents: &[f64]) -> Result<EnergyBreakdown> {
    let dirichlet = dirichlet(h);
    let field = field_term(field, h)?;
    let p_dirichlet = exponents.iter().map(|&p| Ok((p, dirichlet_p(h, p)?))).collect::<Result<_>>()?;
    Ok(EnergyBreakdown { dirichlet, p_dirichlet, field, total: dirichlet - field, mass: mass(h) })
}

/// [`total_energy_with`] at the default exponents `2, 2.5, 3`.
pub fn total_energy<P: Potential + ?Sized>(field: &P, h: &HeightConfig) -> Result<EnergyBreakdown> {
    total_energy_with(field, h, &DEFAULT_EXPONENTS)
}

/// Discrete Green function `φ_y` of the interval `[0, L]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenFunction {
    pub system_size: usize,
    pub y: usize,
    pub values: HeightConfig,
}

/// `φ_y(x) = min{(L-y)x/L, y(L-x)/L}`, the representer of `h ↦ h(y)` under the Dirichlet form.
pub fn green_function(system_size: usize, y: usize) -> Result<GreenFunction> {
    if y == 0 || y >= system_size {
        return domain(format!("Green function pole {y} must be interior to [0, {system_size}]"));
    }
    let l = system_size as u64;
    let yy = y as u64;
    let heights = (0..=l)
        .map(|x| {
            let num = ((l - yy) * x).min(yy * (l - x));
            num as f64 / l as f64
        })
        .collect();
    Ok(GreenFunction { system_size, y, values: HeightConfig { x_offset: 0, heights } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{PotentialField, ZeroField};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(h: &[f64]) -> HeightConfig {
        HeightConfig::new(0, h.to_vec()).unwrap()
    }

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet_p(&cfg(&[0.0, 1.0, 0.0]), 2.0).unwrap(), 1.0);
        assert_eq!(dirichlet_p(&cfg(&[0.0, 2.0, 0.0]), 2.0).unwrap(), 4.0);
        assert_relative_eq!(dirichlet_p(&cfg(&[0.0, 1.0, 2.0, 1.0, 0.0]), 3.0).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(dirichlet_p(&cfg(&[0.0, 1.0]), 0.5).is_err());
        assert!(dirichlet_p(&cfg(&[0.0, 1.0]), f64::NAN).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(HeightConfig::new(0, vec![0.0]).is_err());
        assert!(HeightConfig::new(0, vec![0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn mass_and_zero() {
        assert_eq!(mass(&cfg(&[0.0, 1.0, 2.0, 1.0, 0.0])), 4.0);
        assert_eq!(mass(&HeightConfig::zeros(6)), 0.0);
        let f = PotentialField::new(4, 6).unwrap();
        let b = total_energy(&f, &HeightConfig::zeros(6)).unwrap();
        assert_eq!(b.total, 0.0);
        assert_eq!(b.field, 0.0);
    }

    #[test]
    fn single_site_field_term() {
        let f = PotentialField::new(9, 10).unwrap();
        let h = HeightConfig::new(4, vec![0.0, 1.5, 0.0]).unwrap();
        assert_eq!(field_term(&f, &h).unwrap(), f.value(5, 1.5).unwrap());
        let too_wide = HeightConfig::new(8, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(field_term(&f, &too_wide).is_err());
    }

    #[test]
    fn breakdown_is_consistent() {
        let f = PotentialField::new(2, 8).unwrap();
        let h = cfg(&[0.0, 0.5, -1.25, 2.0, 0.75, 0.0, 1.0, 0.5, 0.0]);
        let b = total_energy(&f, &h).unwrap();
        assert_eq!(b.total, b.dirichlet - b.field);
        assert!((b.dirichlet - dirichlet(&h)).abs() <= 1e-12);
        assert!((b.field - field_term(&f, &h).unwrap()).abs() <= 1e-12);
        assert_eq!(b.p_dirichlet(2.0), Some(b.dirichlet));
    }

    #[test]
    fn green_function_small_case() {
        let g = green_function(4, 2).unwrap();
        assert_eq!(g.values.heights, vec![0.0, 0.5, 1.0, 0.5, 0.0]);
        assert_eq!(mass(&g.values), 2.0);
        assert_eq!(dirichlet(&g.values), 0.5);
        assert!(green_function(4, 0).is_err());
        assert!(green_function(4, 4).is_err());
    }

    #[test]
    fn green_function_symmetry() {
        for y in 1..16 {
            let a = green_function(16, y).unwrap();
            let b = green_function(16, 16 - y).unwrap();
            for x in 0..=16 {
                assert_eq!(a.values.heights[x], b.values.heights[16 - x]);
            }
        }
    }

    #[test]
    fn dirichlet_form_against_zero() {
        let h = cfg(&[0.0, 3.0, -1.0, 0.0]);
        assert_eq!(dirichlet_form(&h, &HeightConfig::zeros(3)).unwrap(), 0.0);
        assert!(dirichlet_form(&h, &HeightConfig::zeros(4)).is_err());
        assert_eq!(dirichlet_form(&h, &h).unwrap(), 2.0 * dirichlet(&h));
    }

    #[test]
    fn zero_field_energy_is_dirichlet() {
        let z = ZeroField::new(4, 1.0);
        let h = cfg(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let b = total_energy(&z, &h).unwrap();
        assert_eq!(b.total, 2.0);
    }

    fn zero_boundary(len: usize) -> impl Strategy<Value = HeightConfig> {
        prop::collection::vec(-20.0f64..20.0, len - 1).prop_map(|mut v| {
            v.insert(0, 0.0);
            v.push(0.0);
            HeightConfig { x_offset: 0, heights: v }
        })
    }

    proptest! {
        #[test]
        fn green_representation(h in zero_boundary(16)) {
            for y in 1..16 {
                let g = green_function(16, y).unwrap();
                prop_assert!((dirichlet_form(&h, &g.values).unwrap() - h.heights[y]).abs() <= 1e-9);
            }
        }

        #[test]
        fn jensen_chain(h in zero_boundary(12), p in 2.0f64..4.0) {
            let l = h.span() as f64;
            let lhs = (dirichlet(&h) / l).powf(p / 2.0);
            let rhs = dirichlet_p(&h, p).unwrap() / l;
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn p_homogeneity(h in zero_boundary(8), k in 0i32..4, p in 1.0f64..4.0) {
            let c = 2f64.powi(k);
            let a = dirichlet_p(&h.scaled(c), p).unwrap();
            let b = c.powf(p) * dirichlet_p(&h, p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }

        #[test]
        fn form_is_symmetric(h in zero_boundary(10), g in zero_boundary(10)) {
            prop_assert_eq!(dirichlet_form(&h, &g).unwrap(), dirichlet_form(&g, &h).unwrap());
        }
    }
}
