//! Dyadic scale decomposition by piecewise-linear coarsening.
//!
//! `h_{≥l}` interpolates `h` linearly between multiples of `l`, and the scale
//! component is `h_l = h_{≥l} - h_{≥2l}`. Each `h_l` is a row of tents of width
//! `2l` centred at the odd multiples of `l`, so the slopes of different scales
//! are orthogonal and the Dirichlet energy splits exactly across scales.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::energy::{self, HeightConfig};
use crate::error::{domain, Error, Result};

/// `h` split into its dyadic components.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleDecomposition {
    pub base: HeightConfig,
    /// `l ↦ h_l` for `l = 1, 2, …, L/2`.
    pub components: BTreeMap<usize, HeightConfig>,
}

impl ScaleDecomposition {
    pub fn system_size(&self) -> usize {
        self.base.span()
    }

    /// `Σ_l h_l`.
    pub fn reconstruct(&self) -> HeightConfig {
        let mut heights = vec![0.0; self.base.heights.len()];
        for c in self.components.values() {
            for (acc, v) in heights.iter_mut().zip(&c.heights) {
                *acc += v;
            }
        }
        HeightConfig { x_offset: self.base.x_offset, heights }
    }

    /// Writes `x,l,value` rows for every component.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "l", "value"])?;
        for (&l, c) in &self.components {
            for (i, v) in c.heights.iter().enumerate() {
                w.serialize((c.x_offset + i, l, v))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_scale(h: &HeightConfig, l: usize) -> Result<()> {
    if l == 0 || !l.is_power_of_two() {
        return domain(format!("scale {l} is not a power of two"));
    }
    if h.span() % l != 0 {
        return domain(format!("scale {l} does not divide the span {}", h.span()));
    }
    Ok(())
}

/// `h_{≥l}`: agrees with `h` at multiples of `l` and is linear in between.
pub fn coarsen(h: &HeightConfig, l: usize) -> Result<HeightConfig> {
    check_scale(h, l)?;
    let heights = (0..=h.span())
        .map(|i| {
            let (k, r) = (i / l, i % l);
            if r == 0 {
                h.heights[i]
            } else {
                let (a, b) = (h.heights[k * l], h.heights[(k + 1) * l]);
                a + (b - a) * (r as f64 / l as f64)
            }
        })
        .collect();
    Ok(HeightConfig { x_offset: h.x_offset, heights })
}

/// `h_l = h_{≥l} - h_{≥2l}`.
pub fn component(h: &HeightConfig, l: usize) -> Result<HeightConfig> {
    check_scale(h, l)?;
    if 2 * l > h.span() || h.span() % (2 * l) != 0 {
        return domain(format!("scale {l} needs 2l to divide the span {}", h.span()));
    }
    let fine = coarsen(h, l)?;
    let coarse = coarsen(h, 2 * l)?;
    let heights = fine.heights.iter().zip(&coarse.heights).map(|(a, b)| a - b).collect();
    Ok(HeightConfig { x_offset: h.x_offset, heights })
}

/// All components `h_l`, `l = 1, …, L/2`, of a zero-boundary `h` on a power-of-two span.
pub fn decompose(h: &HeightConfig) -> Result<ScaleDecomposition> {
    let size = h.span();
    if !size.is_power_of_two() || size < 2 {
        return domain(format!("span {size} is not a power of two >= 2"));
    }
    if !h.has_zero_boundary() {
        return domain("decomposition needs zero boundary values");
    }
    let mut components = BTreeMap::new();
    let mut l = 1;
    while 2 * l <= size {
        components.insert(l, component(h, l)?);
        l *= 2;
    }
    Ok(ScaleDecomposition { base: h.clone(), components })
}

/// The dyadic scales `1, 2, …, L/2`.
pub fn scales(system_size: usize) -> impl Iterator<Item = usize> {
    std::iter::successors(Some(1usize), |l| Some(l * 2)).take_while(move |l| 2 * l <= system_size)
}

/// `D_p(h_l)` from the tent heights alone: `(2l / 2^{p/2}) Σ_x̂ |a_x̂ / l|^p`, with
/// `a_x̂ = h(c) - ½(h(c-l) + h(c+l))` at `c = (2x̂-1)l`.
pub fn closed_form_scale_energy(h: &HeightConfig, l: usize, p: f64) -> Result<f64> {
    check_scale(h, l)?;
    if h.span() % (2 * l) != 0 {
        return domain(format!("scale {l} needs 2l to divide the span {}", h.span()));
    }
    let mut s = crate::sum::CompensatedSum::new();
    let peaks = h.span() / (2 * l);
    for xh in 1..=peaks {
        let c = (2 * xh - 1) * l;
        let a = h.heights[c] - 0.5 * (h.heights[c - l] + h.heights[c + l]);
        s.add((a / l as f64).abs().powf(p));
    }
    Ok(2.0 * l as f64 * 2f64.powf(-p / 2.0) * s.value())
}

/// `l ↦ D_p(h_l) / L`, computed on the stored component and cross-checked against the closed form.
pub fn per_scale_energy(dec: &ScaleDecomposition, p: f64) -> Result<BTreeMap<usize, f64>> {
    let size = dec.system_size() as f64;
    let floor = 1e-15 * energy::dirichlet_p(&dec.base, p)?;
    let mut out = BTreeMap::new();
    for (&l, c) in &dec.components {
        let direct = energy::dirichlet_p(c, p)?;
        let closed = closed_form_scale_energy(&dec.base, l, p)?;
        let tol = 1e-9 * direct.abs().max(closed.abs()) + floor;
        if (direct - closed).abs() > tol {
            return Err(Error::Inconsistent(format!(
                "scale {l}, p = {p}: direct D_p = {direct}, closed form = {closed}"
            )));
        }
        out.insert(l, direct / size);
    }
    Ok(out)
}

/// `l ↦ D(h_{≥l}) / L`, accumulated from the per-scale energies (`l = 1, …, L/2`).
pub fn aggregated_energy(per_scale: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    let mut acc = 0.0;
    for (&l, &v) in per_scale.iter().rev() {
        acc += v;
        out.insert(l, acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{dirichlet, dirichlet_form};
    use proptest::prelude::*;

    fn sample() -> HeightConfig {
        HeightConfig::new(0, vec![0.0, 3.0, 1.0, -1.0, 0.0]).unwrap()
    }

    #[test]
    fn coarsen_examples() {
        let h = sample();
        assert_eq!(coarsen(&h, 1).unwrap(), h);
        assert_eq!(coarsen(&h, 4).unwrap().heights, vec![0.0; 5]);
        assert_eq!(coarsen(&h, 2).unwrap().heights, vec![0.0, 0.5, 1.0, 0.5, 0.0]);
        assert!(coarsen(&h, 3).is_err());
        assert!(coarsen(&h, 8).is_err());
    }

    #[test]
    fn component_examples() {
        let h = sample();
        assert_eq!(component(&h, 1).unwrap().heights, vec![0.0, 2.5, 0.0, -1.5, 0.0]);
        assert_eq!(component(&h, 2).unwrap().heights, vec![0.0, 0.5, 1.0, 0.5, 0.0]);
        let affine = HeightConfig::affine(0, 8, 0.0, 3.0);
        for l in [1, 2, 4] {
            assert!(component(&affine, l).unwrap().heights.iter().all(|v| v.abs() < 1e-15));
        }
        assert!(component(&h, 4).is_err());
    }

    #[test]
    fn decomposition_example() {
        let dec = decompose(&sample()).unwrap();
        assert_eq!(dirichlet(&dec.base), 9.0);
        assert_eq!(dirichlet(&dec.components[&1]), 8.5);
        assert_eq!(dirichlet(&dec.components[&2]), 0.5);
        let e = per_scale_energy(&dec, 2.0).unwrap();
        assert_eq!(e[&1], 8.5 / 4.0);
        assert_eq!(e[&2], 0.5 / 4.0);
        let agg = aggregated_energy(&e);
        assert_eq!(agg[&1], 9.0 / 4.0);
        assert_eq!(agg[&2], 0.5 / 4.0);
    }

    #[test]
    fn decompose_preconditions() {
        assert!(decompose(&HeightConfig::zeros(6)).is_err());
        assert!(decompose(&HeightConfig::new(0, vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap()).is_err());
        let z = decompose(&HeightConfig::zeros(8)).unwrap();
        assert!(z.components.values().all(|c| c.heights.iter().all(|&v| v == 0.0)));
        assert_eq!(z.components.keys().copied().collect::<Vec<_>>(), vec![1, 2, 4]);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let dec = decompose(&sample()).unwrap();
        let mut buf = Vec::new();
        dec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,l,value\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 5);
    }

    fn zero_boundary(len: usize) -> impl Strategy<Value = HeightConfig> {
        prop::collection::vec(-30.0f64..30.0, len - 1).prop_map(|mut v| {
            v.insert(0, 0.0);
            v.push(0.0);
            HeightConfig { x_offset: 0, heights: v }
        })
    }

    proptest! {
        #[test]
        fn reconstruction_and_pythagoras(h in zero_boundary(32)) {
            let dec = decompose(&h).unwrap();
            let back = dec.reconstruct();
            for (a, b) in back.heights.iter().zip(&h.heights) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
            let total: f64 = dec.components.values().map(dirichlet).sum();
            prop_assert!((total - dirichlet(&h)).abs() <= 1e-9 * dirichlet(&h));
        }

        #[test]
        fn components_vanish_on_coarse_lattice(h in zero_boundary(32)) {
            let dec = decompose(&h).unwrap();
            for (&l, c) in &dec.components {
                for k in (0..=32).step_by(2 * l) {
                    prop_assert!(c.heights[k].abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn haar_orthogonality(h in zero_boundary(32)) {
            let dec = decompose(&h).unwrap();
            for (&l, a) in &dec.components {
                for (&r, b) in &dec.components {
                    if l != r {
                        let f = dirichlet_form(a, b).unwrap().abs();
                        prop_assert!(f <= 1e-9 * (dirichlet(a) * dirichlet(b)).sqrt() + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn closed_form_matches(h in zero_boundary(32), p in prop::sample::select(vec![2.0, 2.5, 3.0])) {
            prop_assert!(per_scale_energy(&decompose(&h).unwrap(), p).is_ok());
        }

        #[test]
        fn nested_projections(h in zero_boundary(32), k in 0u32..4) {
            let l = 1usize << k;
            let direct = coarsen(&h, 2 * l).unwrap();
            let nested = coarsen(&coarsen(&h, l).unwrap(), 2 * l).unwrap();
            prop_assert_eq!(direct, nested);
            let once = coarsen(&h, l).unwrap();
            prop_assert_eq!(coarsen(&once, l).unwrap(), once);
        }
    }
}
