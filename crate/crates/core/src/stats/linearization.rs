//! How far the arc-length energy of a configuration falls below its
//! quadratic approximation once heights are rescaled by `ε^{2/3}`.

use serde::{Deserialize, Serialize};

use crate::energy::HeightConfig;
use crate::error::{domain, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationGap {
    pub eps: f64,
    /// `∫(√(1+h'²) - 1) = (1 - η) ½∫h'²`.
    pub eta: f64,
    /// Squared rescaled slopes in decreasing order of magnitude.
    slopes_sq: Vec<f64>,
    dirichlet: f64,
}

impl LinearizationGap {
    /// Share of `½∫h'²` carried by slopes with `|h'| > ν`.
    pub fn eta_tilde(&self, nu: f64) -> f64 {
        if self.dirichlet == 0.0 {
            return 0.0;
        }
        let cut = nu * nu;
        let hi: f64 = self.slopes_sq.iter().take_while(|&&z| z > cut).sum();
        (0.5 * hi / self.dirichlet).min(1.0)
    }

    /// `½∫h'²` of the rescaled profile.
    pub fn dirichlet(&self) -> f64 {
        self.dirichlet
    }
}

pub fn linearization_gap(h: &HeightConfig, eps: f64) -> Result<LinearizationGap> {
    if !(eps > 0.0) || !eps.is_finite() {
        return domain(format!("eps must be positive, got {eps}"));
    }
    let scale = eps.powf(2.0 / 3.0);
    let mut slopes_sq: Vec<f64> = h.increments().map(|d| (scale * d).powi(2)).collect();
    slopes_sq.sort_by(|a, b| b.total_cmp(a));
    let dirichlet = 0.5 * slopes_sq.iter().sum::<f64>();
    if dirichlet == 0.0 {
        return Ok(LinearizationGap { eps, eta: 0.0, slopes_sq, dirichlet });
    }
    // √(1+z) - 1 = z / (√(1+z) + 1), summed without cancellation.
    let length: f64 = slopes_sq.iter().map(|z| z / ((1.0 + z).sqrt() + 1.0)).sum();
    let eta = (1.0 - length / dirichlet).clamp(0.0, 1.0);
    Ok(LinearizationGap { eps, eta, slopes_sq, dirichlet })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn flat_profile_has_no_gap() {
        let g = linearization_gap(&HeightConfig::zeros(8), 0.3).unwrap();
        assert_eq!(g.eta, 0.0);
        assert_eq!(g.eta_tilde(0.0), 0.0);
    }

    #[test]
    fn unit_slope() {
        let h = HeightConfig::affine(0, 5, 0.0, 5.0);
        let g = linearization_gap(&h, 1.0).unwrap();
        assert_relative_eq!(g.eta, 1.0 - 2.0 * (2f64.sqrt() - 1.0), epsilon = 1e-15);
        assert_relative_eq!(g.eta, 0.171573, epsilon = 1e-6);
        assert_eq!(g.eta_tilde(0.5), 1.0);
        assert_eq!(g.eta_tilde(1.0), 0.0);
    }

    #[test]
    fn eta_tilde_splits_energy() {
        let h = HeightConfig::new(0, vec![0.0, 1.0, 4.0, 4.0]).unwrap();
        let g = linearization_gap(&h, 1.0).unwrap();
        assert_relative_eq!(g.eta_tilde(2.0), 9.0 / 10.0, epsilon = 1e-15);
        assert_relative_eq!(g.eta_tilde(0.5), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(linearization_gap(&HeightConfig::zeros(2), 0.0).is_err());
        assert!(linearization_gap(&HeightConfig::zeros(2), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(v in prop::collection::vec(-20.0f64..20.0, 2..30), eps in 0.001f64..2.0, nu in 0.0f64..5.0) {
            let h = HeightConfig::new(0, v).unwrap();
            let a = linearization_gap(&h, eps).unwrap();
            let b = linearization_gap(&h, 0.5 * eps).unwrap();
            prop_assert!((0.0..=1.0).contains(&a.eta));
            prop_assert!(b.eta <= a.eta + 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.eta_tilde(nu)));
            prop_assert!(a.eta <= (nu * nu + a.eta_tilde(nu)) / (1.0 + nu * nu) + 1e-12);
        }
    }
}
