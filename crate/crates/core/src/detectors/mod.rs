//! SQM arrival-time metrics: Kijowski, probability current / black-box
//! detector, and the Marchewka-Schuss absorbing boundary.

pub mod current;
pub mod kijowski;
pub mod marchewka_schuss;

use std::io::Write;

use serde::Serialize;

use crate::quad::trapezoid;
use crate::{Error, Result};

pub use current::{
    current_detection_curve, default_tau_grid, probability_current, sqm_detection_curve, sqm_uncertainty,
    surviving_norm, surviving_norm_rate,
};
pub use kijowski::{
    kijowski_bullet_density, kijowski_bullet_stats, kijowski_curve, kijowski_density, kijowski_norm,
    kijowski_wave_density_origin, kijowski_wave_norm, BulletStats, MomentumAmplitude,
};
pub use marchewka_schuss::{marchewka_schuss_evolve, ms_bullet_initial, ms_packet_initial, ms_update, MsConfig, MsResult};

/// Sampled detection-rate curve over clock time.
#[derive(Debug, Clone, Serialize)]
pub struct ArrivalDistribution {
    pub taus: Vec<f64>,
    pub rates: Vec<f64>,
    /// Trapezoid integral of the rates.
    pub norm: f64,
    /// Mean of the normalized density.
    pub mean: f64,
    /// Standard deviation of the normalized density.
    pub uncertainty: f64,
    /// Set when some rate is negative (backflow); rates are never clamped.
    pub negative_rates: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArrivalSummary {
    pub norm: f64,
    pub mean: f64,
    pub uncertainty: f64,
    pub negative_rates: bool,
    pub points: usize,
}

impl ArrivalDistribution {
    pub fn from_samples(taus: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if taus.len() != rates.len() || taus.len() < 2 {
            return Err(Error::InvalidInput(format!("need matching grids of at least 2 points, got {} and {}", taus.len(), rates.len())));
        }
        if taus.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("clock-time grid must be strictly increasing".into()));
        }
        if rates.iter().chain(&taus).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("arrival distribution"));
        }
        let norm = trapezoid(&taus, &rates);
        let first: Vec<f64> = taus.iter().zip(&rates).map(|(t, r)| t * r).collect();
        let mean = trapezoid(&taus, &first) / norm;
        let second: Vec<f64> = taus.iter().zip(&rates).map(|(t, r)| (t - mean).powi(2) * r).collect();
        let var = trapezoid(&taus, &second) / norm;
        let negative_rates = rates.iter().any(|&r| r < 0.0);
        Ok(ArrivalDistribution { taus, rates, norm, mean, uncertainty: var.max(0.0).sqrt(), negative_rates })
    }

    pub fn summary(&self) -> ArrivalSummary {
        ArrivalSummary {
            norm: self.norm,
            mean: self.mean,
            uncertainty: self.uncertainty,
            negative_rates: self.negative_rates,
            points: self.taus.len(),
        }
    }

    /// Largest pointwise rate difference; both curves must share a grid.
    pub fn sup_distance(&self, other: &ArrivalDistribution) -> Result<f64> {
        if self.taus != other.taus {
            return Err(Error::InvalidInput("curves are sampled on different grids".into()));
        }
        Ok(self.rates.iter().zip(&other.rates).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        crate::io::write_columns(w, &["tau", "rate"], &[&self.taus, &self.rates])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let taus: Vec<f64> = (0..4001).map(|i| -20.0 + i as f64 * 0.01).collect();
        let (mu, s) = (1.5, 2.0);
        let rates: Vec<f64> = taus.iter().map(|t| 3.0 * (-(t - mu) * (t - mu) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())).collect();
        let d = ArrivalDistribution::from_samples(taus, rates).unwrap();
        assert!((d.norm - 3.0).abs() < 1e-9);
        assert!((d.mean - mu).abs() < 1e-9);
        assert!((d.uncertainty - s).abs() < 1e-9);
        assert!(!d.negative_rates);
    }

    #[test]
    fn flags_backflow_without_clamping() {
        let d = ArrivalDistribution::from_samples(vec![0.0, 1.0, 2.0], vec![0.5, -0.1, 0.5]).unwrap();
        assert!(d.negative_rates);
        assert_eq!(d.rates[1], -0.1);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(ArrivalDistribution::from_samples(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(ArrivalDistribution::from_samples(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
