//! Probability current and the black-box detector `D = v0 rho(0)`.

use num_complex::Complex64;

use super::ArrivalDistribution;
use crate::quad::{self, Tolerance};
use crate::wavepacket::SpacePacket;
use crate::{check_positive, Error, Result};

/// `(1/m) Im(psi* dpsi/dx)`
pub fn probability_current(psi: Complex64, dpsi_dx: Complex64, m: f64) -> f64 {
    (psi.conj() * dpsi_dx).im / m
}

fn require_moving(pkt: &SpacePacket) -> Result<()> {
    if pkt.p0 <= 0.0 {
        return Err(Error::InvalidInput(format!("detection curves need p0 > 0, got {}", pkt.p0)));
    }
    check_positive("distance", pkt.distance())?;
    Ok(())
}

/// Closed-form SQM uncertainty `tau_bar / (sqrt(2) m v0 sigma_x)`.
pub fn sqm_uncertainty(pkt: &SpacePacket) -> Result<f64> {
    require_moving(pkt)?;
    Ok(pkt.mean_arrival() / (std::f64::consts::SQRT_2 * pkt.mass * pkt.velocity() * pkt.sigma_x))
}

/// `points` clock times spanning `tau_bar +- 8 dtau` (closed-form `dtau`),
/// cut off below at zero.
pub fn default_tau_grid(pkt: &SpacePacket, points: usize) -> Result<Vec<f64>> {
    let dt = sqm_uncertainty(pkt)?;
    let tb = pkt.mean_arrival();
    let lo = (tb - 8.0 * dt).max(0.0);
    let hi = tb + 8.0 * dt;
    Ok(crate::grid::Grid::span(lo, hi, points.max(2))?.points())
}

fn check_bracket(pkt: &SpacePacket, taus: &[f64]) -> Result<()> {
    let dt = sqm_uncertainty(pkt)?;
    let tb = pkt.mean_arrival();
    let (lo, hi) = (taus.first().copied().unwrap_or(f64::NAN), taus.last().copied().unwrap_or(f64::NAN));
    // tolerate the zero cut-off of the default grid
    if !(lo <= (tb - 8.0 * dt).max(0.0) + 1e-12 * tb && hi >= tb + 8.0 * dt - 1e-12 * tb) {
        return Err(Error::GridTooNarrow(format!(
            "clock-time grid [{lo}, {hi}] must bracket {:.6} +- 8 x {:.6}",
            tb, dt
        )));
    }
    Ok(())
}

/// Black-box detector: rate `v0 rho_tau(0)`.
pub fn sqm_detection_curve(pkt: &SpacePacket, taus: &[f64]) -> Result<ArrivalDistribution> {
    require_moving(pkt)?;
    check_bracket(pkt, taus)?;
    let v0 = pkt.velocity();
    let rates = taus.iter().map(|&t| v0 * pkt.density(0.0, t)).collect();
    ArrivalDistribution::from_samples(taus.to_vec(), rates)
}

/// Rate equal to the exact probability current through the detector.
pub fn current_detection_curve(pkt: &SpacePacket, taus: &[f64]) -> Result<ArrivalDistribution> {
    require_moving(pkt)?;
    check_bracket(pkt, taus)?;
    let rates = taus
        .iter()
        .map(|&t| probability_current(pkt.amplitude(0.0, t), pkt.d_amplitude_dx(0.0, t), pkt.mass))
        .collect();
    ArrivalDistribution::from_samples(taus.to_vec(), rates)
}

/// `int_{-inf}^0 |psi_tau|^2 dx` by adaptive quadrature.
pub fn surviving_norm(pkt: &SpacePacket, tau: f64) -> Result<f64> {
    let w = pkt.width(tau);
    let lo = pkt.center(tau).min(0.0) - 12.0 * w;
    let hi = 0.0;
    Ok(quad::integrate(|x| pkt.density(x, tau), lo, hi, Tolerance::new(1e-15, 1e-13))?.value)
}

/// Centered difference `dS/dtau` of the surviving norm with step `h`.
pub fn surviving_norm_rate(pkt: &SpacePacket, tau: f64, h: f64) -> Result<f64> {
    check_positive("step", h)?;
    let ahead = surviving_norm(pkt, tau + h)?;
    let behind = surviving_norm(pkt, tau - h)?;
    Ok((ahead - behind) / (2.0 * h))
}
