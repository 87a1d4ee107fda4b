//! Continuum limit of the walk: diffusion with mass-scaled clock time.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::{check_finite, check_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    pub mass: f64,
    pub d0: f64,
}

impl Default for DiffusionSpec {
    fn default() -> Self {
        DiffusionSpec { mass: 1.0, d0: 0.5 }
    }
}

impl DiffusionSpec {
    pub fn new(mass: f64, d0: f64) -> Result<Self> {
        Ok(DiffusionSpec { mass: check_positive("mass", mass)?, d0: check_positive("d0", d0)? })
    }

    /// `D0 = 1/2`, for which the density is `sqrt(m/2 pi tau) e^(-m x^2/2 tau)`.
    pub fn with_mass(mass: f64) -> Result<Self> {
        DiffusionSpec::new(mass, 0.5)
    }

    /// Effective diffusion coefficient `D0 / m`.
    pub fn coefficient(&self) -> f64 {
        self.d0 / self.mass
    }
}

fn check_tau(tau: f64) -> Result<f64> {
    check_finite("tau", tau)?;
    if tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    Ok(tau)
}

/// `sqrt(m / 4 pi D0 tau) exp(-m (x - x1)^2 / 4 D0 tau)`.
pub fn diffusion_density(spec: &DiffusionSpec, x: f64, x1: f64, tau: f64) -> Result<f64> {
    check_finite("x", x)?;
    check_finite("x1", x1)?;
    let tau = check_tau(tau)?;
    let dc = spec.coefficient();
    let y = x - x1;
    Ok((-(y * y) / (4.0 * dc * tau)).exp() / (4.0 * PI * dc * tau).sqrt())
}

/// The density continued to complex time. At `tau = i t` it is the free
/// quantum kernel `K_t` (for `D0 = 1/2`).
pub fn diffusion_density_complex(spec: &DiffusionSpec, x: f64, x1: f64, tau: Complex64) -> Complex64 {
    let dc = spec.coefficient();
    let y = x - x1;
    (-(y * y) / (4.0 * dc * tau)).exp() / (4.0 * PI * dc * tau).sqrt()
}

/// First-passage rate at distance `d`: `(d / tau) P_tau(d)`.
pub fn diffusion_detection_rate(spec: &DiffusionSpec, d: f64, tau: f64) -> Result<f64> {
    check_positive("d", d)?;
    Ok(d / tau * diffusion_density(spec, d, 0.0, tau)?)
}

pub fn diffusion_detection_rate_complex(spec: &DiffusionSpec, d: f64, tau: Complex64) -> Complex64 {
    diffusion_density_complex(spec, d, 0.0, tau) * d / tau
}

/// Probability of having been detected by clock time `tau`:
/// `erfc(d / sqrt(4 D tau))`.
pub fn diffusion_cumulative_detection(spec: &DiffusionSpec, d: f64, tau: f64) -> Result<f64> {
    check_positive("d", d)?;
    let tau = check_tau(tau)?;
    Ok(erfc(d / (4.0 * spec.coefficient() * tau).sqrt()))
}

/// Survivor density with an absorbing wall at 0, by images:
/// `G(x) = P(x; -d) - P(x; d)`.
pub fn images_survivor_density(spec: &DiffusionSpec, d: f64, x: f64, tau: f64) -> Result<f64> {
    Ok(diffusion_density(spec, x, -d, tau)? - diffusion_density(spec, x, d, tau)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImagesRate {
    /// `-(D0/m) dG/dx` at the wall, analytic derivative.
    pub analytic: f64,
    /// Same with a centered finite difference of step `step`.
    pub finite_difference: f64,
    pub step: f64,
}

/// Detection rate as the flux of the image solution into the wall. The
/// finite-difference step is `1e-5` times the diffusion length
/// `sqrt(D tau)`.
pub fn images_detection_rate(spec: &DiffusionSpec, d: f64, tau: f64) -> Result<ImagesRate> {
    check_positive("d", d)?;
    let tau = check_tau(tau)?;
    let dc = spec.coefficient();
    // dP(x; x1)/dx = -(x - x1) / (2 D tau) P
    let slope = |x1: f64| -> Result<f64> { Ok(-(0.0 - x1) / (2.0 * dc * tau) * diffusion_density(spec, 0.0, x1, tau)?) };
    let dg = slope(-d)? - slope(d)?;
    let h = 1e-5 * (dc * tau).sqrt();
    let dg_fd = (images_survivor_density(spec, d, h, tau)? - images_survivor_density(spec, d, -h, tau)?) / (2.0 * h);
    Ok(ImagesRate { analytic: -dc * dg, finite_difference: -dc * dg_fd, step: h })
}
