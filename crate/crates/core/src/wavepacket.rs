//! Gaussian test functions in space, momentum and coordinate time, evolved in
//! clock time `tau`.
//!
//! The packet methods accept any real `tau` (negative values evolve
//! backwards); the free functions enforce `tau >= 0` and finite inputs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::{check_finite, check_positive, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// The complex spreading factor `1 + i tau/(m sigma^2)` (space) or its
/// conjugate (time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionFactor(pub Complex64);

impl DispersionFactor {
    pub fn space(tau: f64, mass: f64, sigma: f64) -> Self {
        DispersionFactor(Complex64::new(1.0, tau / (mass * sigma * sigma)))
    }

    pub fn time(tau: f64, mass: f64, sigma: f64) -> Self {
        DispersionFactor(Complex64::new(1.0, -tau / (mass * sigma * sigma)))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }
}

/// Minimum-uncertainty Gaussian in one space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacePacket {
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
    pub mass: f64,
}

impl SpacePacket {
    pub fn new(x0: f64, p0: f64, sigma_x: f64, mass: f64) -> Result<Self> {
        check_finite("x0", x0)?;
        check_finite("p0", p0)?;
        check_positive("sigma_x", sigma_x)?;
        check_positive("mass", mass)?;
        Ok(SpacePacket { x0, p0, sigma_x, mass })
    }

    /// Packet released at `-d`, heading for a detector at the origin.
    pub fn bullet(d: f64, p0: f64, sigma_x: f64, mass: f64) -> Result<Self> {
        SpacePacket::new(-check_finite("d", d)?, p0, sigma_x, mass)
    }

    pub fn sigma_p(&self) -> f64 {
        1.0 / self.sigma_x
    }

    pub fn velocity(&self) -> f64 {
        self.p0 / self.mass
    }

    /// Distance from the release point to the detector at the origin.
    pub fn distance(&self) -> f64 {
        -self.x0
    }

    /// Classical arrival time `d / v0` at the origin.
    pub fn mean_arrival(&self) -> f64 {
        self.distance() / self.velocity()
    }

    pub fn dispersion(&self, tau: f64) -> DispersionFactor {
        DispersionFactor::space(tau, self.mass, self.sigma_x)
    }

    pub fn center(&self, tau: f64) -> f64 {
        self.x0 + self.velocity() * tau
    }

    /// `sigma_x |f|`: the density is `exp(-(x - c)^2 / width^2)`.
    pub fn width(&self, tau: f64) -> f64 {
        self.sigma_x * self.dispersion(tau).norm_sqr().sqrt()
    }

    /// Variance of the position density, `(sigma_x^2 / 2)|f|^2`.
    pub fn position_variance(&self, tau: f64) -> f64 {
        0.5 * self.width(tau).powi(2)
    }

    pub fn amplitude(&self, x: f64, tau: f64) -> Complex64 {
        let f = self.dispersion(tau).0;
        let s2 = self.sigma_x * self.sigma_x;
        let y = x - self.center(tau);
        let norm = (PI * s2).powf(-0.25);
        let expo = I * (self.p0 * x) - y * y / (2.0 * s2 * f) - I * (self.p0 * self.p0 * tau / (2.0 * self.mass));
        norm / f.sqrt() * expo.exp()
    }

    pub fn d_amplitude_dx(&self, x: f64, tau: f64) -> Complex64 {
        let f = self.dispersion(tau).0;
        let y = x - self.center(tau);
        self.amplitude(x, tau) * (I * self.p0 - y / (self.sigma_x * self.sigma_x * f))
    }

    pub fn density(&self, x: f64, tau: f64) -> f64 {
        let w = self.width(tau);
        let y = x - self.center(tau);
        (-(y * y) / (w * w)).exp() / (PI.sqrt() * w)
    }

    /// Momentum amplitude under the convention
    /// `phi(p) = (2 pi)^(-1/2) int dx e^(-ipx) psi(x)`.
    ///
    /// Includes the constant phase `e^(i p0 x0)`, so it is the exact
    /// transform of [`SpacePacket::amplitude`] rather than equal to it only up
    /// to a global phase.
    pub fn momentum_amplitude(&self, p: f64, tau: f64) -> Complex64 {
        let sp = self.sigma_p();
        let dp = p - self.p0;
        let norm = (PI * sp * sp).powf(-0.25);
        let expo = -I * (dp * self.x0) - dp * dp / (2.0 * sp * sp) - I * (p * p * tau / (2.0 * self.mass));
        norm * expo.exp()
    }
}

/// Gaussian in coordinate time. `sigma_e = 1 / sigma_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePacket {
    pub t0: f64,
    pub e0: f64,
    pub sigma_t: f64,
    pub mass: f64,
}

impl TimePacket {
    /// `e0` may be zero (a packet straddling `E = 0`); it must not be negative.
    pub fn new(t0: f64, e0: f64, sigma_t: f64, mass: f64) -> Result<Self> {
        check_finite("t0", t0)?;
        check_finite("e0", e0)?;
        if e0 < 0.0 {
            return Err(Error::InvalidInput(format!("e0 must be non-negative, got {e0}")));
        }
        check_positive("sigma_t", sigma_t)?;
        check_positive("mass", mass)?;
        Ok(TimePacket { t0, e0, sigma_t, mass })
    }

    pub fn sigma_e(&self) -> f64 {
        1.0 / self.sigma_t
    }

    pub fn dispersion(&self, tau: f64) -> DispersionFactor {
        DispersionFactor::time(tau, self.mass, self.sigma_t)
    }

    /// Center of the time density, `t0 + (E0/m) tau`.
    pub fn center(&self, tau: f64) -> f64 {
        self.t0 + self.e0 / self.mass * tau
    }

    pub fn width(&self, tau: f64) -> f64 {
        self.sigma_t * self.dispersion(tau).norm_sqr().sqrt()
    }

    pub fn variance(&self, tau: f64) -> f64 {
        0.5 * self.width(tau).powi(2)
    }

    pub fn amplitude(&self, t: f64, tau: f64) -> Complex64 {
        let f = self.dispersion(tau).0;
        let s2 = self.sigma_t * self.sigma_t;
        let y = t - self.center(tau);
        let norm = (PI * s2).powf(-0.25);
        let expo = -I * (self.e0 * t) - y * y / (2.0 * s2 * f) + I * (self.e0 * self.e0 * tau / (2.0 * self.mass));
        norm / f.sqrt() * expo.exp()
    }

    pub fn d_amplitude_dt(&self, t: f64, tau: f64) -> Complex64 {
        self.amplitude(t, tau) * self.log_derivative(t, tau)
    }

    pub fn d2_amplitude_dt2(&self, t: f64, tau: f64) -> Complex64 {
        let f = self.dispersion(tau).0;
        let g = self.log_derivative(t, tau);
        self.amplitude(t, tau) * (g * g - 1.0 / (self.sigma_t * self.sigma_t * f))
    }

    fn log_derivative(&self, t: f64, tau: f64) -> Complex64 {
        let f = self.dispersion(tau).0;
        -I * self.e0 - (t - self.center(tau)) / (self.sigma_t * self.sigma_t * f)
    }

    pub fn density(&self, t: f64, tau: f64) -> f64 {
        self.density_about(t, tau, self.center(tau))
    }

    /// Time density with the same width but an explicitly chosen center.
    pub fn density_about(&self, t: f64, tau: f64, center: f64) -> f64 {
        let w = self.width(tau);
        let y = t - center;
        (-(y * y) / (w * w)).exp() / (PI.sqrt() * w)
    }
}

fn validate_tau(tau: f64) -> Result<f64> {
    check_finite("tau", tau)?;
    if tau < 0.0 {
        return Err(Error::InvalidInput(format!("tau must be non-negative, got {tau}")));
    }
    Ok(tau)
}

pub fn space_amplitude(pkt: &SpacePacket, x: f64, tau: f64) -> Result<Complex64> {
    check_finite("x", x)?;
    Ok(pkt.amplitude(x, validate_tau(tau)?))
}

pub fn space_momentum_amplitude(pkt: &SpacePacket, p: f64, tau: f64) -> Result<Complex64> {
    check_finite("p", p)?;
    Ok(pkt.momentum_amplitude(p, validate_tau(tau)?))
}

pub fn time_amplitude(pkt: &TimePacket, t: f64, tau: f64) -> Result<Complex64> {
    check_finite("t", t)?;
    Ok(pkt.amplitude(t, validate_tau(tau)?))
}

/// Time packet with the least information beyond the constraints inherited
/// from the space part: `sigma_e = sigma_p`, `E0 = sqrt(m^2 + p0^2)`, `t0 = 0`.
pub fn max_entropy_time_packet(pkt: &SpacePacket) -> TimePacket {
    TimePacket {
        t0: 0.0,
        e0: pkt.mass.hypot(pkt.p0),
        sigma_t: 1.0 / pkt.sigma_p(),
        mass: pkt.mass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativeEnergyEstimate {
    /// `E0 / sigma_e`: standard deviations between the mean energy and zero.
    pub sigma_distance: f64,
    /// One-sided normal tail at `sigma_distance` standard deviations.
    pub normal_tail: f64,
    /// Probability mass of `|phi(E)|^2` below zero; the energy density has
    /// standard deviation `sigma_e / sqrt(2)`, so this is thinner than
    /// `normal_tail`.
    pub density_tail: f64,
}

pub fn negative_energy_fraction(pkt: &TimePacket) -> NegativeEnergyEstimate {
    let k = pkt.e0 / pkt.sigma_e();
    NegativeEnergyEstimate {
        sigma_distance: k,
        normal_tail: 0.5 * erfc(k / std::f64::consts::SQRT_2),
        density_tail: 0.5 * erfc(k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_factor_real_part_is_one() {
        let f = DispersionFactor::space(7.0, 2.0, 3.0);
        assert_eq!(f.value().re, 1.0);
        assert!((f.norm_sqr() - (1.0 + 49.0 / (4.0 * 81.0))).abs() < 1e-15);
        assert_eq!(DispersionFactor::time(7.0, 2.0, 3.0).value(), f.value().conj());
    }

    #[test]
    fn peak_of_unit_packet() {
        let p = SpacePacket::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let a = space_amplitude(&p, 0.0, 0.0).unwrap();
        assert!((a.re - PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(a.im, 0.0);
    }

    #[test]
    fn spreading_at_detector() {
        let p = SpacePacket::bullet(100.0, 1.0, 10.0, 1.0).unwrap();
        let peak0 = p.amplitude(p.x0, 0.0).norm();
        let at = p.amplitude(0.0, 100.0).norm();
        assert!((at - peak0 * 2f64.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = SpacePacket::new(-3.0, 1.7, 1.3, 0.8).unwrap();
        let h = 1e-5;
        for &(x, tau) in &[(0.0, 0.0), (1.0, 2.5), (-4.0, 7.0)] {
            let fd = (p.amplitude(x + h, tau) - p.amplitude(x - h, tau)) / (2.0 * h);
            assert!((fd - p.d_amplitude_dx(x, tau)).norm() < 1e-8);
        }
        let t = TimePacket::new(0.5, 2.0, 1.5, 1.2).unwrap();
        for &(s, tau) in &[(0.0, 0.0), (1.0, 2.5), (3.0, 7.0)] {
            let fd = (t.amplitude(s + h, tau) - t.amplitude(s - h, tau)) / (2.0 * h);
            assert!((fd - t.d_amplitude_dt(s, tau)).norm() < 1e-8);
            let fd2 = (t.d_amplitude_dt(s + h, tau) - t.d_amplitude_dt(s - h, tau)) / (2.0 * h);
            assert!((fd2 - t.d2_amplitude_dt2(s, tau)).norm() < 1e-7);
        }
    }

    #[test]
    fn max_entropy_examples() {
        let t = max_entropy_time_packet(&SpacePacket::new(0.0, 0.0, 5.0, 1.0).unwrap());
        assert_eq!((t.e0, t.sigma_t, t.t0), (1.0, 5.0, 0.0));
        let t = max_entropy_time_packet(&SpacePacket::new(-1.0, 3.0, 2.0, 4.0).unwrap());
        assert_eq!((t.e0, t.sigma_t), (5.0, 2.0));
        assert!((t.sigma_e() * t.sigma_t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_energy_examples() {
        let est = negative_energy_fraction(&TimePacket::new(0.0, 5e5, 1.0 / 6e3, 5e5).unwrap());
        assert!((est.sigma_distance - 83.333_333).abs() < 1e-5);
        let est = negative_energy_fraction(&TimePacket::new(0.0, 0.0, 2.0, 1.0).unwrap());
        assert_eq!(est.sigma_distance, 0.0);
        assert!((est.normal_tail - 0.5).abs() < 1e-15 && (est.density_tail - 0.5).abs() < 1e-15);
        let est = negative_energy_fraction(&TimePacket::new(0.0, 3.0, 1.0, 1.0).unwrap());
        assert!((est.normal_tail - 1.349_898_031_630_095_9e-3).abs() < 1e-12);
        assert!((est.density_tail - 1.104_524_849_929_272_2e-5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SpacePacket::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(SpacePacket::new(0.0, f64::NAN, 1.0, 1.0).is_err());
        let p = SpacePacket::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(space_amplitude(&p, f64::INFINITY, 0.0).is_err());
        assert!(space_amplitude(&p, 0.0, -1.0).is_err());
        assert!(TimePacket::new(0.0, -1.0, 1.0, 1.0).is_err());
    }
}
