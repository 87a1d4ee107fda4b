//! Kijowski arrival-time density.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use super::ArrivalDistribution;
use crate::quad::{self, Integral, Tolerance};
use crate::wavepacket::SpacePacket;
use crate::{check_finite, check_positive, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A momentum amplitude with a hint of where it lives: `|p|` within
/// `center +- 12 width` carries all of it.
#[derive(Clone, Copy)]
pub struct MomentumAmplitude<'a> {
    pub amplitude: &'a (dyn Fn(f64) -> Complex64 + Sync),
    pub center: f64,
    pub width: f64,
}

fn tolerance() -> Tolerance {
    Tolerance::new(1e-15, 1e-10).with_max_intervals(20_000)
}

/// `int_0^inf dq sqrt(q / 2 pi m) e^(-i q^2 tau / 2m) phi(q)` over the window
/// of the amplitude. When the window reaches `q = 0` the substitution
/// `q = w^2` removes the square-root endpoint.
fn half_line(phi: &(dyn Fn(f64) -> Complex64 + Sync), lo: f64, hi: f64, m: f64, tau: f64) -> Result<Complex64> {
    if hi <= 0.0 || hi <= lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let c = (2.0 * PI * m).sqrt().recip();
    if lo <= 0.0 {
        let g = |w: f64| {
            let q = w * w;
            (-I * (q * q * tau / (2.0 * m))).exp() * phi(q) * (2.0 * w * w * c)
        };
        Ok(quad::integrate(g, 0.0, hi.sqrt(), tolerance())?.value)
    } else {
        let g = |q: f64| (-I * (q * q * tau / (2.0 * m))).exp() * phi(q) * (q.sqrt() * c);
        Ok(quad::integrate(g, lo, hi, tolerance())?.value)
    }
}

/// Kijowski density at the origin for left-incident (`p > 0`) and
/// right-incident (`p < 0`) amplitudes.
pub fn kijowski_density(left: Option<MomentumAmplitude>, right: Option<MomentumAmplitude>, m: f64, tau: f64) -> Result<f64> {
    check_positive("mass", m)?;
    check_finite("tau", tau)?;
    let mut total = 0.0;
    if let Some(a) = left {
        let lo = a.center - 12.0 * a.width;
        let hi = a.center + 12.0 * a.width;
        total += half_line(a.amplitude, lo, hi, m, tau)?.norm_sqr();
    }
    if let Some(a) = right {
        // p -> -q maps the right-incident half line onto q > 0
        let flipped = |q: f64| (a.amplitude)(-q);
        let lo = -(a.center + 12.0 * a.width);
        let hi = -(a.center - 12.0 * a.width);
        total += half_line(&flipped, lo, hi, m, tau)?.norm_sqr();
    }
    Ok(total)
}

/// Kijowski density for a packet released left of the detector.
pub fn kijowski_bullet_density(pkt: &SpacePacket, tau: f64) -> Result<f64> {
    let phi = |p: f64| pkt.momentum_amplitude(p, 0.0);
    let amp = MomentumAmplitude { amplitude: &phi, center: pkt.p0, width: pkt.sigma_p() };
    kijowski_density(Some(amp), None, pkt.mass, tau)
}

pub fn kijowski_curve(pkt: &SpacePacket, taus: &[f64]) -> Result<ArrivalDistribution> {
    let rates = taus.par_iter().map(|&t| kijowski_bullet_density(pkt, t)).collect::<Result<Vec<_>>>()?;
    ArrivalDistribution::from_samples(taus.to_vec(), rates)
}

/// `int_0^inf dtau` of the Kijowski density of `pkt`.
///
/// When every momentum in the window is positive, the density lives between
/// the classical arrivals of the fastest momentum from the near edge and the
/// slowest from the far edge, and only that interval is integrated.
pub fn kijowski_norm(pkt: &SpacePacket) -> Result<Integral<f64>> {
    let density = |t: f64| kijowski_bullet_density(pkt, t).unwrap_or(f64::NAN);
    let (p_lo, p_hi) = (pkt.p0 - 12.0 * pkt.sigma_p(), pkt.p0 + 12.0 * pkt.sigma_p());
    let result = if p_lo > 0.0 && pkt.distance() > 0.0 {
        let near = (pkt.distance() - 12.0 * pkt.sigma_x).max(0.0);
        let far = pkt.distance() + 12.0 * pkt.sigma_x;
        let (t0, t1) = (pkt.mass * near / p_hi, pkt.mass * far / p_lo);
        quad::integrate(density, t0, t1, Tolerance::new(1e-12, 1e-9).with_max_intervals(20_000))?
    } else {
        let scale = (pkt.mass * pkt.sigma_x * pkt.sigma_x).max(if pkt.p0 > 0.0 { pkt.mean_arrival().abs() } else { 0.0 });
        quad::integrate_to_infinity(density, 0.0, scale, Tolerance::new(1e-12, 1e-8))?
    };
    if result.value.is_finite() {
        Ok(result)
    } else {
        Err(Error::NonConvergence { what: "Kijowski norm".into(), residual: f64::NAN })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BulletStats {
    /// `tau_bar = d / v0`
    pub mean: f64,
    /// `sigma_bar = tau_bar / (m v0 sigma_x)`
    pub sigma_bar: f64,
    /// `sigma_bar / sqrt(2)`
    pub uncertainty: f64,
    /// `sigma_p / p0`; the closed forms assume this is small.
    pub momentum_spread_ratio: f64,
    pub bullet_regime: bool,
}

/// Closed-form moments in the bullet regime. The distance is taken from the
/// packet (`d = -x0`).
pub fn kijowski_bullet_stats(pkt: &SpacePacket) -> Result<BulletStats> {
    if pkt.p0 <= 0.0 {
        return Err(Error::InvalidInput(format!("bullet statistics need p0 > 0, got {}", pkt.p0)));
    }
    check_positive("distance", pkt.distance())?;
    let mean = pkt.mean_arrival();
    let sigma_bar = mean / (pkt.mass * pkt.velocity() * pkt.sigma_x);
    let ratio = pkt.sigma_p() / pkt.p0;
    Ok(BulletStats {
        mean,
        sigma_bar,
        uncertainty: sigma_bar / std::f64::consts::SQRT_2,
        momentum_spread_ratio: ratio,
        bullet_regime: ratio <= 0.1,
    })
}

/// Kijowski density for a packet centered on the detector at rest:
/// `|m^(1/4) sigma_p Gamma(3/4) / ((2 pi)^(3/4) (m + i sigma_p^2 tau)^(3/4))|^2`.
pub fn kijowski_wave_density_origin(m: f64, sigma_p: f64, tau: f64) -> Result<f64> {
    check_positive("mass", m)?;
    check_positive("sigma_p", sigma_p)?;
    check_finite("tau", tau)?;
    let z = Complex64::new(m, sigma_p * sigma_p * tau);
    let amp = m.powf(0.25) * sigma_p * gamma(0.75) / ((2.0 * PI).powf(0.75) * z.powf(0.75));
    Ok(amp.norm_sqr())
}

/// `int_0^inf dtau` of the wave-case closed form; the exact value is 1/4.
pub fn kijowski_wave_norm(m: f64, sigma_p: f64) -> Result<Integral<f64>> {
    check_positive("mass", m)?;
    check_positive("sigma_p", sigma_p)?;
    quad::integrate_to_infinity(
        |t| kijowski_wave_density_origin(m, sigma_p, t).unwrap_or(f64::NAN),
        0.0,
        m / (sigma_p * sigma_p),
        Tolerance::new(1e-14, 1e-10),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_density_at_origin_time() {
        let r0 = kijowski_wave_density_origin(1.0, 1.0, 0.0).unwrap();
        let expected = gamma(0.75).powi(2) / (2.0 * PI).powf(1.5);
        assert!((r0 - expected).abs() < 1e-15);
        assert!((r0 - 0.0953).abs() < 1e-4);
        // scaling with mass: sigma_p^2 Gamma(3/4)^2 / ((2 pi)^(3/2) m)
        let r = kijowski_wave_density_origin(4.0, 2.0, 0.0).unwrap();
        assert!((r - 4.0 * gamma(0.75).powi(2) / ((2.0 * PI).powf(1.5) * 4.0)).abs() < 1e-15);
    }

    #[test]
    fn wave_density_decreases() {
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let r = kijowski_wave_density_origin(1.0, 1.0, i as f64 * 0.25).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn zero_amplitude_gives_zero() {
        let zero = |_: f64| Complex64::new(0.0, 0.0);
        let a = MomentumAmplitude { amplitude: &zero, center: 1.0, width: 0.1 };
        assert_eq!(kijowski_density(Some(a), Some(a), 1.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn bullet_stats_closed_form() {
        let p = SpacePacket::bullet(100.0, 1.0, 10.0, 1.0).unwrap();
        let s = kijowski_bullet_stats(&p).unwrap();
        assert_eq!((s.mean, s.sigma_bar), (100.0, 10.0));
        assert!((s.uncertainty - 7.071_067_811_865_475).abs() < 1e-12);
        assert!((s.sigma_bar / s.mean - p.sigma_p() / p.p0).abs() < 1e-15);
        let p2 = SpacePacket::bullet(200.0, 1.0, 10.0, 1.0).unwrap();
        let s2 = kijowski_bullet_stats(&p2).unwrap();
        assert_eq!((s2.mean, s2.sigma_bar), (200.0, 20.0));
        assert!(kijowski_bullet_stats(&SpacePacket::bullet(100.0, 0.0, 10.0, 1.0).unwrap()).is_err());
    }
}
