//! Time-extended quantum mechanics: direct-product packets in coordinate
//! time and space, the resulting detection density, and the combined clock
//! time dispersion.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::detectors::{probability_current, ArrivalDistribution};
use crate::quad::{self, Tolerance};
use crate::wavepacket::{max_entropy_time_packet, SpacePacket, TimePacket};
use crate::{check_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TqmPacket {
    pub time: TimePacket,
    pub space: SpacePacket,
}

impl TqmPacket {
    pub fn new(time: TimePacket, space: SpacePacket) -> Result<Self> {
        if time.mass != space.mass {
            return Err(Error::InvalidInput(format!("time part has mass {} but space part {}", time.mass, space.mass)));
        }
        Ok(TqmPacket { time, space })
    }

    /// Space packet paired with its maximum-entropy time packet.
    pub fn from_space(space: SpacePacket) -> Self {
        TqmPacket { time: max_entropy_time_packet(&space), space }
    }

    pub fn mass(&self) -> f64 {
        self.space.mass
    }

    pub fn amplitude(&self, t: f64, x: f64, tau: f64) -> Complex64 {
        self.time.amplitude(t, tau) * self.space.amplitude(x, tau)
    }

    pub fn d_amplitude_dx(&self, t: f64, x: f64, tau: f64) -> Complex64 {
        self.time.amplitude(t, tau) * self.space.d_amplitude_dx(x, tau)
    }
}

/// Drift of the time density center with clock time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum TimeDrift {
    /// `t0 + tau` (`E0/m` taken as 1).
    #[default]
    NonRelativistic,
    /// `t0 + (E0/m) tau`.
    Exact,
}

impl TimeDrift {
    pub fn center(&self, time: &TimePacket, tau: f64) -> f64 {
        match self {
            TimeDrift::NonRelativistic => time.t0 + tau,
            TimeDrift::Exact => time.center(tau),
        }
    }
}

/// Time density `rho~_tau(t)` with the exact width `sigma_t |f|`.
pub fn time_density(pkt: &TqmPacket, tau: f64, t: f64, drift: TimeDrift) -> f64 {
    pkt.time.density_about(t, tau, drift.center(&pkt.time, tau))
}

/// Black-box SQM rate of the space part at the detector, `v0 rho_tau(0)`.
pub fn sqm_rate(pkt: &TqmPacket, tau: f64) -> f64 {
    pkt.space.velocity() * pkt.space.density(0.0, tau)
}

/// `D_tau(t) = D_bar_tau rho~_tau(t)`.
pub fn tqm_detection_density(pkt: &TqmPacket, tau: f64, t: f64, drift: TimeDrift) -> Result<f64> {
    check_finite("tau", tau)?;
    check_finite("t", t)?;
    Ok(sqm_rate(pkt, tau) * time_density(pkt, tau, t, drift))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TqmDispersions {
    pub sigma_bar_tau: f64,
    pub sigma_tilde_tau: f64,
    pub sigma_tau: f64,
    pub tau_bar: f64,
}

impl TqmDispersions {
    /// `sigma_tau / sqrt(2)`
    pub fn uncertainty(&self) -> f64 {
        self.sigma_tau / std::f64::consts::SQRT_2
    }
}

/// Long-time closed forms: `sigma_bar = tau_bar/(m v0 sigma_x)`,
/// `sigma~ = tau_bar/(m sigma_t)`, added in quadrature.
pub fn tqm_dispersion_budget(pkt: &TqmPacket) -> Result<TqmDispersions> {
    let v0 = pkt.space.velocity();
    if v0 <= 0.0 {
        return Err(Error::InvalidInput(format!("dispersion budget needs v0 > 0, got {v0}")));
    }
    let m = pkt.mass();
    let tau_bar = pkt.space.distance() / v0;
    let sb = tau_bar / (m * v0 * pkt.space.sigma_x);
    let st = tau_bar / (m * pkt.time.sigma_t);
    Ok(TqmDispersions { sigma_bar_tau: sb, sigma_tilde_tau: st, sigma_tau: sb.hypot(st), tau_bar })
}

#[derive(Debug, Clone, Serialize)]
pub struct TqmArrival {
    pub distribution: ArrivalDistribution,
    /// `int D_bar_tau dtau` over the clock-time window actually integrated.
    pub captured_norm: f64,
    pub tau_window: (f64, f64),
    pub tau_points: usize,
}

/// Arrival distribution over coordinate time: `int dtau D_bar_tau rho~_tau(t)`
/// on a clock-time window `tau_bar +- 8 max(sigma_bar, sigma~)`, cut at zero.
pub fn tqm_arrival_distribution(pkt: &TqmPacket, t_grid: &[f64], drift: TimeDrift) -> Result<TqmArrival> {
    let b = tqm_dispersion_budget(pkt)?;
    let (lo_t, hi_t) = (t_grid.first().copied().unwrap_or(f64::NAN), t_grid.last().copied().unwrap_or(f64::NAN));
    if !(lo_t <= b.tau_bar - 8.0 * b.sigma_tau && hi_t >= b.tau_bar + 8.0 * b.sigma_tau) {
        return Err(Error::GridTooNarrow(format!(
            "coordinate-time grid [{lo_t}, {hi_t}] must bracket {:.6} +- 8 x {:.6}",
            b.tau_bar, b.sigma_tau
        )));
    }
    let s = b.sigma_bar_tau.max(b.sigma_tilde_tau);
    let tau_lo = (b.tau_bar - 8.0 * s).max(0.0);
    let tau_hi = b.tau_bar + 8.0 * s;
    // resolve the narrower of the two exact widths
    let v0 = pkt.space.velocity();
    let w = pkt.time.width(tau_lo).min(pkt.space.width(b.tau_bar) / v0);
    let points = (((tau_hi - tau_lo) / (w / 8.0)).ceil() as usize + 1).clamp(2001, 400_001);
    let taus = crate::grid::Grid::span(tau_lo, tau_hi, points)?.points();
    let dtau = taus[1] - taus[0];
    let weights: Vec<f64> = taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let trap = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
            trap * dtau * sqm_rate(pkt, tau)
        })
        .collect();
    let centers: Vec<f64> = taus.iter().map(|&tau| drift.center(&pkt.time, tau)).collect();
    let widths: Vec<f64> = taus.iter().map(|&tau| pkt.time.width(tau)).collect();
    let captured_norm: f64 = weights.iter().sum();
    let rates: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            let mut acc = 0.0;
            for i in 0..points {
                let y = (t - centers[i]) / widths[i];
                if y.abs() < 40.0 {
                    acc += weights[i] * (-(y * y)).exp() / (std::f64::consts::PI.sqrt() * widths[i]);
                }
            }
            acc
        })
        .collect();
    Ok(TqmArrival {
        distribution: ArrivalDistribution::from_samples(t_grid.to_vec(), rates)?,
        captured_norm,
        tau_window: (tau_lo, tau_hi),
        tau_points: points,
    })
}

/// `(1/m) Im(psi* dpsi/dx)` of the direct-product amplitude.
pub fn tqm_current(pkt: &TqmPacket, t: f64, x: f64, tau: f64) -> f64 {
    probability_current(pkt.amplitude(t, x, tau), pkt.d_amplitude_dx(t, x, tau), pkt.mass())
}

/// `int dt j_tau(t, x)` by quadrature over the time packet.
pub fn tqm_current_time_integrated(pkt: &TqmPacket, x: f64, tau: f64) -> Result<f64> {
    let c = pkt.time.center(tau);
    let w = pkt.time.width(tau);
    Ok(quad::integrate(|t| tqm_current(pkt, t, x, tau), c - 12.0 * w, c + 12.0 * w, Tolerance::new(1e-16, 1e-12))?.value)
}

/// `(i/2m) int dt [(d2 psi*/dt2) psi - psi* (d2 psi/dt2)]` at fixed `(x, tau)`
/// over `window` (default: 12 widths either side of the time packet). It
/// vanishes for decaying packets because it is a total derivative.
pub fn coordinate_time_cancellation_check(pkt: &TqmPacket, tau: f64, x: f64, window: Option<(f64, f64)>) -> Result<f64> {
    check_finite("tau", tau)?;
    check_finite("x", x)?;
    let c = pkt.time.center(tau);
    let w = pkt.time.width(tau);
    let (a, b) = window.unwrap_or((c - 12.0 * w, c + 12.0 * w));
    let space = pkt.space.density(x, tau);
    let m = pkt.mass();
    // (i/2m)(conj(u'') u - conj(u) u'') = (1/m) Im(conj(u) u'')
    let f = |t: f64| {
        let u = pkt.time.amplitude(t, tau);
        let u2 = pkt.time.d2_amplitude_dt2(t, tau);
        (u.conj() * u2).im / m * space
    };
    Ok(quad::integrate(f, a, b, Tolerance::new(1e-18, 1e-12))?.value)
}
