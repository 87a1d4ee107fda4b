//! Single slit in time: a Gaussian gate of width `W` at the source, read out
//! by a detector a distance `d` downstream.
//!
//! In SQM the gate is a probability over emission instants and only spreads
//! the effective packet; in TQM the source is a coordinate-time packet of
//! width `sigma_t` whose diffraction grows as the gate shrinks.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::detectors::ArrivalDistribution;
use crate::grid::Grid;
use crate::quad::{self, Tolerance};
use crate::tqm::{tqm_arrival_distribution, tqm_dispersion_budget, TimeDrift, TqmArrival, TqmPacket};
use crate::wavepacket::{SpacePacket, TimePacket};
use crate::{check_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitConfig {
    /// Gate width in clock time.
    pub w: f64,
    pub d: f64,
    pub v0: f64,
    pub sigma_x: f64,
    /// Width of the TQM source packet; `sqrt(2) W` unless set otherwise.
    pub sigma_t: f64,
    pub mass: f64,
}

impl SlitConfig {
    pub fn new(w: f64, d: f64, v0: f64, sigma_x: f64, mass: f64) -> Result<Self> {
        SlitConfig::with_sigma_t(w, d, v0, sigma_x, SQRT_2 * w, mass)
    }

    pub fn with_sigma_t(w: f64, d: f64, v0: f64, sigma_x: f64, sigma_t: f64, mass: f64) -> Result<Self> {
        check_positive("W", w)?;
        check_positive("d", d)?;
        check_positive("v0", v0)?;
        check_positive("sigma_x", sigma_x)?;
        check_positive("sigma_t", sigma_t)?;
        check_positive("mass", mass)?;
        if v0 >= 1.0 {
            return Err(Error::InvalidInput(format!("v0 must be below the speed of light, got {v0}")));
        }
        Ok(SlitConfig { w, d, v0, sigma_x, sigma_t, mass })
    }

    /// Same experiment with another gate width (and the default pairing
    /// `sigma_t = sqrt(2) W`).
    pub fn with_gate(&self, w: f64) -> Result<Self> {
        SlitConfig::new(w, self.d, self.v0, self.sigma_x, self.mass)
    }

    pub fn tau_bar(&self) -> f64 {
        self.d / self.v0
    }

    pub fn p0(&self) -> f64 {
        self.mass * self.v0
    }

    /// Packet released at the gate, `x0 = -d`.
    pub fn space_packet(&self) -> Result<SpacePacket> {
        SpacePacket::bullet(self.d, self.p0(), self.sigma_x, self.mass)
    }

    /// `Sigma_x^2 = sigma_x^2 + v0^2 W^2`
    pub fn effective_width_sq(&self) -> f64 {
        self.sigma_x * self.sigma_x + self.v0 * self.v0 * self.w * self.w
    }

    fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.w > 0.1 * self.tau_bar() {
            out.push(format!(
                "gate width {} exceeds 0.1 tau_bar = {}; freezing the dispersion factor at tau_bar is not justified",
                self.w,
                0.1 * self.tau_bar()
            ));
        }
        let spread = 1.0 / (self.sigma_x * self.p0());
        if spread > 0.1 {
            out.push(format!("sigma_p / p0 = {spread:.3} is outside the bullet regime"));
        }
        out
    }
}

/// Closed-form SQM uncertainty `tau_bar / (sqrt(2) m v0 Sigma_x)`.
pub fn sqm_slit_uncertainty(cfg: &SlitConfig) -> f64 {
    cfg.tau_bar() / (SQRT_2 * cfg.mass * cfg.v0 * cfg.effective_width_sq().sqrt())
}

/// Closed-form TQM uncertainty
/// `tau_bar (1/sqrt 2)(1/m) sqrt(1/(v^2 sigma_x^2) + 1/sigma_t^2)`;
/// with `sigma_t = sqrt(2) W` the last term is `1/(2 W^2)`.
pub fn tqm_slit_uncertainty(cfg: &SlitConfig) -> f64 {
    let vs = cfg.v0 * cfg.sigma_x;
    cfg.tau_bar() / (SQRT_2 * cfg.mass) * (1.0 / (vs * vs) + 1.0 / (cfg.sigma_t * cfg.sigma_t)).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct SqmSlitSummary {
    pub tau_bar: f64,
    pub effective_width: f64,
    /// `tau_bar / (sqrt(2) m v0 Sigma_x)`
    pub uncertainty_closed: f64,
    /// Standard deviation of the Gaussian the convolution produces before
    /// the long-time approximation: `sqrt((A^2 + B^2) / 2A)` with
    /// `A = sigma_x^2/v0^2 + W^2`, `B = tau_bar / (m v0^2)`.
    pub uncertainty_gaussian: f64,
    /// Standard deviation of the numerically convolved rate.
    pub uncertainty_numeric: f64,
    /// `uncertainty_numeric / uncertainty_closed - 1`
    pub discrepancy: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SqmSlit {
    pub config: SlitConfig,
    pub distribution: ArrivalDistribution,
    pub summary: SqmSlitSummary,
}

/// Detector amplitude from a single gate instant `tau_g`, read at clock time
/// `tau_d`. The dispersion factor is frozen at `tau_bar`, and the source
/// carries the overall phase `e^(-i p0^2 tau_g / 2m)`.
fn gate_instant_amplitude(cfg: &SlitConfig, f: Complex64, tau_d: f64, tau_g: f64) -> Complex64 {
    let s2 = cfg.sigma_x * cfg.sigma_x;
    let delta = tau_d - cfg.tau_bar() - tau_g;
    let norm = (PI * s2).powf(-0.25);
    let phase = -cfg.p0() * cfg.p0() * tau_d / (2.0 * cfg.mass);
    let arg = -(cfg.v0 * cfg.v0 * delta * delta) / (2.0 * s2 * f) + Complex64::new(0.0, phase);
    norm / f.sqrt() * arg.exp()
}

/// Convolve the gate `G(tau_g) = e^(-tau_g^2/2W^2) / sqrt(2 pi W^2)` with the
/// per-instant detector amplitude and read the rate `v0 |psi_D(0)|^2` on
/// `points` clock times.
pub fn single_slit_sqm(cfg: &SlitConfig, points: usize) -> Result<SqmSlit> {
    let tb = cfg.tau_bar();
    let f = Complex64::new(1.0, tb / (cfg.mass * cfg.sigma_x * cfg.sigma_x));
    let a = cfg.sigma_x * cfg.sigma_x / (cfg.v0 * cfg.v0) + cfg.w * cfg.w;
    let b = tb / (cfg.mass * cfg.v0 * cfg.v0);
    let gaussian = ((a * a + b * b) / (2.0 * a)).sqrt();
    let taus = Grid::span(tb - 10.0 * gaussian, tb + 10.0 * gaussian, points.max(3))?.points();
    let w = cfg.w;
    let gate = |t: f64| (-(t * t) / (2.0 * w * w)).exp() / (2.0 * PI * w * w).sqrt();
    // the integrand is a Gaussian in tau_g no wider than the gate
    let tol = Tolerance::new(1e-16, 1e-11).with_max_intervals(10_000);
    let rates = taus
        .par_iter()
        .map(|&tau_d| {
            let psi = quad::integrate(|tg| gate_instant_amplitude(cfg, f, tau_d, tg) * gate(tg), -12.0 * w, 12.0 * w, tol)?;
            Ok(cfg.v0 * psi.value.norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;
    let distribution = ArrivalDistribution::from_samples(taus, rates)?;
    let closed = sqm_slit_uncertainty(cfg);
    let summary = SqmSlitSummary {
        tau_bar: tb,
        effective_width: cfg.effective_width_sq().sqrt(),
        uncertainty_closed: closed,
        uncertainty_gaussian: gaussian,
        uncertainty_numeric: distribution.uncertainty,
        discrepancy: distribution.uncertainty / closed - 1.0,
        warnings: cfg.warnings(),
    };
    Ok(SqmSlit { config: *cfg, distribution, summary })
}

#[derive(Debug, Clone, Serialize)]
pub struct TqmSlitSummary {
    pub tau_bar: f64,
    /// `Delta tau / tau_bar` from the closed form.
    pub scaled_uncertainty: f64,
    pub uncertainty_closed: f64,
    pub sigma_bar_tau: f64,
    pub sigma_tilde_tau: f64,
    /// Standard deviation of the convolved coordinate-time curve.
    pub uncertainty_numeric: f64,
    pub discrepancy: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TqmSlit {
    pub config: SlitConfig,
    pub arrival: TqmArrival,
    pub summary: TqmSlitSummary,
}

/// Source as a coordinate-time packet of width `sigma_t` centered at `t = 0`,
/// paired with the gate-released space packet; the curve comes from
/// [`tqm_arrival_distribution`] over `tau_bar +- 8 sigma_tau`.
pub fn single_slit_tqm(cfg: &SlitConfig, points: usize) -> Result<TqmSlit> {
    let space = cfg.space_packet()?;
    let e0 = cfg.mass.hypot(cfg.p0());
    let pkt = TqmPacket::new(TimePacket::new(0.0, e0, cfg.sigma_t, cfg.mass)?, space)?;
    let b = tqm_dispersion_budget(&pkt)?;
    let t_grid = Grid::span(b.tau_bar - 8.0 * b.sigma_tau, b.tau_bar + 8.0 * b.sigma_tau, points.max(3))?.points();
    let arrival = tqm_arrival_distribution(&pkt, &t_grid, TimeDrift::NonRelativistic)?;
    let closed = tqm_slit_uncertainty(cfg);
    let numeric = arrival.distribution.uncertainty;
    let summary = TqmSlitSummary {
        tau_bar: b.tau_bar,
        scaled_uncertainty: closed / b.tau_bar,
        uncertainty_closed: closed,
        sigma_bar_tau: b.sigma_bar_tau,
        sigma_tilde_tau: b.sigma_tilde_tau,
        uncertainty_numeric: numeric,
        discrepancy: numeric / closed - 1.0,
        warnings: cfg.warnings(),
    };
    Ok(TqmSlit { config: *cfg, arrival, summary })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub w: Vec<f64>,
    /// Closed-form SQM uncertainty.
    pub sqm_uncertainty: Vec<f64>,
    /// Closed-form TQM uncertainty.
    pub tqm_uncertainty: Vec<f64>,
    /// `tqm / sqm`
    pub ratio: Vec<f64>,
    /// Exact standard deviation of the convolved SQM Gaussian.
    pub sqm_gaussian: Vec<f64>,
}

impl SweepResult {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        crate::io::write_columns(
            w,
            &["w", "sqm_uncertainty", "tqm_uncertainty", "ratio", "sqm_gaussian"],
            &[&self.w, &self.sqm_uncertainty, &self.tqm_uncertainty, &self.ratio, &self.sqm_gaussian],
        )
    }
}

/// Closed-form sweep over gate widths; rows keep the order of `ws`. Each row
/// uses `sigma_t = sqrt(2) W`.
pub fn single_slit_sweep(base: &SlitConfig, ws: &[f64]) -> Result<SweepResult> {
    let rows = ws
        .par_iter()
        .map(|&w| {
            let cfg = base.with_gate(w)?;
            let a = cfg.sigma_x * cfg.sigma_x / (cfg.v0 * cfg.v0) + w * w;
            let b = cfg.tau_bar() / (cfg.mass * cfg.v0 * cfg.v0);
            let sqm = sqm_slit_uncertainty(&cfg);
            let tqm = tqm_slit_uncertainty(&cfg);
            Ok((sqm, tqm, ((a * a + b * b) / (2.0 * a)).sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        w: ws.to_vec(),
        sqm_uncertainty: rows.iter().map(|r| r.0).collect(),
        tqm_uncertainty: rows.iter().map(|r| r.1).collect(),
        ratio: rows.iter().map(|r| r.1 / r.0).collect(),
        sqm_gaussian: rows.iter().map(|r| r.2).collect(),
    })
}

/// Log-spaced values from `lo` to `hi` inclusive, `per_decade` per decade.
pub fn log_sweep(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    check_positive("lo", lo)?;
    check_positive("hi", hi)?;
    if hi < lo || per_decade == 0 {
        return Err(Error::InvalidInput(format!("bad sweep [{lo}, {hi}] with {per_decade} points per decade")));
    }
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    if n == 0 {
        return Ok(vec![lo]);
    }
    Ok((0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn power_law_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidInput("need at least two matching points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_superluminal_and_nonpositive() {
        assert!(SlitConfig::new(1.0, 10.0, 1.0, 10.0, 1.0).is_err());
        assert!(SlitConfig::new(0.0, 10.0, 0.1, 10.0, 1.0).is_err());
        let c = SlitConfig::new(2.0, 10.0, 0.1, 10.0, 1.0).unwrap();
        assert!((c.sigma_t - 2.0 * SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn log_sweep_has_five_per_decade() {
        let w = log_sweep(0.01, 10.0, 5).unwrap();
        assert_eq!(w.len(), 16);
        assert!((w[5] - 0.1).abs() < 1e-15);
        assert!((w[15] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_recovers_exponent() {
        let xs = [0.1, 0.2, 0.5, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        assert!((power_law_exponent(&xs, &ys).unwrap() + 1.5).abs() < 1e-12);
    }
}
