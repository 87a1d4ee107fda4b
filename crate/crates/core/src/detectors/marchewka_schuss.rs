//! Marchewka-Schuss absorbing boundary at `x = 0`.
//!
//! The wave function lives on `[-L, 0]`. Between absorptions it evolves freely
//! with a Dirichlet wall at the detector (trajectories that reach the wall do
//! not come back as transmitted mass), computed exactly in the sine basis.
//! Each step removes the fraction `P_n = (eps / 2 pi m) lambda |psi_n'(0)|^2`
//! and rescales the survivor by `sqrt(1 - P_n)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::ArrivalDistribution;
use crate::grid::{Grid, SampledAmplitude};
use crate::wavepacket::SpacePacket;
use crate::{check_finite, check_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub steps: usize,
}

impl MsConfig {
    /// `lambda` has no natural default and must be supplied.
    pub fn new(lambda: f64, epsilon: f64, steps: usize) -> Result<Self> {
        check_finite("lambda", lambda)?;
        if lambda < 0.0 {
            return Err(Error::InvalidInput(format!("lambda must be non-negative, got {lambda}")));
        }
        check_positive("epsilon", epsilon)?;
        Ok(MsConfig { lambda, epsilon, steps })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MsResult {
    /// Clock time of each step, `n eps`.
    pub taus: Vec<f64>,
    /// Absorption probability `P_n` of each step.
    pub absorption_probability: Vec<f64>,
    /// Probability mass removed at each step, `P_n ||psi_n||^2`.
    pub absorbed: Vec<f64>,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub cumulative_absorbed: f64,
    #[serde(skip)]
    pub final_amplitude: SampledAmplitude,
}

impl MsResult {
    /// `|absorbed + surviving - initial|`
    pub fn bookkeeping_residual(&self) -> f64 {
        (self.cumulative_absorbed + self.final_norm - self.initial_norm).abs()
    }

    /// Detection rate `absorbed_n / eps` against clock time.
    pub fn detection_curve(&self) -> Result<ArrivalDistribution> {
        let eps = if self.taus.len() > 1 { self.taus[1] - self.taus[0] } else { 1.0 };
        ArrivalDistribution::from_samples(self.taus.clone(), self.absorbed.iter().map(|a| a / eps).collect())
    }
}

/// The update algebra of one step: given `P` and the norm before
/// absorption, returns `(amplitude scale, mass removed)`. Mass removed plus
/// `scale^2 * norm` equals `norm` identically.
pub fn ms_update(p: f64, norm: f64) -> (f64, f64) {
    ((1.0 - p).sqrt(), p * norm)
}

/// Sample a packet on `[-length, 0]` with spacing close to `step`, the last
/// point on the detector.
pub fn ms_bullet_initial(pkt: &SpacePacket, length: f64, step: f64) -> Result<SampledAmplitude> {
    ms_packet_initial(pkt, 0.0, length, step)
}

/// As [`ms_bullet_initial`], but with the freely evolved packet at clock
/// time `tau0`. Useful when the packet only reaches the detector late: the
/// wall plays no role before then, and the grid can be much shorter.
pub fn ms_packet_initial(pkt: &SpacePacket, tau0: f64, length: f64, step: f64) -> Result<SampledAmplitude> {
    check_finite("tau0", tau0)?;
    check_positive("length", length)?;
    check_positive("step", step)?;
    let n = (length / step).round().max(2.0) as usize;
    let grid = Grid::new(-length, length / n as f64, n + 1)?;
    let mut s = SampledAmplitude::from_fn(grid, |x| pkt.amplitude(x, tau0))?;
    let last = s.values.len() - 1;
    s.values[0] = Complex64::new(0.0, 0.0);
    s.values[last] = Complex64::new(0.0, 0.0);
    Ok(s)
}

/// Type-I sine transform of the interior samples `v[1..n]` (endpoints are
/// zero), via a complex FFT of the odd extension.
struct Dst {
    n: usize,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Dst {
    fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        Dst { n, fft }
    }

    /// `S_k = sum_j v_j sin(pi j k / n)` for `k = 0..=n` (zero at both ends).
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for j in 1..n {
            buf[j] = v[j];
            buf[2 * n - j] = -v[j];
        }
        self.fft.process(&mut buf);
        let half_i = Complex64::new(0.0, 0.5);
        let mut out: Vec<Complex64> = buf[..=n].iter().map(|y| y * half_i).collect();
        out[0] = Complex64::new(0.0, 0.0);
        out[n] = Complex64::new(0.0, 0.0);
        out
    }
}

pub fn marchewka_schuss_evolve(initial: &SampledAmplitude, cfg: &MsConfig, m: f64) -> Result<MsResult> {
    check_positive("mass", m)?;
    let g = initial.grid;
    if g.end().abs() > 1e-9 * g.step.max(1.0) {
        return Err(Error::InvalidInput(format!("the grid must end on the detector at 0, ends at {}", g.end())));
    }
    let n = g.len - 1;
    let h = g.step;
    let length = n as f64 * h;
    let mut values = initial.values.clone();
    values[0] = Complex64::new(0.0, 0.0);
    values[n] = Complex64::new(0.0, 0.0);
    let initial_norm = h * values.iter().map(|v| v.norm_sqr()).sum::<f64>();
    if (initial_norm - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!("initial amplitude must be normalized on x <= 0, norm is {initial_norm}")));
    }

    let dst = Dst::new(n);
    let mut coeffs = dst.apply(&values);
    let kappa: Vec<f64> = (0..=n).map(|k| PI * k as f64 / length).collect();
    let phases: Vec<Complex64> = kappa.iter().map(|k| Complex64::new(0.0, -k * k * cfg.epsilon / (2.0 * m)).exp()).collect();
    // psi(x) = (2/n) sum_k S_k sin(kappa_k (x + L)), so psi'(0) = (2/n) sum_k S_k kappa_k (-1)^k
    // and ||psi||^2 = (2 h / n) sum_k |S_k|^2.
    let wall_slope = |c: &[Complex64]| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..n {
            let t = c[k] * kappa[k];
            if k % 2 == 0 {
                acc += t;
            } else {
                acc -= t;
            }
        }
        acc * (2.0 / n as f64)
    };
    let spectral_norm = |c: &[Complex64]| 2.0 * h / n as f64 * c.iter().map(|v| v.norm_sqr()).sum::<f64>();

    let mut taus = Vec::with_capacity(cfg.steps);
    let mut probs = Vec::with_capacity(cfg.steps);
    let mut absorbed = Vec::with_capacity(cfg.steps);
    let mut cumulative = 0.0;
    let mut norm = spectral_norm(&coeffs);
    for step in 0..cfg.steps {
        let slope = wall_slope(&coeffs);
        let p = cfg.epsilon / (2.0 * PI * m) * cfg.lambda * slope.norm_sqr();
        if p > 1.0 {
            return Err(Error::AbsorptionOverflow { step, p });
        }
        let (scale, removed) = ms_update(p, norm);
        for (c, ph) in coeffs.iter_mut().zip(&phases) {
            *c *= ph * scale;
        }
        norm -= removed;
        cumulative += removed;
        taus.push(step as f64 * cfg.epsilon);
        probs.push(p);
        absorbed.push(removed);
    }

    // back to the grid: the sine transform is its own inverse up to 2/n
    let back = dst.apply(&coeffs);
    let final_values: Vec<Complex64> = back.iter().map(|v| v * (2.0 / n as f64)).collect();
    let final_amplitude = SampledAmplitude::new(g, final_values)?;
    let final_norm = final_amplitude.norm();
    Ok(MsResult {
        taus,
        absorption_probability: probs,
        absorbed,
        initial_norm,
        final_norm,
        cumulative_absorbed: cumulative,
        final_amplitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_algebra_is_conservative() {
        for &(p, norm) in &[(0.0, 1.0), (0.3, 0.7), (1.0, 0.25), (1e-9, 0.999)] {
            let (scale, removed) = ms_update(p, norm);
            assert!((removed + scale * scale * norm - norm).abs() < 1e-15);
        }
    }

    #[test]
    fn sine_transform_round_trip() {
        let n = 64;
        let dst = Dst::new(n);
        let mut v: Vec<Complex64> = (0..=n).map(|j| Complex64::new((j as f64 * 0.3).sin(), (j as f64 * 0.11).cos())).collect();
        v[0] = Complex64::new(0.0, 0.0);
        v[n] = Complex64::new(0.0, 0.0);
        let back: Vec<Complex64> = dst.apply(&dst.apply(&v)).iter().map(|c| c * (2.0 / n as f64)).collect();
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn lambda_is_required_non_negative() {
        assert!(MsConfig::new(-1.0, 0.01, 10).is_err());
        assert!(MsConfig::new(1.0, 0.0, 10).is_err());
    }

    #[test]
    fn grid_must_end_on_detector() {
        let g = Grid::new(-10.0, 0.1, 50).unwrap();
        let s = SampledAmplitude::from_fn(g, |_| Complex64::new(0.0, 0.0)).unwrap();
        assert!(marchewka_schuss_evolve(&s, &MsConfig::new(1.0, 0.01, 5).unwrap(), 1.0).is_err());
    }
}
