//! Free-particle kernels, the first-arrival kernel, the time-extended kernel,
//! grid propagation, and a numerical Laplace-transform check of the
//! first-arrival construction.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, SampledAmplitude, SampledAmplitude2};
use crate::quad::{self, Tolerance};
use crate::wavepacket::SpacePacket;
use crate::{check_finite, check_positive, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    FreeSpace,
    FirstArrival,
    TqmFourD,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub mass: f64,
    pub kind: KernelKind,
}

impl KernelSpec {
    pub fn new(mass: f64, kind: KernelKind) -> Result<Self> {
        check_positive("mass", mass)?;
        Ok(KernelSpec { mass, kind })
    }
}

fn check_kernel_args(m: f64, a: f64, b: f64, tau: f64) -> Result<()> {
    check_positive("mass", m)?;
    check_finite("coordinate", a)?;
    check_finite("coordinate", b)?;
    check_finite("tau", tau)?;
    if tau <= 0.0 {
        return Err(Error::InvalidInput(format!("kernels are defined for tau > 0, got {tau}")));
    }
    Ok(())
}

/// Free kernel continued to complex clock time (`Re tau > 0` or on a
/// rotated contour), principal square root.
pub fn free_kernel_complex(m: f64, dx: f64, tau: Complex64) -> Complex64 {
    (m / (2.0 * PI * I * tau)).sqrt() * (I * (m * dx * dx) / (2.0 * tau)).exp()
}

/// `K = sqrt(m / 2 pi i tau) exp(i m (x2 - x1)^2 / 2 tau)`.
pub fn free_kernel_space(m: f64, x2: f64, x1: f64, tau: f64) -> Result<Complex64> {
    check_kernel_args(m, x2, x1, tau)?;
    Ok(free_kernel_complex(m, x2 - x1, Complex64::new(tau, 0.0)))
}

/// `F = (|x2 - x1| / tau) K`.
pub fn first_arrival_kernel(m: f64, x2: f64, x1: f64, tau: f64) -> Result<Complex64> {
    let k = free_kernel_space(m, x2, x1, tau)?;
    Ok(k * ((x2 - x1).abs() / tau))
}

/// Coordinate-time factor `sqrt(i m / 2 pi tau) exp(-i m (t2 - t1)^2 / 2 tau)`.
pub fn tqm_time_factor(m: f64, t2: f64, t1: f64, tau: f64) -> Result<Complex64> {
    check_kernel_args(m, t2, t1, tau)?;
    let dt = t2 - t1;
    Ok((I * m / (2.0 * PI * tau)).sqrt() * (-I * (m * dt * dt / (2.0 * tau))).exp())
}

/// Space factor `sqrt(-i m / 2 pi tau) exp(i m (x2 - x1)^2 / 2 tau)`.
pub fn tqm_space_factor(m: f64, x2: f64, x1: f64, tau: f64) -> Result<Complex64> {
    check_kernel_args(m, x2, x1, tau)?;
    let dx = x2 - x1;
    Ok((-I * m / (2.0 * PI * tau)).sqrt() * (I * (m * dx * dx / (2.0 * tau))).exp())
}

pub fn tqm_mass_phase(m: f64, tau: f64) -> Complex64 {
    (-I * (m * tau / 2.0)).exp()
}

pub fn tqm_kernel(m: f64, t2: f64, x2: f64, t1: f64, x1: f64, tau: f64) -> Result<Complex64> {
    Ok(tqm_time_factor(m, t2, t1, tau)? * tqm_space_factor(m, x2, x1, tau)? * tqm_mass_phase(m, tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropagationMethod {
    /// Trapezoid quadrature of the kernel against the samples.
    Direct,
    /// Convolution theorem on the periodic grid; only for kernels diagonal in
    /// wavenumber.
    Spectral,
}

/// Indices whose amplitude exceeds `1e-12` of the peak.
fn support(values: &[Complex64]) -> (usize, usize) {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let cut = 1e-12 * peak;
    let lo = values.iter().position(|v| v.norm() > cut).unwrap_or(0);
    let hi = values.iter().rposition(|v| v.norm() > cut).unwrap_or(values.len().saturating_sub(1));
    (lo, hi)
}

/// Require at least 8 samples per period of the kernel phase `m s^2 / 2 tau`
/// for every separation `s` between an output point and the input support.
fn check_chirp_resolution(m: f64, tau: f64, step: f64, support: (f64, f64), out: (f64, f64), axis: &str) -> Result<()> {
    let reach = (out.1 - support.0).abs().max((out.0 - support.1).abs());
    let period = 2.0 * PI * tau / (m * reach);
    if step > period / 8.0 {
        return Err(Error::UnderResolved(format!(
            "{axis} step {step:.3e} exceeds 1/8 of the shortest kernel period {period:.3e} (separation {reach:.3e}, tau {tau})"
        )));
    }
    Ok(())
}

/// Trapezoid convolution of `kernel(out - in)` with samples, restricted to
/// the support of the samples.
fn direct_convolve(values: &[Complex64], grid: &Grid, out: &Grid, kernel: &(dyn Fn(f64) -> Complex64 + Sync)) -> Vec<Complex64> {
    let (lo, hi) = support(values);
    (0..out.len)
        .into_par_iter()
        .map(|i| {
            let x = out.point(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..=hi {
                let w = if j == 0 || j == grid.len - 1 { 0.5 } else { 1.0 };
                acc += kernel(x - grid.point(j)) * values[j] * w;
            }
            acc * grid.step
        })
        .collect()
}

/// Propagate a 1D sampled amplitude onto its own grid.
pub fn propagate(initial: &SampledAmplitude, kernel: KernelSpec, tau: f64, method: PropagationMethod) -> Result<SampledAmplitude> {
    match method {
        PropagationMethod::Direct => propagate_onto(initial, initial.grid, kernel, tau),
        PropagationMethod::Spectral => {
            if kernel.kind != KernelKind::FreeSpace {
                return Err(Error::InvalidInput(format!("spectral propagation supports FreeSpace only, got {:?}", kernel.kind)));
            }
            check_positive("tau", tau)?;
            let mut data = initial.values.clone();
            spectral_axis(&mut data, 1, initial.grid.len, initial.grid.step, |k| (-I * (k * k * tau / (2.0 * kernel.mass))).exp())?;
            check_edges(&data, "propagated amplitude")?;
            SampledAmplitude::new(initial.grid, data)
        }
    }
}

/// Direct-quadrature propagation onto an arbitrary output grid.
pub fn propagate_onto(initial: &SampledAmplitude, out: Grid, kernel: KernelSpec, tau: f64) -> Result<SampledAmplitude> {
    check_positive("tau", tau)?;
    let m = kernel.mass;
    let g = initial.grid;
    let (lo, hi) = support(&initial.values);
    check_chirp_resolution(m, tau, g.step, (g.point(lo), g.point(hi)), (out.start, out.end()), "x")?;
    let values = match kernel.kind {
        KernelKind::FreeSpace => {
            direct_convolve(&initial.values, &g, &out, &|s| free_kernel_complex(m, s, Complex64::new(tau, 0.0)))
        }
        KernelKind::FirstArrival => direct_convolve(&initial.values, &g, &out, &|s| {
            free_kernel_complex(m, s, Complex64::new(tau, 0.0)) * (s.abs() / tau)
        }),
        KernelKind::TqmFourD => {
            return Err(Error::InvalidInput("the time-extended kernel acts on (t, x) samples; use propagate_tqm".into()))
        }
    };
    SampledAmplitude::new(out, values)
}

/// Propagate a (t, x) amplitude with the time-extended kernel, onto its own grid.
pub fn propagate_tqm(initial: &SampledAmplitude2, mass: f64, tau: f64, method: PropagationMethod) -> Result<SampledAmplitude2> {
    check_positive("mass", mass)?;
    check_positive("tau", tau)?;
    match method {
        PropagationMethod::Direct => propagate_tqm_onto(initial, initial.t_grid, initial.x_grid, mass, tau),
        PropagationMethod::Spectral => {
            let (nt, nx) = (initial.t_grid.len, initial.x_grid.len);
            let mut data = initial.values.clone();
            // x is the fast axis, t the strided one
            for row in data.chunks_mut(nx) {
                spectral_axis(row, 1, nx, initial.x_grid.step, |k| (-I * (k * k * tau / (2.0 * mass))).exp())?;
            }
            spectral_axis(&mut data, nx, nt, initial.t_grid.step, |w| (I * (w * w * tau / (2.0 * mass))).exp())?;
            let phase = tqm_mass_phase(mass, tau);
            data.iter_mut().for_each(|v| *v *= phase);
            check_edges_2d(&data, nt, nx)?;
            Ok(SampledAmplitude2 { t_grid: initial.t_grid, x_grid: initial.x_grid, values: data })
        }
    }
}

/// Separable direct quadrature of the time-extended kernel onto output grids.
pub fn propagate_tqm_onto(initial: &SampledAmplitude2, t_out: Grid, x_out: Grid, mass: f64, tau: f64) -> Result<SampledAmplitude2> {
    check_positive("tau", tau)?;
    let (tg, xg) = (initial.t_grid, initial.x_grid);
    let (nt, nx) = (tg.len, xg.len);
    let t_marg: Vec<Complex64> = (0..nt).map(|i| (0..nx).map(|j| initial.at(i, j)).max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap()).collect();
    let x_marg: Vec<Complex64> = (0..nx).map(|j| (0..nt).map(|i| initial.at(i, j)).max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap()).collect();
    let (tlo, thi) = support(&t_marg);
    let (xlo, xhi) = support(&x_marg);
    check_chirp_resolution(mass, tau, tg.step, (tg.point(tlo), tg.point(thi)), (t_out.start, t_out.end()), "t")?;
    check_chirp_resolution(mass, tau, xg.step, (xg.point(xlo), xg.point(xhi)), (x_out.start, x_out.end()), "x")?;

    let xk = |s: f64| (-I * mass / (2.0 * PI * tau)).sqrt() * (I * (mass * s * s / (2.0 * tau))).exp();
    let tk = |s: f64| (I * mass / (2.0 * PI * tau)).sqrt() * (-I * (mass * s * s / (2.0 * tau))).exp();

    // pass 1: x-convolution of every input time row
    let rows: Vec<Vec<Complex64>> = (0..nt)
        .map(|i| {
            if i < tlo || i > thi {
                vec![Complex64::new(0.0, 0.0); x_out.len]
            } else {
                direct_convolve(&initial.values[i * nx..(i + 1) * nx], &xg, &x_out, &xk)
            }
        })
        .collect();
    // pass 2: t-convolution of every output x column
    let phase = tqm_mass_phase(mass, tau);
    let mut out = vec![Complex64::new(0.0, 0.0); t_out.len * x_out.len];
    let cols: Vec<Vec<Complex64>> = (0..x_out.len)
        .into_par_iter()
        .map(|j| {
            let column: Vec<Complex64> = rows.iter().map(|r| r[j]).collect();
            direct_convolve(&column, &tg, &t_out, &tk)
        })
        .collect();
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            out[i * x_out.len + j] = v * phase;
        }
    }
    Ok(SampledAmplitude2 { t_grid: t_out, x_grid: x_out, values: out })
}

/// Multiply the transform along one axis by `multiplier(k)`, in place.
/// `stride` is the distance between consecutive samples along the axis.
fn spectral_axis(data: &mut [Complex64], stride: usize, n: usize, step: f64, multiplier: impl Fn(f64) -> Complex64) -> Result<()> {
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let ks: Vec<f64> = (0..n)
        .map(|j| {
            let jj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * PI * jj / (n as f64 * step)
        })
        .collect();
    let mults: Vec<Complex64> = ks.iter().map(|&k| multiplier(k)).collect();
    let lines = data.len() / (n * stride) * stride;
    let base = |line: usize| (line / stride) * n * stride + line % stride;
    let mut spectra = Vec::with_capacity(lines);
    for line in 0..lines {
        let mut buf: Vec<Complex64> = (0..n).map(|j| data[base(line) + j * stride]).collect();
        fwd.process(&mut buf);
        spectra.push(buf);
    }
    // judged against the largest coefficient overall, so lines that hold
    // only the far tail do not trip the check on rounding noise
    let peak = spectra.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let band = spectra.iter().flat_map(|b| &b[n * 7 / 16..n * 9 / 16]).map(|v| v.norm()).fold(0.0, f64::max);
    if peak > 0.0 && band > 1e-10 * peak {
        return Err(Error::UnderResolved(format!("spectrum not resolved: {:.2e} of peak near the Nyquist band", band / peak)));
    }
    for (line, mut buf) in spectra.into_iter().enumerate() {
        for (b, m) in buf.iter_mut().zip(&mults) {
            *b *= m;
        }
        inv.process(&mut buf);
        for (j, b) in buf.iter().enumerate() {
            data[base(line) + j * stride] = b / n as f64;
        }
    }
    Ok(())
}

fn check_edges(values: &[Complex64], what: &str) -> Result<()> {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = values[0].norm().max(values[values.len() - 1].norm());
    if edge > 1e-8 * peak {
        return Err(Error::GridTooNarrow(format!("{what} reaches the periodic boundary ({:.2e} of peak)", edge / peak)));
    }
    Ok(())
}

/// Every boundary row and column of a row-major `nt x nx` array.
fn check_edges_2d(values: &[Complex64], nt: usize, nx: usize) -> Result<()> {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let rows = values[..nx].iter().chain(&values[(nt - 1) * nx..]);
    let cols = (0..nt).flat_map(|i| [values[i * nx], values[i * nx + nx - 1]]);
    let edge = rows.map(|v| v.norm()).chain(cols.map(|v| v.norm())).fold(0.0, f64::max);
    if edge > 1e-8 * peak {
        return Err(Error::GridTooNarrow(format!("propagated amplitude reaches the periodic boundary ({:.2e} of peak)", edge / peak)));
    }
    Ok(())
}

/// `phi_tau(0) = int_{-inf}^0 dx' F_tau(0; x') phi_0(x')` by adaptive quadrature.
pub fn first_arrival_amplitude(pkt: &SpacePacket, tau: f64) -> Result<Complex64> {
    check_positive("tau", tau)?;
    let lo = pkt.x0 - 12.0 * pkt.sigma_x;
    let hi = (pkt.x0 + 12.0 * pkt.sigma_x).min(0.0);
    if hi <= lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let m = pkt.mass;
    let f = |xp: f64| free_kernel_complex(m, xp, Complex64::new(tau, 0.0)) * (xp.abs() / tau) * pkt.amplitude(xp, 0.0);
    let tol = Tolerance::new(1e-14, 1e-10).with_max_intervals(20_000);
    Ok(quad::integrate(f, lo, hi, tol)?.value)
}

/// Bullet approximation `(i (d - v0 tau) / (m sigma^2 f) + v0) phi_free(0)`.
pub fn first_arrival_amplitude_approx(pkt: &SpacePacket, tau: f64) -> Complex64 {
    let f = pkt.dispersion(tau).0;
    let d = pkt.distance();
    let v0 = pkt.velocity();
    let pre = I * (d - v0 * tau) / (pkt.mass * pkt.sigma_x * pkt.sigma_x * f) + v0;
    pre * pkt.amplitude(0.0, tau)
}

/// Which kernel a numerical Laplace transform is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplaceTarget {
    /// `F_tau(x)`
    FirstArrival,
    /// `K_tau(x)`
    Free,
    /// `U_tau = K_tau(0)`
    Return,
}

/// Angle of the rotated contour `tau = r e^(-i theta)`. On it both
/// `e^(-s tau)` (large r) and `e^(i m x^2 / 2 tau)` (small r) decay, and
/// the arcs joining it to the real axis do not contribute.
pub const LAPLACE_CONTOUR_ANGLE: f64 = FRAC_PI_4;

/// Numerical Laplace transform `int_0^inf dtau e^(-s tau) g_tau(x)`.
pub fn laplace_transform(target: LaplaceTarget, m: f64, x: f64, s: f64) -> Result<quad::Integral<Complex64>> {
    check_positive("mass", m)?;
    check_finite("x", x)?;
    check_positive("s", s)?;
    let rot = Complex64::from_polar(1.0, -LAPLACE_CONTOUR_ANGLE);
    let tol = Tolerance::new(1e-15, 1e-11).with_max_intervals(20_000);
    let x = match target {
        LaplaceTarget::Return => 0.0,
        _ => x,
    };
    if x == 0.0 {
        if target == LaplaceTarget::FirstArrival {
            return Ok(quad::Integral { value: Complex64::new(1.0, 0.0), error: 0.0, evaluations: 0 });
        }
        // r = w^2 removes the tau^(-1/2) endpoint singularity
        let g = |w: f64| {
            let tau = rot * (w * w);
            (-s * tau).exp() * free_kernel_complex(m, 0.0, tau) * rot * (2.0 * w)
        };
        return quad::integrate_to_infinity(g, 0.0, 1.0 / s.sqrt(), tol);
    }
    let scale = (m * x * x / (2.0 * s)).sqrt();
    let g = |r: f64| {
        let tau = rot * r;
        let k = free_kernel_complex(m, x, tau);
        let k = match target {
            LaplaceTarget::FirstArrival => k * (x.abs() / tau),
            _ => k,
        };
        (-s * tau).exp() * k * rot
    };
    quad::integrate_to_infinity(g, 0.0, scale, tol)
}

/// `e^((-1 + i) sqrt(m s) |x|)`
pub fn laplace_first_arrival_closed(m: f64, x: f64, s: f64) -> Complex64 {
    (Complex64::new(-1.0, 1.0) * ((m * s).sqrt() * x.abs())).exp()
}

/// `sqrt(m / 2 i s)`
pub fn laplace_return_closed(m: f64, s: f64) -> Complex64 {
    (m / (2.0 * I * s)).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplacePoint {
    pub s: f64,
    pub numeric_f: Complex64,
    pub closed_f: Complex64,
    pub modulus_rel_error: f64,
    pub phase_error: f64,
    pub numeric_k: Complex64,
    pub numeric_u: Complex64,
    /// `|L[K] - L[U] L[F]| / |L[K]|`
    pub factorization_residual: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceReport {
    pub mass: f64,
    pub x: f64,
    pub points: Vec<LaplacePoint>,
}

impl LaplaceReport {
    pub fn max_modulus_error(&self) -> f64 {
        self.points.iter().map(|p| p.modulus_rel_error).fold(0.0, f64::max)
    }

    pub fn max_phase_error(&self) -> f64 {
        self.points.iter().map(|p| p.phase_error).fold(0.0, f64::max)
    }

    pub fn max_factorization_residual(&self) -> f64 {
        self.points.iter().map(|p| p.factorization_residual).fold(0.0, f64::max)
    }
}

pub fn laplace_first_arrival_check(m: f64, x: f64, s_values: &[f64]) -> Result<LaplaceReport> {
    let points = s_values
        .par_iter()
        .map(|&s| {
            let f = laplace_transform(LaplaceTarget::FirstArrival, m, x, s)?;
            let k = laplace_transform(LaplaceTarget::Free, m, x, s)?;
            let u = laplace_transform(LaplaceTarget::Return, m, x, s)?;
            let closed = laplace_first_arrival_closed(m, x, s);
            Ok(LaplacePoint {
                s,
                numeric_f: f.value,
                closed_f: closed,
                modulus_rel_error: (f.value.norm() - closed.norm()).abs() / closed.norm(),
                phase_error: (f.value / closed).arg().abs(),
                numeric_k: k.value,
                numeric_u: u.value,
                factorization_residual: (k.value - u.value * f.value).norm() / k.value.norm(),
                quadrature_error: f.error.max(k.error).max(u.error),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LaplaceReport { mass: m, x, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_modulus_and_rejection() {
        let k = free_kernel_space(1.0, 3.0, -1.0, 2.0).unwrap();
        assert!((k.norm() - (1.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        assert!(free_kernel_space(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(first_arrival_kernel(1.0, 0.0, 0.0, -1.0).is_err());
        assert_eq!(first_arrival_kernel(1.0, 2.0, 2.0, 1.0).unwrap(), Complex64::new(0.0, 0.0));
        let f = first_arrival_kernel(1.0, 2.0, 0.0, 4.0).unwrap();
        assert!((f.norm() - 0.5 * (1.0 / (8.0 * PI)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tqm_kernel_is_product_of_factors() {
        let (m, t2, x2, t1, x1, tau) = (1.3, 0.4, -2.0, 1.1, 0.5, 2.7);
        let k = tqm_kernel(m, t2, x2, t1, x1, tau).unwrap();
        let p = tqm_time_factor(m, t2, t1, tau).unwrap() * tqm_space_factor(m, x2, x1, tau).unwrap() * tqm_mass_phase(m, tau);
        assert!((k - p).norm() < 1e-15);
        let kt = tqm_time_factor(1.0, 5.0, -3.0, 2.0).unwrap();
        assert!((kt.norm() - 0.282_094_791_773_878_1).abs() < 1e-15);
        // the space factor is the ordinary free kernel
        let kx = tqm_space_factor(m, x2, x1, tau).unwrap();
        assert!((kx - free_kernel_space(m, x2, x1, tau).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn laplace_closed_forms() {
        let l = laplace_first_arrival_closed(1.0, 1.0, 1.0);
        assert!((l.norm() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((l.arg() - 1.0).abs() < 1e-15);
        assert_eq!(laplace_first_arrival_closed(2.0, 0.0, 3.0), Complex64::new(1.0, 0.0));
    }
}
