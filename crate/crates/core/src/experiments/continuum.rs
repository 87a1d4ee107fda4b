//! Discrete first arrival approaching the diffusion detection rate.
//!
//! A lattice with `d_lat` sites between source and detector is mapped onto
//! the continuum distance `d` with `dx = d / d_lat` and `dtau = m dx^2`, which
//! gives the walk the diffusion coefficient `D0 / m` with `D0 = 1/2`. Only
//! steps of the parity of `d_lat` can arrive, so each nonzero `F_n` stands for
//! a clock-time interval `2 dtau` and the rate is `F_n / (2 dtau)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::firstpassage::{
    diffusion_detection_rate, first_arrival_distribution, BinomialTable, DiffusionSpec, ExactProb, WalkSpec,
};
use crate::{Error, Result};

/// Steps per level: `n <= STEPS_PER_SITE_SQ * d_lat^2`.
pub const STEPS_PER_SITE_SQ: u64 = 16;

/// Largest step count whose conservation is re-checked exactly per level.
pub const CONSERVATION_CHECK_LIMIT: u64 = 512;

#[derive(Debug, Clone, Serialize)]
pub struct ContinuumLevel {
    pub refinement: u64,
    pub d_lattice: i64,
    pub dx: f64,
    pub dtau: f64,
    pub n_max: u64,
    /// `max_n |rate_n - D(tau_n)| / max_tau D`
    pub max_error: f64,
    /// Steps up to which conservation was verified in exact arithmetic.
    pub conservation_checked_to: u64,
    pub conservation_exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuumTable {
    pub distance: f64,
    pub mass: f64,
    pub levels: Vec<ContinuumLevel>,
    pub monotone: bool,
}

impl ContinuumTable {
    pub fn finest_error(&self) -> f64 {
        self.levels.last().map(|l| l.max_error).unwrap_or(f64::NAN)
    }

    /// `log2(e_k / e_{k+1}) / log2(r_{k+1} / r_k)` between consecutive levels.
    pub fn observed_orders(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| (w[0].max_error / w[1].max_error).ln() / (w[1].refinement as f64 / w[0].refinement as f64).ln())
            .collect()
    }
}

/// Maximum of the detection rate, reached at `tau = d^2 / 6D`.
fn peak_rate(spec: &DiffusionSpec, d: f64) -> Result<f64> {
    diffusion_detection_rate(spec, d, d * d / (6.0 * spec.coefficient()))
}

fn level(spec: &DiffusionSpec, distance: f64, base: i64, refinement: u64) -> Result<ContinuumLevel> {
    let d_lat = base * refinement as i64;
    let dx = distance / d_lat as f64;
    let dtau = spec.mass * dx * dx;
    let n_max = STEPS_PER_SITE_SQ * (d_lat * d_lat) as u64;
    let f = first_arrival_distribution(&WalkSpec::new(d_lat, n_max, true)?);
    let peak = peak_rate(spec, distance)?;
    let mut max_error: f64 = 0.0;
    for (n, p) in f.iter().enumerate().skip(1) {
        if (n as i64 - d_lat) % 2 != 0 {
            continue;
        }
        let rate = p / (2.0 * dtau);
        let exact = diffusion_detection_rate(spec, distance, n as f64 * dtau)?;
        max_error = max_error.max((rate - exact).abs() / peak);
    }
    let check_to = n_max.min(CONSERVATION_CHECK_LIMIT);
    let table = BinomialTable::new(check_to);
    let conservation_exact = (0..=check_to).all(|n| table.conservation_total(n, d_lat) == ExactProb::one());
    Ok(ContinuumLevel {
        refinement,
        d_lattice: d_lat,
        dx,
        dtau,
        n_max,
        max_error,
        conservation_checked_to: check_to,
        conservation_exact,
    })
}

/// One level per refinement factor, lattice `d_lattice * r` over a
/// continuum distance of `d_lattice` (unit spacing at `r = 1`), unit mass.
pub fn discrete_continuum_experiment(d_lattice: i64, refinements: &[u64]) -> Result<ContinuumTable> {
    if d_lattice < 1 {
        return Err(Error::InvalidInput(format!("lattice distance must be at least 1, got {d_lattice}")));
    }
    if refinements.is_empty() || refinements.iter().any(|&r| r < 1) {
        return Err(Error::InvalidInput("refinement factors must be at least 1".into()));
    }
    let spec = DiffusionSpec::default();
    let distance = d_lattice as f64;
    let levels = refinements
        .par_iter()
        .map(|&r| level(&spec, distance, d_lattice, r))
        .collect::<Result<Vec<_>>>()?;
    let monotone = levels.windows(2).all(|w| w[1].max_error < w[0].max_error);
    Ok(ContinuumTable { distance, mass: spec.mass, levels, monotone })
}
