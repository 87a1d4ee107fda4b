//! Cross-metric comparison of arrival-time uncertainties for one packet.

use rayon::prelude::*;
use serde::Serialize;

use crate::detectors::{
    current_detection_curve, default_tau_grid, kijowski_bullet_stats, kijowski_curve, kijowski_wave_norm,
    marchewka_schuss_evolve, ms_packet_initial, sqm_uncertainty, ArrivalDistribution, MsConfig,
};
use crate::kernels::first_arrival_amplitude;
use crate::wavepacket::SpacePacket;
use crate::{check_positive, Error, Result};

/// Relative spread allowed among the Kijowski and current uncertainties.
pub const AGREEMENT_BAND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsOptions {
    pub lambda: f64,
    pub epsilon: f64,
    /// Grid spacing of the absorbing-boundary run.
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonOptions {
    /// Clock times per sampled curve.
    pub points: usize,
    pub ms: Option<MsOptions>,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions { points: 801, ms: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub method: &'static str,
    pub mean: f64,
    pub uncertainty: f64,
    /// Integral of the raw rate; `None` for closed forms.
    pub norm: Option<f64>,
    pub negative_rates: bool,
}

impl MetricRow {
    fn from_curve(method: &'static str, d: &ArrivalDistribution) -> Self {
        MetricRow { method, mean: d.mean, uncertainty: d.uncertainty, norm: Some(d.norm), negative_rates: d.negative_rates }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveCase {
    pub norm: f64,
    /// Set when the Kijowski density of the packet at rest on the detector
    /// integrates to less than one.
    pub under_counting: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub packet: SpacePacket,
    pub rows: Vec<MetricRow>,
    pub bullet_regime: bool,
    /// `(max - min) / min` of the Kijowski-full, Kijowski-bullet and current
    /// uncertainties.
    pub spread: f64,
    pub agreement: bool,
    pub wave_case: WaveCase,
    #[serde(skip)]
    pub curves: Vec<(&'static str, ArrivalDistribution)>,
}

impl MetricReport {
    pub fn row(&self, method: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

pub fn metric_comparison(pkt: &SpacePacket, opts: &ComparisonOptions) -> Result<MetricReport> {
    let stats = kijowski_bullet_stats(pkt)?;
    let taus = default_tau_grid(pkt, opts.points)?;

    let kij = kijowski_curve(pkt, &taus)?;
    let current = current_detection_curve(pkt, &taus)?;
    let first: Vec<f64> = taus
        .par_iter()
        // the kernel vanishes as tau -> 0 for a packet away from the detector
        .map(|&t| if t > 0.0 { Ok(first_arrival_amplitude(pkt, t)?.norm_sqr()) } else { Ok(0.0) })
        .collect::<Result<_>>()?;
    let first = ArrivalDistribution::from_samples(taus.clone(), first)?;

    let mut rows = vec![
        MetricRow::from_curve("kijowski_full", &kij),
        MetricRow { method: "kijowski_bullet", mean: stats.mean, uncertainty: stats.uncertainty, norm: None, negative_rates: false },
        MetricRow::from_curve("current", &current),
        MetricRow::from_curve("first_arrival_kernel", &first),
    ];
    let mut curves = vec![("kijowski_full", kij), ("current", current), ("first_arrival_kernel", first)];

    if let Some(ms) = opts.ms {
        let curve = marchewka_schuss_curve(pkt, &ms, taus[0], taus[taus.len() - 1])?;
        rows.push(MetricRow::from_curve("marchewka_schuss", &curve));
        curves.push(("marchewka_schuss", curve));
    }

    let u: Vec<f64> = rows[..3].iter().map(|r| r.uncertainty).collect();
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;

    let wave = kijowski_wave_norm(pkt.mass, pkt.sigma_p())?.value;
    Ok(MetricReport {
        packet: *pkt,
        rows,
        bullet_regime: stats.bullet_regime,
        spread,
        agreement: spread <= AGREEMENT_BAND,
        wave_case: WaveCase { norm: wave, under_counting: wave < 1.0 },
        curves,
    })
}

/// Absorbing-boundary run started from the freely evolved packet at `tau_lo`
/// on a grid long enough to hold it, so the wall only sees the window.
fn marchewka_schuss_curve(pkt: &SpacePacket, ms: &MsOptions, tau_lo: f64, tau_hi: f64) -> Result<ArrivalDistribution> {
    check_positive("step", ms.step)?;
    let tau0 = tau_lo;
    let reach = -pkt.center(tau0) + 12.0 * pkt.width(tau0).max(pkt.width(tau_hi));
    if reach <= 0.0 {
        return Err(Error::InvalidInput("the packet already overlaps the detector at the start of the window".into()));
    }
    let steps = ((tau_hi - tau0) / ms.epsilon).ceil() as usize + 1;
    let initial = ms_packet_initial(pkt, tau0, reach, ms.step)?;
    let result = marchewka_schuss_evolve(&initial, &MsConfig::new(ms.lambda, ms.epsilon, steps)?, pkt.mass)?;
    let curve = result.detection_curve()?;
    ArrivalDistribution::from_samples(curve.taus.iter().map(|t| t + tau0).collect(), curve.rates)
}

/// Closed-form uncertainty of the black-box detector, for reference.
pub fn current_closed_form(pkt: &SpacePacket) -> Result<f64> {
    sqm_uncertainty(pkt)
}
