use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use toa_core::detectors::*;
use toa_core::grid::SampledAmplitude;
use toa_core::wavepacket::SpacePacket;
use toa_core::Error;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `|int_0^inf dp sqrt(p / 2 pi m) e^(-i p^2 tau / 2m) phi(p)|^2` by a dense
/// trapezoid over the Gaussian window, with `phi` written out here.
fn kijowski_oracle(x0: f64, p0: f64, s: f64, m: f64, tau: f64) -> f64 {
    // p = w^2 keeps the integrand smooth at p = 0
    let sp = 1.0 / s;
    let (lo, hi) = ((p0 - 14.0 * sp).max(0.0).sqrt(), (p0 + 14.0 * sp).sqrt());
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let w = lo + i as f64 * h;
        let p = w * w;
        let phi = (PI * sp * sp).powf(-0.25) * (-(p - p0).powi(2) / (2.0 * sp * sp) - I * ((p - p0) * x0)).exp();
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += phi * (2.0 * w * w / (2.0 * PI * m).sqrt()) * (-I * (p * p * tau / (2.0 * m))).exp() * weight;
    }
    (acc * h).norm_sqr()
}

#[test]
fn kijowski_density_matches_dense_oracle() {
    let pkt = SpacePacket::bullet(50.0, 2.0, 2.0, 1.0).unwrap();
    for &tau in &[15.0, 22.0, 25.0, 28.0, 40.0] {
        let lib = kijowski_bullet_density(&pkt, tau).unwrap();
        let oracle = kijowski_oracle(pkt.x0, pkt.p0, pkt.sigma_x, pkt.mass, tau);
        assert!((lib - oracle).abs() < 1e-10 * oracle.max(1e-6), "tau {tau}: {lib} vs {oracle}");
    }
    // the same oracle, frozen at the mean arrival time
    let at_mean = kijowski_bullet_density(&pkt, 25.0).unwrap();
    assert!((at_mean - 0.089_103_735_900_601_25).abs() < 1e-11, "{at_mean}");
}

#[test]
fn wave_case_density_from_both_half_lines() {
    // a packet at rest on the detector: incident from both sides
    for &(m, s) in &[(1.0, 1.0), (2.0, 0.5), (0.7, 3.0)] {
        let pkt = SpacePacket::new(0.0, 0.0, s, m).unwrap();
        let phi = |p: f64| pkt.momentum_amplitude(p, 0.0);
        let amp = MomentumAmplitude { amplitude: &phi, center: 0.0, width: pkt.sigma_p() };
        for &tau in &[0.0, 0.5, 3.0, 20.0] {
            let lib = kijowski_density(Some(amp), Some(amp), m, tau).unwrap();
            let closed = 2.0 * kijowski_wave_density_origin(m, pkt.sigma_p(), tau).unwrap();
            assert!((lib - closed).abs() < 1e-9 * closed, "m {m} s {s} tau {tau}: {lib} vs {closed}");
        }
    }
}

#[test]
fn wave_case_norm_is_a_quarter() {
    for &(m, sp) in &[(1.0, 1.0), (1.0, 0.3), (2.5, 4.0), (10.0, 0.1)] {
        let n = kijowski_wave_norm(m, sp).unwrap();
        assert!((n.value - 0.25).abs() < 1e-9, "{}", n.value);
    }
}

#[test]
fn kijowski_moments_in_the_long_time_regime() {
    // tau_bar = 100 much larger than m sigma_x^2 = 1, so the initial position
    // spread is negligible next to the momentum spread
    let pkt = SpacePacket::bullet(200.0, 2.0, 1.0, 1.0).unwrap();
    let stats = kijowski_bullet_stats(&pkt).unwrap();
    assert_eq!(stats.mean, 100.0);
    assert!((stats.uncertainty - 35.355_339_059_327_38).abs() < 1e-10);
    assert!(!stats.bullet_regime);

    let narrow = SpacePacket::bullet(2000.0, 20.0, 1.0, 1.0).unwrap();
    let s = kijowski_bullet_stats(&narrow).unwrap();
    assert!(s.bullet_regime);
    let taus = default_tau_grid(&narrow, 1201).unwrap();
    let curve = kijowski_curve(&narrow, &taus).unwrap();
    assert!((curve.norm - 1.0).abs() < 1e-4, "{}", curve.norm);
    // the mean carries a relative correction of order (sigma_p / p0)^2
    assert!((curve.mean / s.mean - 1.0).abs() < 5e-3, "{} vs {}", curve.mean, s.mean);
    assert!((curve.uncertainty / s.uncertainty - 1.0).abs() < 1e-2, "{} vs {}", curve.uncertainty, s.uncertainty);
    assert!(!curve.negative_rates);
}

#[test]
fn kijowski_norm_of_a_fast_packet() {
    let pkt = SpacePacket::bullet(20.0, 3.0, 2.0, 1.0).unwrap();
    let n = kijowski_norm(&pkt).unwrap();
    assert!((n.value - 1.0).abs() < 1e-6, "{}", n.value);
    assert!(kijowski_bullet_stats(&SpacePacket::new(-5.0, 0.0, 1.0, 1.0).unwrap()).is_err());
}

#[test]
fn current_is_the_rate_of_loss_of_the_surviving_norm() {
    let pkt = SpacePacket::bullet(30.0, 1.5, 2.0, 1.0).unwrap();
    for &tau in &[12.0, 20.0, 26.0] {
        let rate = -surviving_norm_rate(&pkt, tau, 1e-2).unwrap();
        let j = probability_current(pkt.amplitude(0.0, tau), pkt.d_amplitude_dx(0.0, tau), pkt.mass);
        assert!((rate - j).abs() < 1e-6, "tau {tau}: {rate} vs {j}");
    }
}

#[test]
fn current_curve_integrates_what_crosses() {
    // tau_bar = 100 is far beyond m sigma_x^2 = 1, where the closed form holds
    let pkt = SpacePacket::bullet(2000.0, 20.0, 1.0, 1.0).unwrap();
    let taus = default_tau_grid(&pkt, 2001).unwrap();
    let j = current_detection_curve(&pkt, &taus).unwrap();
    let crossed = surviving_norm(&pkt, taus[0]).unwrap() - surviving_norm(&pkt, taus[taus.len() - 1]).unwrap();
    assert!((j.norm - crossed).abs() < 1e-6, "{} vs {crossed}", j.norm);
    let bb = sqm_detection_curve(&pkt, &taus).unwrap();
    assert!((bb.mean / j.mean - 1.0).abs() < 1e-2);
    assert!((bb.uncertainty / sqm_uncertainty(&pkt).unwrap() - 1.0).abs() < 2e-2);
}

#[test]
fn detection_curves_refuse_a_short_window() {
    let pkt = SpacePacket::bullet(100.0, 5.0, 5.0, 1.0).unwrap();
    let taus: Vec<f64> = (0..100).map(|i| 15.0 + 0.05 * i as f64).collect();
    assert!(matches!(current_detection_curve(&pkt, &taus), Err(Error::GridTooNarrow(_))));
    assert!(matches!(sqm_detection_curve(&pkt, &taus), Err(Error::GridTooNarrow(_))));
}

/// Free evolution against a hard wall at the origin, by images: the packet
/// minus its mirror image `psi(-x)`, which starts on the far side.
fn dirichlet_oracle(pkt: &SpacePacket, x: f64, tau: f64) -> Complex64 {
    pkt.amplitude(x, tau) - pkt.amplitude(-x, tau)
}

#[test]
fn without_absorption_the_wall_reflects() {
    // the far wall at -60 stays out of reach of the spreading packet
    let pkt = SpacePacket::bullet(6.0, 1.5, 1.0, 1.0).unwrap();
    let init = ms_bullet_initial(&pkt, 60.0, 0.05).unwrap();
    let eps = 0.01;
    let steps = 600;
    let res = marchewka_schuss_evolve(&init, &MsConfig::new(0.0, eps, steps).unwrap(), pkt.mass).unwrap();
    assert_eq!(res.cumulative_absorbed, 0.0);
    let tau = steps as f64 * eps;
    let exact = SampledAmplitude::from_fn(init.grid, |x| dirichlet_oracle(&pkt, x, tau)).unwrap();
    let err = res.final_amplitude.max_abs_diff(&exact);
    assert!(err < 1e-8, "{err}");
    assert!((res.final_norm - 1.0).abs() < 1e-10);
}

#[test]
fn absorbing_run_keeps_its_books() {
    let pkt = SpacePacket::bullet(6.0, 1.5, 1.0, 1.0).unwrap();
    let init = ms_bullet_initial(&pkt, 30.0, 0.05).unwrap();
    let res = marchewka_schuss_evolve(&init, &MsConfig::new(1.0, 0.005, 2000).unwrap(), pkt.mass).unwrap();
    assert!(res.bookkeeping_residual() < 1e-12, "{}", res.bookkeeping_residual());
    assert!(res.cumulative_absorbed > 0.0 && res.cumulative_absorbed < 1.0);
    assert!(res.absorption_probability.iter().all(|&p| (0.0..=1.0).contains(&p)));
    let curve = res.detection_curve().unwrap();
    assert!((curve.norm - res.cumulative_absorbed).abs() < 1e-2);
}

#[test]
fn absorbing_run_rejects_bad_setups() {
    let pkt = SpacePacket::bullet(6.0, 1.5, 1.0, 1.0).unwrap();
    let init = ms_bullet_initial(&pkt, 30.0, 0.05).unwrap();
    assert!(MsConfig::new(-1.0, 0.01, 10).is_err());
    assert!(MsConfig::new(1.0, 0.0, 10).is_err());
    // a packet close to the wall with a huge coupling asks for P > 1
    let touching = ms_bullet_initial(&SpacePacket::bullet(4.0, 1.5, 1.0, 1.0).unwrap(), 30.0, 0.05).unwrap();
    let huge = MsConfig::new(1e12, 0.01, 10).unwrap();
    let r = marchewka_schuss_evolve(&touching, &huge, 1.0);
    assert!(matches!(r, Err(Error::AbsorptionOverflow { step: 0, .. })), "{:?}", r.map(|r| r.absorption_probability));
    let mut shifted = init.clone();
    shifted.grid.start += 1.0;
    assert!(marchewka_schuss_evolve(&shifted, &MsConfig::new(1.0, 0.01, 10).unwrap(), 1.0).is_err());
}

proptest! {
    #[test]
    fn update_algebra_conserves(p in 0.0f64..=1.0, norm in 0.0f64..10.0) {
        let (scale, removed) = ms_update(p, norm);
        prop_assert!((removed + scale * scale * norm - norm).abs() <= 1e-15 * norm.max(1.0));
    }

    #[test]
    fn current_sign_follows_momentum(p in -5.0f64..5.0, x in -3.0f64..3.0, m in 0.1f64..4.0) {
        let psi = (I * (p * x)).exp();
        let j = probability_current(psi, I * p * psi, m);
        prop_assert!((j - p / m).abs() < 1e-12);
    }

    #[test]
    fn wave_density_decays(tau in 0.0f64..100.0, m in 0.1f64..10.0, sp in 0.1f64..10.0) {
        let a = kijowski_wave_density_origin(m, sp, tau).unwrap();
        let b = kijowski_wave_density_origin(m, sp, tau + 1.0).unwrap();
        prop_assert!(b < a);
    }
}
