use proptest::prelude::*;
use toa_core::detectors::probability_current;
use toa_core::grid::Grid;
use toa_core::tqm::*;
use toa_core::wavepacket::{SpacePacket, TimePacket};

fn heavy() -> TqmPacket {
    // m = 100, v0 = 0.2, tau_bar = 1e4
    let space = SpacePacket::bullet(2000.0, 20.0, 1.0, 100.0).unwrap();
    TqmPacket::new(TimePacket::new(0.0, 100.0f64.hypot(20.0), 1.0, 100.0).unwrap(), space).unwrap()
}

#[test]
fn dispersion_budget_of_a_heavy_particle() {
    let b = tqm_dispersion_budget(&heavy()).unwrap();
    assert!((b.tau_bar - 1e4).abs() < 1e-9);
    assert!((b.sigma_bar_tau - 500.0).abs() < 1e-9);
    assert!((b.sigma_tilde_tau - 100.0).abs() < 1e-10);
    assert!((b.sigma_tau - 509.901_951_359_278_5).abs() < 1e-9);
    assert!((b.uncertainty() - b.sigma_tau / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn arrival_distribution_follows_the_budget_at_long_times() {
    // tau_bar = 1e4 is far beyond m sigma_x^2 = m sigma_t^2 = 100
    let pkt = heavy();
    let b = tqm_dispersion_budget(&pkt).unwrap();
    let ts = Grid::span(b.tau_bar - 9.0 * b.sigma_tau, b.tau_bar + 9.0 * b.sigma_tau, 4001).unwrap().points();
    let a = tqm_arrival_distribution(&pkt, &ts, TimeDrift::NonRelativistic).unwrap();
    // the black-box rate v0 rho(0) integrates to one only up to (sigma_p / p0)^2
    assert!((a.captured_norm - 1.0).abs() < 5e-3, "{}", a.captured_norm);
    assert!((a.distribution.norm - a.captured_norm).abs() < 1e-6);
    assert!((a.distribution.mean / b.tau_bar - 1.0).abs() < 1e-2, "{}", a.distribution.mean);
    let u = a.distribution.uncertainty / b.uncertainty();
    assert!((u - 1.0).abs() < 1e-2, "{} vs {}", a.distribution.uncertainty, b.uncertainty());

    let short: Vec<f64> = ts.iter().copied().filter(|t| (t - b.tau_bar).abs() < 1000.0).collect();
    assert!(tqm_arrival_distribution(&pkt, &short, TimeDrift::NonRelativistic).is_err());
}

#[test]
fn time_integrated_current_is_the_space_current() {
    let space = SpacePacket::bullet(10.0, 1.0, 2.0, 1.0).unwrap();
    let pkt = TqmPacket::new(TimePacket::new(0.0, 2f64.sqrt(), 1.5, 1.0).unwrap(), space).unwrap();
    for &(x, tau) in &[(0.0, 8.0), (0.0, 10.0), (-2.0, 9.0)] {
        let j = tqm_current_time_integrated(&pkt, x, tau).unwrap();
        let js = probability_current(space.amplitude(x, tau), space.d_amplitude_dx(x, tau), 1.0);
        assert!((j - js).abs() < 1e-12 * js.abs().max(1e-3), "{j} vs {js}");
    }
}

#[test]
fn coordinate_time_terms_cancel() {
    let space = SpacePacket::bullet(10.0, 1.0, 2.0, 1.0).unwrap();
    let pkt = TqmPacket::new(TimePacket::new(0.0, 2f64.sqrt(), 1.5, 1.0).unwrap(), space).unwrap();
    for &tau in &[0.5, 5.0, 10.0] {
        let c = coordinate_time_cancellation_check(&pkt, tau, 0.0, None).unwrap();
        // the integrand itself is of order E0^2 / m times the density
        let scale = 2.0 * space.density(0.0, tau);
        assert!(c.abs() < 1e-10 * scale.max(1e-12), "tau {tau}: {c}");
    }
    // over a window that cuts the packet the boundary term survives
    let cut = coordinate_time_cancellation_check(&pkt, 5.0, 0.0, Some((-1.0, 5.0))).unwrap();
    assert!(cut.abs() > 1e-6);
}

#[test]
fn max_entropy_pairing() {
    let space = SpacePacket::bullet(50.0, 3.0, 4.0, 2.0).unwrap();
    let pkt = TqmPacket::from_space(space);
    assert_eq!(pkt.time.sigma_t, space.sigma_x);
    let b = tqm_dispersion_budget(&pkt).unwrap();
    // sigma~ / sigma_bar = v0
    assert!((b.sigma_tilde_tau / b.sigma_bar_tau - space.velocity()).abs() < 1e-14);
}

#[test]
fn drift_conventions() {
    let t = TimePacket::new(1.0, 2.0, 1.0, 1.5).unwrap();
    assert_eq!(TimeDrift::NonRelativistic.center(&t, 4.0), 5.0);
    assert!((TimeDrift::Exact.center(&t, 4.0) - t.center(4.0)).abs() < 1e-15);
    let pkt = TqmPacket::new(t, SpacePacket::bullet(5.0, 1.0, 1.0, 1.5).unwrap()).unwrap();
    assert!(tqm_dispersion_budget(&TqmPacket::new(t, SpacePacket::new(-5.0, 0.0, 1.0, 1.5).unwrap()).unwrap()).is_err());
    assert!(tqm_detection_density(&pkt, f64::NAN, 0.0, TimeDrift::Exact).is_err());
}

proptest! {
    #[test]
    fn budget_adds_in_quadrature(m in 0.1f64..100.0, p0 in 0.1f64..50.0, sx in 0.1f64..10.0, st in 0.1f64..10.0, d in 1.0f64..1e4) {
        let space = SpacePacket::bullet(d, p0, sx, m).unwrap();
        let pkt = TqmPacket::new(TimePacket::new(0.0, m.hypot(p0), st, m).unwrap(), space).unwrap();
        let b = tqm_dispersion_budget(&pkt).unwrap();
        let lhs = b.sigma_tau * b.sigma_tau;
        let rhs = b.sigma_bar_tau * b.sigma_bar_tau + b.sigma_tilde_tau * b.sigma_tilde_tau;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        prop_assert!(b.sigma_tau >= b.sigma_bar_tau && b.sigma_tau >= b.sigma_tilde_tau);
    }

    #[test]
    fn detection_density_factorizes(tau in 0.1f64..200.0, t in -50.0f64..250.0) {
        let space = SpacePacket::bullet(10.0, 0.1, 10.0, 1.0).unwrap();
        let pkt = TqmPacket::new(TimePacket::new(0.0, 1.0, 10.0, 1.0).unwrap(), space).unwrap();
        let d = tqm_detection_density(&pkt, tau, t, TimeDrift::NonRelativistic).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, sqm_rate(&pkt, tau) * time_density(&pkt, tau, t, TimeDrift::NonRelativistic));
    }

    #[test]
    fn product_amplitude_factorizes(t in -5.0f64..5.0, x in -5.0f64..5.0, tau in 0.0f64..10.0) {
        let space = SpacePacket::new(-1.0, 0.5, 1.2, 0.8).unwrap();
        let time = TimePacket::new(0.3, 0.9, 0.7, 0.8).unwrap();
        let pkt = TqmPacket::new(time, space).unwrap();
        let a = pkt.amplitude(t, x, tau);
        prop_assert!((a.norm_sqr() - time.density(t, tau) * space.density(x, tau)).abs() < 1e-14);
    }
}
