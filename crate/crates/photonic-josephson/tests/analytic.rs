use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use photonic_josephson::analytic::*;
use photonic_josephson::dynamics::Integrator;
use photonic_josephson::engines::Engine;
use photonic_josephson::hamiltonians::{HamiltonianKind, SystemParams};
use photonic_josephson::observables::{Observable, TimeSeries};
use photonic_josephson::scenarios::{builtin, FieldSpec, Scenario};

fn linear_scenario(alpha: f64, cutoff: usize, t_end: f64) -> Scenario {
    let mut s = builtin("fig2a").unwrap().with_cutoffs(cutoff, cutoff).with_horizon(0.01, t_end);
    s.hamiltonian = HamiltonianKind::Linear;
    s.params.eta = 0.0;
    s.field_a = FieldSpec::Coherent(C64::new(alpha, 0.0));
    s.config.record_stride = 100;
    s.observables = vec![Observable::Na, Observable::Nb, Observable::Z, Observable::Pq, Observable::RAbs];
    s
}

fn worst(ts: &TimeSeries, obs: Observable, f: impl Fn(f64) -> f64) -> f64 {
    ts.times.iter().zip(ts.get(obs).unwrap()).map(|(&t, v)| (v - f(t)).abs()).fold(0.0, f64::max)
}

#[test]
fn linear_model_follows_the_branch_amplitudes() {
    let s = linear_scenario(1.5, 16, PI / 0.02);
    let p = DispersiveParams::from_system(&s.params, 1.5).unwrap();
    for engine in [Engine::Full, Engine::Bright] {
        let mut s = s.clone();
        s.engine = engine;
        let ts = s.run().unwrap();
        let branch_mean = |t: f64, pick: fn(&BranchAmplitudes) -> (C64, C64)| {
            let (p1, p2) = pick(&linear_state_amplitudes(&p, t));
            0.5 * (p1.norm_sqr() + p2.norm_sqr())
        };
        assert!(worst(&ts, Observable::Na, |t| branch_mean(t, |b| (b.a_plus, b.a_minus))) < 1e-6);
        assert!(worst(&ts, Observable::Nb, |t| branch_mean(t, |b| (b.b_plus, b.b_minus))) < 1e-6);
        assert!(worst(&ts, Observable::Z, |t| linear_inversion(&p, t)) < 1e-6);
        assert!(worst(&ts, Observable::Pq, |t| linear_purity(&p, t)) < 1e-6);
        assert!(worst(&ts, Observable::RAbs, |t| bloch_components(&p, t).2) < 1e-6);
    }
}

#[test]
fn linear_model_with_cavity_decay() {
    let mut s = linear_scenario(1.5, 14, 100.0);
    s.dissipation.kappa = 0.01;
    s.config.integrator = Integrator::Split;
    let p = DispersiveParams::from_system(&s.params, 1.5).unwrap().with_kappa(0.01);
    let ts = s.run().unwrap();
    assert!(worst(&ts, Observable::Na, |t| dissipative_populations(&p, t).0) < 1e-6);
    assert!(worst(&ts, Observable::Nb, |t| dissipative_populations(&p, t).1) < 1e-6);
    assert!(worst(&ts, Observable::Z, |t| dissipative_populations(&p, t).2) < 1e-6);
}

#[test]
fn purity_extremes_and_period() {
    let p = DispersiveParams::new(4.0, 0.02);
    let quarter = PI / (4.0 * 0.02);
    assert!((linear_purity(&p, quarter) - 0.5 * (1.0 - (-32.0f64).exp())).abs() < 1e-15);
    assert!(linear_purity(&p, 2.0 * quarter).abs() < 1e-12);
    for t in [3.0, 17.5, 60.0] {
        assert!((linear_purity(&p, t) - linear_purity(&p, t + 2.0 * quarter)).abs() < 1e-12);
    }
}

#[test]
fn bloch_components_start_on_the_x_axis() {
    let p = DispersiveParams::new(2.0, 0.02).with_gamma(0.01);
    assert_eq!(bloch_components(&p, 0.0), (1.0, 0.0, 1.0));
    for t in [1.0, 5.0, 30.0] {
        let (x, y, r) = bloch_components(&p, t);
        let s = (0.04 * t).sin();
        assert!(((x * x + y * y).sqrt() - (-4.0 * s * s).exp()).abs() < 1e-14);
        assert!((r - (-4.0 * s * s - 0.01 * t).exp()).abs() < 1e-14);
    }
}

#[test]
fn step_area_matches_quadrature() {
    let p = DispersiveParams::new(4.0, 0.02);
    let area = bloch_step_area(&p).unwrap();
    assert!((area - 11.0778).abs() < 1e-4);
    // Simpson's rule over the full Gaussian.
    let (half, n) = (120.0, 12000);
    let h = 2.0 * half / n as f64;
    let f = |t: f64| (-16.0 * (0.04 * t).powi(2)).exp();
    let simpson: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * f(-half + k as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((area - simpson).abs() < 1e-9);
    assert!(bloch_step_area(&DispersiveParams::new(0.0, 0.02)).is_err());
}

/// Modified Bessel function `I₀` from its power series.
fn bessel_i0(x: f64) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..200 {
        term *= (x / 2.0).powi(2) / (k * k) as f64;
        sum += term;
    }
    sum
}

#[test]
fn theta_over_a_quarter_period() {
    // ∫₀^{π/4U} e^{-|α|² sin²(2Ut)} dt = (π/4U) e^{-|α|²/2} I₀(|α|²/2).
    let p = DispersiveParams::new(4.0, 0.02);
    let quarter = PI / (4.0 * 0.02);
    let exact = quarter * (-8.0f64).exp() * bessel_i0(8.0);
    let times: Vec<f64> = (0..=40_000).map(|k| k as f64 * quarter / 10_000.0).collect();
    let theta = analytic_theta(&p, &times);
    assert!((theta[10_000] - exact).abs() < 1e-6);
    assert!((theta[30_000] - 3.0 * exact).abs() < 1e-6);
    assert!(theta.windows(2).all(|w| w[1] >= w[0]));
    // Each revival adds about one Gaussian step area.
    let area = bloch_step_area(&p).unwrap();
    assert!((theta[30_000] - theta[10_000] - area).abs() < 0.05 * area);
}

#[test]
fn coherence_rate_formula() {
    let p = DispersiveParams::new(3.0, 0.02).with_kappa(0.0012).with_pump(0.1, 1.0);
    let r = 0.02 / (0.0012f64.powi(2) + 0.02f64.powi(2));
    assert!((dissipative_qubit_coherence_rate(&p).unwrap() - 0.0012 * 0.01 * r * r).abs() < 1e-15);
    assert!(dissipative_qubit_coherence_rate(&p.with_kappa(0.0)).is_err());
}

#[test]
fn pumped_empty_mode_settles_near_the_steady_population() {
    let mut s = builtin("fig6").unwrap().with_cutoffs(8, 8).with_horizon(0.01, 300.0);
    s.params = SystemParams::rotating(0.0, 0.0, 1.0, 50.0, 0.3);
    s.field_a = FieldSpec::Vacuum;
    s.dissipation.kappa = 0.05;
    s.config.record_stride = 1000;
    s.observables = vec![Observable::Na];
    let ts = s.run().unwrap();
    let last = ts.get(Observable::Na).unwrap()[ts.len() - 1];
    // Damping shifts the level to η²/(δ² + κ²).
    assert!((last - 0.09 / 1.0025).abs() < 1e-5, "{last}");
    assert!((pump_steady_population(0.3, 1.0).unwrap() - 0.09).abs() < 1e-15);
    assert!(pump_steady_population(0.3, 0.0).is_err());
}

#[test]
fn thermalized_target_halves_the_photons() {
    let rho = thermalized_target(5.0, 76).unwrap();
    let tr: f64 = rho.diag().iter().map(|z| z.re).sum();
    let n: f64 = rho.diag().iter().enumerate().map(|(k, z)| k as f64 * z.re).sum();
    assert!((tr - 1.0).abs() < 1e-12);
    assert!((n - 2.5).abs() < 1e-3);
}
