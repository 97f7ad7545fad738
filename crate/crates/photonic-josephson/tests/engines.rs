use num_complex::Complex64 as C64;
use photonic_josephson::dynamics::{EvolutionConfig, Integrator, MeasurementSchedule, DEFAULT_TRACE_TOLERANCE};
use photonic_josephson::engines::{manifold_averaged_mode_a, resolve, Engine, EnsembleRun};
use photonic_josephson::hamiltonians::{HamiltonianKind, SystemParams};
use photonic_josephson::observables::{Observable, TimeSeries};
use photonic_josephson::scenarios::{Dissipation, FieldSpec, Scenario};
use photonic_josephson::states::QubitSpec;

fn scenario(kind: HamiltonianKind, params: SystemParams, field: FieldSpec, cutoff: usize) -> Scenario {
    Scenario {
        name: "probe".into(),
        hamiltonian: kind,
        params,
        qubit: QubitSpec::PlusSuperposition,
        field_a: field,
        cutoff_a: cutoff,
        cutoff_b: cutoff,
        dissipation: Dissipation::default(),
        measurement: None,
        config: EvolutionConfig {
            dt: 0.01,
            t_end: 4.0,
            record_stride: 10,
            trace_tolerance: DEFAULT_TRACE_TOLERANCE,
            integrator: Integrator::Rk4,
        },
        observables: Observable::STANDARD.iter().copied().chain([Observable::Trace]).collect(),
        engine: Engine::Auto,
    }
}

fn run_as(s: &Scenario, engine: Engine) -> TimeSeries {
    let mut s = s.clone();
    s.engine = engine;
    s.run().unwrap()
}

fn max_gap(a: &TimeSeries, b: &TimeSeries, obs: Observable) -> f64 {
    let (x, y) = (a.get(obs).unwrap(), b.get(obs).unwrap());
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn assert_agree(a: &TimeSeries, b: &TimeSeries, observables: &[Observable], tol: f64) {
    for &o in observables {
        let gap = max_gap(a, b, o);
        assert!(gap < tol, "{}: gap {gap:e}", o.name());
    }
}

const BLOCH: [Observable; 5] = [Observable::Na, Observable::Nb, Observable::Rx, Observable::Ry, Observable::Rz];

fn pumped() -> SystemParams {
    SystemParams::rotating(1.0, 1.0, 1.0, 5.0, 0.05)
}

#[test]
fn bright_matches_full_for_pumped_jc() {
    let s = scenario(HamiltonianKind::Rwa, pumped(), FieldSpec::Coherent(C64::new(0.6, 0.0)), 9);
    assert_eq!(resolve(&s).unwrap(), Engine::Bright);
    let (full, bright) = (run_as(&s, Engine::Full), run_as(&s, Engine::Bright));
    assert!(bright.diagnostics.engine.starts_with("bright"));
    assert_agree(&full, &bright, &BLOCH, 1e-6);
    assert_agree(&full, &bright, &[Observable::Pf, Observable::Pq], 1e-6);
}

#[test]
fn bright_matches_full_with_unequal_couplings() {
    let p = SystemParams::laboratory(1.0, 0.4, 6.0, 7.0);
    let mut s = scenario(HamiltonianKind::Nonrwa, p, FieldSpec::Coherent(C64::new(0.5, 0.2)), 9);
    s.config.integrator = Integrator::Spectral;
    let (full, bright) = (run_as(&s, Engine::Full), run_as(&s, Engine::Bright));
    assert_agree(&full, &bright, &BLOCH, 1e-6);
}

#[test]
fn bright_matches_full_for_linear_and_quadratic_models() {
    for kind in [HamiltonianKind::Linear, HamiltonianKind::Quadratic] {
        let s = scenario(kind, pumped(), FieldSpec::Coherent(C64::new(0.6, 0.0)), 9);
        let (full, bright) = (run_as(&s, Engine::Full), run_as(&s, Engine::Bright));
        assert_agree(&full, &bright, &BLOCH, 1e-6);
    }
}

#[test]
fn bright_matches_full_with_losses() {
    let mut s = scenario(HamiltonianKind::Rwa, pumped(), FieldSpec::Coherent(C64::new(0.6, 0.0)), 7);
    s.dissipation.kappa = 0.05;
    s.dissipation.gamma = 0.02;
    let (full, bright) = (run_as(&s, Engine::Full), run_as(&s, Engine::Bright));
    assert_agree(&full, &bright, &BLOCH, 1e-5);
}

#[test]
fn bright_matches_full_with_measurements() {
    // The product-of-marginals map is sensitive to truncation, so both engines get room.
    let mut s = scenario(HamiltonianKind::Rwa, pumped(), FieldSpec::Coherent(C64::new(0.6, 0.0)), 12);
    s.measurement = Some(MeasurementSchedule::non_selective(0.3));
    let (full, bright) = (run_as(&s, Engine::Full), run_as(&s, Engine::Bright));
    assert_agree(&full, &bright, &BLOCH, 1e-6);
}

#[test]
fn sectors_match_full_under_number_dephasing() {
    let mut p = pumped();
    p.eta = 0.0;
    let mut s = scenario(HamiltonianKind::Rwa, p, FieldSpec::Coherent(C64::new(0.6, 0.0)), 7);
    s.dissipation = Dissipation { kappa: 0.04, gamma: 0.0, dephase_fields: true };
    s.config.dt = 0.005;
    s.config.record_stride = 20;
    assert_eq!(resolve(&s).unwrap(), Engine::Sectors);
    let mut exact = s.clone();
    exact.config.integrator = Integrator::Split;
    let (full, sectors) = (run_as(&exact, Engine::Full), run_as(&s, Engine::Sectors));
    assert_agree(&full, &sectors, &BLOCH, 1e-5);
    assert_agree(&full, &sectors, &[Observable::Trace], 1e-10);
}

fn rabi_probe(field: FieldSpec) -> Scenario {
    let p = SystemParams::laboratory(1.0, 1.0, 5.0, 6.0);
    let mut s = scenario(HamiltonianKind::Nonrwa, p, field, 8);
    s.observables.push(Observable::Pf);
    s
}

#[test]
fn ensemble_matches_full_for_thermal_input() {
    let s = rabi_probe(FieldSpec::Thermal(0.15));
    assert_eq!(resolve(&s).unwrap(), Engine::Ensemble);
    let (full, ens) = (run_as(&s, Engine::Full), run_as(&s, Engine::Ensemble));
    assert_agree(&full, &ens, &BLOCH, 1e-4);
    assert_agree(&full, &ens, &[Observable::Pf, Observable::Pq, Observable::Trace], 1e-4);
}

#[test]
fn ensemble_matches_full_for_dephased_coherent_input() {
    let mut s = rabi_probe(FieldSpec::PoissonDiag(C64::new(0.5, 0.0)));
    s.qubit = QubitSpec::MaximallyMixed;
    let (full, ens) = (run_as(&s, Engine::Full), run_as(&s, Engine::Ensemble));
    assert_agree(&full, &ens, &BLOCH, 1e-4);
    assert_agree(&full, &ens, &[Observable::Pf, Observable::Pq], 1e-4);
}

#[test]
fn ensemble_matches_full_for_jc() {
    let mut p = pumped();
    p.eta = 0.0;
    let s = scenario(HamiltonianKind::Rwa, p, FieldSpec::Thermal(0.2), 9);
    let (full, ens) = (run_as(&s, Engine::Full), run_as(&s, Engine::Ensemble));
    assert_agree(&full, &ens, &BLOCH, 1e-4);
}

#[test]
fn ensemble_mode_a_density_is_consistent() {
    let s = rabi_probe(FieldSpec::Thermal(0.15));
    let run = EnsembleRun::new(&s).unwrap();
    for t in [0.0, 1.3, 7.0] {
        let rho = run.mode_a_density(t);
        let snap = run.snapshot(t, false);
        let tr: f64 = rho.diag().iter().map(|z| z.re).sum();
        let na: f64 = rho.diag().iter().enumerate().map(|(n, z)| n as f64 * z.re).sum();
        assert!((tr - snap.trace).abs() < 1e-10);
        assert!((na - snap.n_a).abs() < 1e-9, "t={t}: {na} vs {}", snap.n_a);
    }
}

#[test]
fn manifold_average_matches_sampled_average() {
    let s = rabi_probe(FieldSpec::Thermal(0.15));
    let run = EnsembleRun::new(&s).unwrap();
    let horizon = 6.0;
    // A tiny tolerance merges everything into one exactly averaged cluster.
    let exact = manifold_averaged_mode_a(&run, horizon, 1e-12).unwrap();
    assert_eq!(exact.clusters, 1);
    let n = 3000;
    let h = horizon / n as f64;
    let mut sampled = run.mode_a_density(0.0).mapv(|z| z * 0.5);
    for k in 1..n {
        sampled = sampled + run.mode_a_density(k as f64 * h);
    }
    sampled = (sampled + run.mode_a_density(horizon).mapv(|z| z * 0.5)).mapv(|z| z / n as f64);
    let err = (&exact.rho - &sampled).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(err < 1e-4, "max deviation {err:e}");
}
