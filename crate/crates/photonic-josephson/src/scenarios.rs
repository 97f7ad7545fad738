//! Named experiment definitions and their file format.
//!
//! A [`Scenario`] carries everything a run needs. Builtins reproduce the
//! figure parameter sets; [`Scenario::from_toml`] reads the same record from
//! a flat TOML document.

use std::f64::consts::PI;

use ndarray as nd;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{EvolutionConfig, Integrator, MeasurementKind, MeasurementSchedule, DEFAULT_TRACE_TOLERANCE};
use crate::engines::{self, Engine};
use crate::error::{invalid, Error, Result};
use crate::hamiltonians::{HamiltonianKind, SystemParams};
use crate::observables::{Observable, Observer, RunDiagnostics, TimeSeries};
use crate::states::{qubit_state, QubitSpec};

pub const BUILTIN_NAMES: [&str; 10] =
    ["fig1", "fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8a", "fig8b"];

/// Measurement intervals of the Zeno sweep, slowest first.
pub const FIG5_TAUS: [f64; 5] = [f64::INFINITY, 1.0 / 100.0, 1.0 / 500.0, 1.0 / 1000.0, 1.0 / 1500.0];

/// Initial state of mode a; mode b always starts in vacuum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldSpec {
    Vacuum,
    Coherent(C64),
    Thermal(f64),
    /// Photon-number diagonal of `|α><α|`.
    PoissonDiag(C64),
}

impl FieldSpec {
    pub fn mean_photons(&self) -> f64 {
        match *self {
            FieldSpec::Vacuum => 0.0,
            FieldSpec::Coherent(a) | FieldSpec::PoissonDiag(a) => a.norm_sqr(),
            FieldSpec::Thermal(n) => n,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, FieldSpec::Vacuum | FieldSpec::Coherent(_))
    }

    /// Amplitude of the coherent component (zero for vacuum).
    pub fn amplitude(&self) -> Option<C64> {
        match *self {
            FieldSpec::Vacuum => Some(C64::new(0.0, 0.0)),
            FieldSpec::Coherent(a) => Some(a),
            _ => None,
        }
    }
}

/// Loss channels: `κ` on both modes (or their number operators), `γ` on `σx`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dissipation {
    pub kappa: f64,
    pub gamma: f64,
    /// Replace the jumps `a, b` by `n_a, n_b`.
    pub dephase_fields: bool,
}

impl Dissipation {
    pub fn is_closed(&self) -> bool {
        self.kappa == 0.0 && self.gamma == 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub hamiltonian: HamiltonianKind,
    pub params: SystemParams,
    pub qubit: QubitSpec,
    pub field_a: FieldSpec,
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    pub dissipation: Dissipation,
    pub measurement: Option<MeasurementSchedule>,
    pub config: EvolutionConfig,
    pub observables: Vec<Observable>,
    /// Propagation engine; `Auto` picks the cheapest exact one.
    pub engine: Engine,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.cutoff_a == 0 || self.cutoff_b == 0 {
            return invalid("cutoffs must be at least 1");
        }
        let d = self.dissipation;
        if !(d.kappa >= 0.0) || !(d.gamma >= 0.0) {
            return invalid("rates must be non-negative");
        }
        if let Some(m) = &self.measurement {
            m.validate(self.config.dt)?;
            if !d.is_closed() {
                return invalid("measurement schedules and loss channels cannot be combined");
            }
        }
        if self.observables.is_empty() {
            return invalid("at least one observable is required");
        }
        Ok(())
    }

    /// Runs the scenario and collects its observables.
    pub fn run(&self) -> Result<TimeSeries> {
        let mut rec = crate::observables::Recorder::new(&self.observables, "");
        let diag = self.run_with(&mut rec)?;
        rec.absorb(&diag);
        rec.finish()
    }

    /// Runs the scenario against an arbitrary observer.
    pub fn run_with(&self, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
        self.validate()?;
        engines::run(self, obs)
    }

    /// Replaces both cutoffs, keeping every other field.
    pub fn with_cutoffs(mut self, cutoff_a: usize, cutoff_b: usize) -> Self {
        self.cutoff_a = cutoff_a;
        self.cutoff_b = cutoff_b;
        self
    }

    pub fn with_horizon(mut self, dt: f64, t_end: f64) -> Self {
        self.config.dt = dt;
        self.config.t_end = t_end;
        self
    }

    /// Parses a scenario document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            Error::Config { line, message: e.message().to_string() }
        })?;
        file.into_scenario().map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Config { line: 0, message: m },
            other => other,
        })
    }

    /// Writes the scenario in the file format.
    pub fn to_toml(&self) -> Result<String> {
        let file = ScenarioFile::from_scenario(self)?;
        toml::to_string(&file).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Flat on-disk record; every key is optional except `scenario`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianKind>,
    pub g_a: Option<f64>,
    pub g_b: Option<f64>,
    pub omega_c: Option<f64>,
    #[serde(rename = "Omega")]
    pub omega: Option<f64>,
    pub omega_p: Option<f64>,
    pub delta: Option<f64>,
    #[serde(rename = "Delta")]
    pub big_delta: Option<f64>,
    pub eta: Option<f64>,
    pub alpha_re: Option<f64>,
    pub alpha_im: Option<f64>,
    pub nbar_a: Option<f64>,
    pub initial_field_a: Option<String>,
    pub initial_qubit: Option<String>,
    pub cutoff_a: Option<usize>,
    pub cutoff_b: Option<usize>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub dephase_fields: Option<bool>,
    pub tau: Option<f64>,
    pub meas_kind: Option<String>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub record_stride: Option<usize>,
    pub trace_tolerance: Option<f64>,
    pub observables: Option<String>,
}

fn resolve_frequency(name: &str, absolute: Option<f64>, detuning: Option<f64>, omega_p: f64) -> Result<f64> {
    match (absolute, detuning) {
        (Some(w), Some(d)) if ((w - omega_p) - d).abs() > 1e-12 * w.abs().max(1.0) => {
            invalid(format!("{name}: absolute frequency and detuning disagree for omega_p = {omega_p}"))
        }
        (Some(w), _) => Ok(w),
        (None, Some(d)) => Ok(d + omega_p),
        (None, None) => invalid(format!("{name} requires either the absolute frequency or the detuning")),
    }
}

fn qubit_key(spec: QubitSpec) -> Result<&'static str> {
    match spec {
        QubitSpec::PlusSuperposition => Ok("plus"),
        QubitSpec::Minus => Ok("minus_basis"),
        QubitSpec::Plus => Ok("plus_basis"),
        QubitSpec::MaximallyMixed => Ok("mixed"),
        QubitSpec::Bloch { .. } => invalid("Bloch-angle qubit states have no file representation"),
    }
}

fn parse_qubit(s: &str) -> Result<QubitSpec> {
    match s {
        "plus" => Ok(QubitSpec::PlusSuperposition),
        "minus_basis" => Ok(QubitSpec::Minus),
        "plus_basis" => Ok(QubitSpec::Plus),
        "mixed" => Ok(QubitSpec::MaximallyMixed),
        _ => invalid(format!("initial_qubit must be plus, minus_basis, plus_basis or mixed (got '{s}')")),
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let hamiltonian = self.hamiltonian.unwrap_or(HamiltonianKind::Rwa);
        let omega_p = self.omega_p.unwrap_or(0.0);
        let params = SystemParams {
            g_a: self.g_a.unwrap_or(1.0),
            g_b: self.g_b.unwrap_or(1.0),
            omega_c: resolve_frequency("mode frequency", self.omega_c, self.delta, omega_p)?,
            omega_q: resolve_frequency("qubit frequency", self.omega, self.big_delta, omega_p)?,
            omega_p,
            eta: self.eta.unwrap_or(0.0),
            mode_b_offset: 0.0,
        };
        let alpha = C64::new(self.alpha_re.unwrap_or(0.0), self.alpha_im.unwrap_or(0.0));
        let field_a = match self.initial_field_a.as_deref().unwrap_or("coherent") {
            "coherent" => FieldSpec::Coherent(alpha),
            "vacuum" => FieldSpec::Vacuum,
            "thermal" => match self.nbar_a {
                Some(n) => FieldSpec::Thermal(n),
                None => return invalid("initial_field_a = thermal requires nbar_a"),
            },
            "poisson_diag" => match (self.nbar_a, self.alpha_re.is_some() || self.alpha_im.is_some()) {
                (Some(n), false) => FieldSpec::PoissonDiag(C64::new(n.sqrt(), 0.0)),
                (_, true) => FieldSpec::PoissonDiag(alpha),
                (None, false) => return invalid("initial_field_a = poisson_diag requires alpha or nbar_a"),
            },
            other => {
                return invalid(format!(
                    "initial_field_a must be coherent, thermal, poisson_diag or vacuum (got '{other}')"
                ))
            }
        };
        let qubit = parse_qubit(self.initial_qubit.as_deref().unwrap_or("plus"))?;
        let dt = self.dt.unwrap_or(crate::dynamics::DEFAULT_DT);
        let (kappa, gamma) = (self.kappa.unwrap_or(0.0), self.gamma.unwrap_or(0.0));
        // Same propagators as the builtins: exact unitary steps, split dissipators.
        let integrator = if kappa == 0.0 && gamma == 0.0 { Integrator::Spectral } else { Integrator::Split };
        let config = EvolutionConfig {
            dt,
            t_end: self.t_end.unwrap_or(1.0),
            record_stride: self.record_stride.unwrap_or(1),
            trace_tolerance: self.trace_tolerance.unwrap_or(DEFAULT_TRACE_TOLERANCE),
            integrator,
        };
        let tau = self.tau.unwrap_or(f64::INFINITY);
        let measurement = match self.meas_kind.as_deref().unwrap_or("none") {
            "none" => None,
            "nonselective" => Some(MeasurementSchedule::non_selective(tau)),
            "projective" => Some(MeasurementSchedule::projective(tau, qubit_state(qubit).to_density())),
            other => return invalid(format!("meas_kind must be none, nonselective or projective (got '{other}')")),
        };
        let observables = match &self.observables {
            None => Observable::STANDARD.to_vec(),
            Some(list) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<Vec<Observable>>>()?,
        };
        let sc = Scenario {
            name: self.scenario,
            hamiltonian,
            params,
            qubit,
            field_a,
            cutoff_a: self.cutoff_a.unwrap_or(20),
            cutoff_b: self.cutoff_b.unwrap_or(20),
            dissipation: Dissipation {
                kappa,
                gamma,
                dephase_fields: self.dephase_fields.unwrap_or(false),
            },
            measurement,
            config,
            observables,
            engine: Engine::Auto,
        };
        sc.validate()?;
        Ok(sc)
    }

    fn from_scenario(s: &Scenario) -> Result<Self> {
        let p = &s.params;
        if p.mode_b_offset != 0.0 {
            return invalid("detuned mode pairs have no file representation");
        }
        let (kind, alpha, nbar) = match s.field_a {
            FieldSpec::Vacuum => ("vacuum", None, None),
            FieldSpec::Coherent(a) => ("coherent", Some(a), None),
            FieldSpec::Thermal(n) => ("thermal", None, Some(n)),
            FieldSpec::PoissonDiag(a) => ("poisson_diag", Some(a), None),
        };
        let (tau, meas_kind) = match &s.measurement {
            None => (None, "none"),
            Some(m) => {
                if m.collapse_populations {
                    return invalid("population-collapsing measurements have no file representation");
                }
                match m.kind {
                    MeasurementKind::NonSelective => (Some(m.tau), "nonselective"),
                    MeasurementKind::Projective => {
                        let expected = qubit_state(s.qubit).to_density();
                        if (&m.qubit_reset - &expected).iter().any(|z| z.norm() > 1e-15) {
                            return invalid("projective reset must equal the initial qubit state in files");
                        }
                        (Some(m.tau), "projective")
                    }
                }
            }
        };
        let names: Vec<&str> = s.observables.iter().map(|o| o.name()).collect();
        Ok(Self {
            scenario: s.name.clone(),
            hamiltonian: Some(s.hamiltonian),
            g_a: Some(p.g_a),
            g_b: Some(p.g_b),
            omega_c: Some(p.omega_c),
            omega: Some(p.omega_q),
            omega_p: Some(p.omega_p),
            delta: Some(p.delta()),
            big_delta: Some(p.big_delta()),
            eta: Some(p.eta),
            alpha_re: alpha.map(|a| a.re),
            alpha_im: alpha.map(|a| a.im),
            nbar_a: nbar,
            initial_field_a: Some(kind.to_string()),
            initial_qubit: Some(qubit_key(s.qubit)?.to_string()),
            cutoff_a: Some(s.cutoff_a),
            cutoff_b: Some(s.cutoff_b),
            kappa: Some(s.dissipation.kappa),
            gamma: Some(s.dissipation.gamma),
            dephase_fields: Some(s.dissipation.dephase_fields),
            tau,
            meas_kind: Some(meas_kind.to_string()),
            dt: Some(s.config.dt),
            t_end: Some(s.config.t_end),
            record_stride: Some(s.config.record_stride),
            trace_tolerance: Some(s.config.trace_tolerance),
            observables: Some(names.join(",")),
        })
    }
}

/// Truncation keeping at least `1 - 1e-6` of the initial photon distribution.
pub fn default_cutoff(field: &FieldSpec) -> usize {
    match *field {
        FieldSpec::Vacuum => 4,
        FieldSpec::Thermal(n) => {
            if n <= 0.0 {
                return 4;
            }
            // Tail (n/(n+1))^c below 1e-6.
            let c = (1e-6f64).ln() / (n / (n + 1.0)).ln();
            c.ceil() as usize
        }
        FieldSpec::Coherent(a) | FieldSpec::PoissonDiag(a) => {
            let m = a.norm_sqr();
            let mut w = (-m).exp();
            let mut kept = w;
            let mut c = 1;
            while kept < 1.0 - 1e-6 * 0.5 || (c as f64) < m + 1.0 {
                w *= m / c as f64;
                kept += w;
                c += 1;
            }
            c
        }
    }
}

fn closed_rwa(name: &str, big_delta: f64, alpha: f64, t_end: f64, stride: usize) -> Scenario {
    let cutoff = default_cutoff(&FieldSpec::Coherent(C64::new(alpha, 0.0))).max((10.0 * alpha) as usize);
    Scenario {
        name: name.to_string(),
        hamiltonian: HamiltonianKind::Rwa,
        params: SystemParams::rotating(1.0, 1.0, 1.0, big_delta, 0.1),
        qubit: QubitSpec::PlusSuperposition,
        field_a: FieldSpec::Coherent(C64::new(alpha, 0.0)),
        cutoff_a: cutoff,
        cutoff_b: cutoff,
        dissipation: Dissipation::default(),
        measurement: None,
        config: EvolutionConfig {
            dt: crate::dynamics::DEFAULT_DT,
            t_end,
            record_stride: stride,
            trace_tolerance: DEFAULT_TRACE_TOLERANCE,
            integrator: Integrator::Spectral,
        },
        observables: Observable::STANDARD.to_vec(),
        engine: Engine::Auto,
    }
}

fn rabi(name: &str, field_a: FieldSpec, t_end: f64, dt: f64, stride: usize, observables: Vec<Observable>) -> Scenario {
    let cutoff = default_cutoff(&field_a);
    Scenario {
        name: name.to_string(),
        hamiltonian: HamiltonianKind::Nonrwa,
        params: SystemParams::laboratory(1.0, 1.0, 54.3, 150.0),
        qubit: QubitSpec::PlusSuperposition,
        field_a,
        cutoff_a: cutoff,
        cutoff_b: cutoff,
        dissipation: Dissipation::default(),
        measurement: None,
        config: EvolutionConfig {
            dt,
            t_end,
            record_stride: stride,
            trace_tolerance: DEFAULT_TRACE_TOLERANCE,
            integrator: Integrator::Spectral,
        },
        observables,
        engine: Engine::Auto,
    }
}

/// Zeno-sweep member for one measurement interval.
pub fn fig5_member(tau: f64) -> Scenario {
    let mut s = closed_rwa("fig5", 50.0, 2.0, 5.0, 3);
    s.params.eta = 0.0;
    s.config.dt = 1.0 / 3000.0;
    s.measurement = Some(MeasurementSchedule::non_selective(tau));
    s
}

/// The five members of the Zeno sweep, in [`FIG5_TAUS`] order.
pub fn fig5_sweep() -> Vec<Scenario> {
    FIG5_TAUS.iter().map(|&tau| fig5_member(tau)).collect()
}

/// Figure parameter sets.
pub fn builtin(name: &str) -> Result<Scenario> {
    let u50 = 1.0 / 50.0;
    let sc = match name {
        "fig1" => closed_rwa("fig1", 50.0, 4.0, 120_000.0, 500),
        "fig2a" => closed_rwa("fig2a", 50.0, 4.0, PI / u50, 10),
        "fig2b" => closed_rwa("fig2b", 20.0, 4.0, PI / (1.0 / 20.0), 10),
        "fig3" => {
            let mut s = closed_rwa("fig3", 50.0, 4.0, 2.0 * PI / u50, 10);
            s.observables.push(Observable::Theta);
            s
        }
        "fig4" => {
            let mut s = closed_rwa("fig4", 50.0, 4.0, 700.0, 5);
            s.dissipation.gamma = 0.005;
            s.config.dt = 0.02;
            s.config.integrator = Integrator::Split;
            s
        }
        "fig5" => fig5_member(1.0 / 1500.0),
        "fig6" => {
            let mut s = closed_rwa("fig6", 50.0, 3.0, 3200.0, 2);
            s.dissipation.kappa = 0.0012;
            s.config.dt = 0.05;
            s.config.integrator = Integrator::Split;
            s
        }
        "fig7" => rabi("fig7", FieldSpec::Thermal(5.0), 320_000.0, 0.01, 200, Observable::STANDARD.to_vec()),
        "fig8a" => rabi("fig8a", FieldSpec::PoissonDiag(C64::new(4.0, 0.0)), 320_000.0, 0.01, 1000, vec![Observable::Pf]),
        "fig8b" => rabi("fig8b", FieldSpec::Coherent(C64::new(4.0, 0.0)), 320_000.0, 0.01, 1000, vec![Observable::Pf, Observable::Pq]),
        _ => return Err(Error::NotFound { name: name.to_string(), valid: BUILTIN_NAMES.join(", ") }),
    };
    Ok(sc)
}

/// Initial qubit density matrix of a scenario.
pub fn qubit_density(s: &Scenario) -> nd::Array2<C64> {
    qubit_state(s.qubit).to_density()
}
