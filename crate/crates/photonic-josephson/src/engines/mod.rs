//! Exact reductions that make the long scenario runs affordable.
//!
//! * `Full`: the whole truncated `qubit ⊗ a ⊗ b` space.
//! * `Bright`: with degenerate modes the qubit couples only to the bright
//!   combination `A = cosθ a + sinθ b`. The dark mode `B` starts coherent,
//!   stays coherent, and is tracked as a c-number, so the quantum problem
//!   lives on `qubit ⊗ A`.
//! * `Sectors`: excitation-conserving dynamics under pure field dephasing,
//!   block by block in the excitation number.
//! * `Ensemble`: closed dynamics of photon-number mixtures in mode a, as an
//!   incoherent sum of bright-mode problems.

mod bright;
mod ensemble;
mod sectors;

pub use ensemble::{manifold_averaged_mode_a, EnsembleRun, ManifoldAverage};

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::dynamics::{
    evolve_closed_with, evolve_lindblad_with, evolve_with_measurements_with, EvolutionConfig, Integrator,
    LindbladSpec, MeasurementSchedule,
};
use crate::error::{invalid, Result};
use crate::hamiltonians::HamiltonianKind;
use crate::hilbert::{build_space, mode_annihilator, number_operator, qubit_operator, Mode, Operator, QubitOp, SpaceDescriptor};
use crate::observables::{Observer, RunDiagnostics};
use crate::scenarios::{FieldSpec, Scenario};
use crate::states::{
    assemble_product, coherent_mode_state, poissonian_diagonal_state, qubit_state, thermal_mode_state, LocalState,
    QuantumState,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Engine {
    #[default]
    Auto,
    Full,
    Bright,
    Sectors,
    Ensemble,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Auto => "auto",
            Engine::Full => "full",
            Engine::Bright => "bright",
            Engine::Sectors => "sectors",
            Engine::Ensemble => "ensemble",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "full" => Ok(Engine::Full),
            "bright" => Ok(Engine::Bright),
            "sectors" => Ok(Engine::Sectors),
            "ensemble" => Ok(Engine::Ensemble),
            _ => invalid(format!("unknown engine '{s}'")),
        }
    }
}

/// Why an engine cannot take a scenario, or `None` if it can.
pub fn unsupported_reason(s: &Scenario, engine: Engine) -> Option<String> {
    let d = s.dissipation;
    let p = &s.params;
    match engine {
        Engine::Auto | Engine::Full => None,
        Engine::Bright => {
            if p.mode_b_offset != 0.0 {
                Some("modes are not degenerate".into())
            } else if !s.field_a.is_pure() {
                Some("mode a does not start coherent".into())
            } else if d.dephase_fields && d.kappa > 0.0 {
                Some("number dephasing does not commute with the mode rotation".into())
            } else if s.hamiltonian == HamiltonianKind::Linear && (p.g_a - p.g_b).abs() > 1e-12 {
                Some("the linear model is in bright form only for g_a = g_b".into())
            } else {
                None
            }
        }
        Engine::Sectors => {
            if !s.hamiltonian.conserves_excitations() || (p.eta != 0.0 && s.hamiltonian == HamiltonianKind::Rwa) {
                Some("the Hamiltonian does not conserve the excitation number".into())
            } else if d.gamma > 0.0 || (d.kappa > 0.0 && !d.dephase_fields) {
                Some("only number-dephasing channels preserve the sectors".into())
            } else if s.measurement.is_some() {
                Some("measurements are not supported".into())
            } else {
                None
            }
        }
        Engine::Ensemble => {
            if !matches!(s.hamiltonian, HamiltonianKind::Rwa | HamiltonianKind::Nonrwa | HamiltonianKind::Quadratic) {
                Some("only the JC, Rabi and quadratic models are supported".into())
            } else if p.mode_b_offset != 0.0 || p.eta != 0.0 {
                Some("requires degenerate, unpumped modes".into())
            } else if !d.is_closed() || s.measurement.is_some() {
                Some("only closed runs are supported".into())
            } else if matches!(s.field_a, FieldSpec::Coherent(_)) {
                Some("coherent inputs belong to the bright engine".into())
            } else {
                None
            }
        }
    }
}

/// Concrete engine for a scenario.
pub fn resolve(s: &Scenario) -> Result<Engine> {
    if s.engine != Engine::Auto {
        return match unsupported_reason(s, s.engine) {
            None => Ok(s.engine),
            Some(why) => invalid(format!("engine '{}' cannot run '{}': {why}", s.engine.name(), s.name)),
        };
    }
    let order: &[Engine] = if s.dissipation.dephase_fields && s.dissipation.kappa > 0.0 {
        &[Engine::Sectors]
    } else if s.field_a.is_pure() {
        &[Engine::Bright]
    } else {
        &[Engine::Ensemble]
    };
    Ok(order.iter().copied().find(|&e| unsupported_reason(s, e).is_none()).unwrap_or(Engine::Full))
}

/// Dispatches a validated scenario to its engine.
pub fn run(s: &Scenario, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
    match resolve(s)? {
        Engine::Full | Engine::Auto => run_full(s, obs),
        Engine::Bright => bright::run(s, obs),
        Engine::Sectors => sectors::run(s, obs),
        Engine::Ensemble => ensemble::run(s, obs),
    }
}

pub(crate) fn field_state(field: &FieldSpec, cutoff: usize) -> Result<LocalState> {
    Ok(match *field {
        FieldSpec::Vacuum => LocalState::Pure(fock(0, cutoff)),
        FieldSpec::Coherent(a) => LocalState::Pure(coherent_mode_state(a, cutoff)?),
        FieldSpec::Thermal(n) => LocalState::Mixed(thermal_mode_state(n, cutoff)?),
        FieldSpec::PoissonDiag(a) => LocalState::Mixed(poissonian_diagonal_state(a, cutoff)?),
    })
}

pub(crate) fn fock(n: usize, cutoff: usize) -> nd::Array1<C64> {
    let mut v = nd::Array1::zeros(cutoff);
    v[n] = C64::new(1.0, 0.0);
    v
}

/// Initial state on the full space of a scenario.
pub fn initial_state(s: &Scenario, space: SpaceDescriptor) -> Result<QuantumState> {
    assemble_product(
        &qubit_state(s.qubit),
        &field_state(&s.field_a, space.cutoff_a())?,
        &LocalState::Pure(fock(0, space.cutoff_b())),
        space,
    )
}

/// Loss channels of a scenario on the given space; mode b is skipped when it has one level.
pub(crate) fn channels(s: &Scenario, h: Operator) -> Result<LindbladSpec> {
    let sp = h.space();
    let d = s.dissipation;
    let mut spec = LindbladSpec::new(h);
    if d.kappa > 0.0 {
        for mode in [Mode::A, Mode::B] {
            let jump = if d.dephase_fields { number_operator(sp, mode) } else { mode_annihilator(sp, mode) };
            if jump.max_abs() > 0.0 {
                spec = spec.with_channel(d.kappa, jump)?;
            }
        }
    }
    if d.gamma > 0.0 {
        spec = spec.with_channel(d.gamma, qubit_operator(sp, QubitOp::X))?;
    }
    Ok(spec)
}

/// Runs a Hamiltonian problem with the scenario's channels or measurements.
pub(crate) fn propagate(
    s: &Scenario,
    h: Operator,
    rho0: &QuantumState,
    obs: &mut dyn Observer,
) -> Result<RunDiagnostics> {
    let cfg = s.config;
    if let Some(m) = &s.measurement {
        return evolve_with_measurements_with(&h, rho0, m, &cfg, obs);
    }
    if s.dissipation.is_closed() {
        if rho0.is_pure() {
            let cfg = closed_config(cfg);
            return evolve_closed_with(&h, rho0, &cfg, obs);
        }
        // Mixed closed runs: exact propagation without measurements.
        return evolve_with_measurements_with(&h, rho0, &MeasurementSchedule::non_selective(f64::INFINITY), &cfg, obs);
    }
    let spec = channels(s, h)?;
    let cfg = open_config(cfg);
    evolve_lindblad_with(&spec, rho0, &cfg, obs)
}

fn closed_config(cfg: EvolutionConfig) -> EvolutionConfig {
    match cfg.integrator {
        Integrator::Split => cfg.with_integrator(Integrator::Spectral),
        _ => cfg,
    }
}

fn open_config(cfg: EvolutionConfig) -> EvolutionConfig {
    match cfg.integrator {
        Integrator::Spectral => cfg.with_integrator(Integrator::Split),
        _ => cfg,
    }
}

fn run_full(s: &Scenario, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
    let space = build_space(s.cutoff_a, s.cutoff_b)?;
    let h = s.hamiltonian.build(space, &s.params)?;
    let rho0 = initial_state(s, space)?;
    propagate(s, h, &rho0, obs)
}
