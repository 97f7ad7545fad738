//! Time evolution on the full truncated space.
//!
//! Three propagators share one record grid (every `record_stride` steps of
//! size `dt`, plus the final step):
//!
//! * [`evolve_closed`]: Schrödinger evolution, RK4 or exact spectral.
//! * [`evolve_lindblad`]: master equation
//!   `dρ/dt = -i[H,ρ] + Σ γ_k (2LρL† - L†Lρ - ρL†L)`, RK4 or a Strang split.
//! * [`evolve_with_measurements`]: unitary segments of length `τ` separated
//!   by instantaneous qubit-field disentangling maps.
//!
//! The factorized, sector and ensemble engines in [`crate::engines`] cover the
//! long runs that the full space cannot reach.

mod closed;
mod lindblad;
mod measurement;

pub use closed::evolve_closed_with;
pub use lindblad::evolve_lindblad_with;
pub use measurement::{evolve_with_measurements_with, measurement_map};

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::hilbert::{Operator, SpaceDescriptor};
use crate::observables::{sup_difference, Observable, Recorder, TimeSeries};
use crate::states::QuantumState;

/// Default step for the `Δ = 50` scenarios.
pub const DEFAULT_DT: f64 = 0.002;
/// Default abort threshold on `|Tr ρ - 1|`.
pub const DEFAULT_TRACE_TOLERANCE: f64 = 1e-3;

/// One dissipative channel `γ·D[L]`.
#[derive(Clone, Debug)]
pub struct Channel {
    pub rate: f64,
    pub jump: Operator,
}

/// Hamiltonian plus Lindblad channels on a common space.
#[derive(Clone, Debug)]
pub struct LindbladSpec {
    pub hamiltonian: Operator,
    pub channels: Vec<Channel>,
}

impl LindbladSpec {
    pub fn new(hamiltonian: Operator) -> Self {
        Self { hamiltonian, channels: Vec::new() }
    }

    /// Adds `rate·D[jump]`; rejects negative rates and foreign spaces.
    pub fn with_channel(mut self, rate: f64, jump: Operator) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return invalid(format!("channel rate must be finite and non-negative (got {rate})"));
        }
        if jump.space() != self.hamiltonian.space() {
            return invalid("jump operator and Hamiltonian live on different spaces");
        }
        self.channels.push(Channel { rate, jump });
        Ok(self)
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.hamiltonian.space()
    }
}

/// Propagation backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Classical fourth-order Runge-Kutta.
    #[default]
    Rk4,
    /// Exact propagation in the eigenbasis of `H` (closed runs only).
    Spectral,
    /// Exact unitary half steps around a dissipator step.
    Split,
}

/// Step size, horizon and record grid of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub trace_tolerance: f64,
    pub integrator: Integrator,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64, record_stride: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            record_stride,
            trace_tolerance: DEFAULT_TRACE_TOLERANCE,
            integrator: Integrator::Rk4,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_trace_tolerance(mut self, tol: f64) -> Self {
        self.trace_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid(format!("dt must be positive (got {})", self.dt));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return invalid(format!("t_end must be finite and non-negative (got {})", self.t_end));
        }
        if self.record_stride == 0 {
            return invalid("record_stride must be at least 1");
        }
        if !(self.trace_tolerance > 0.0) {
            return invalid("trace_tolerance must be positive");
        }
        Ok(())
    }

    /// Number of steps; the last record lands within `dt/2` of `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub(crate) fn is_record_step(&self, k: usize) -> bool {
        k % self.record_stride == 0 || k == self.steps()
    }

    /// Record times in step units.
    pub fn record_steps(&self) -> Vec<usize> {
        let n = self.steps();
        let mut v: Vec<usize> = (0..=n).step_by(self.record_stride).collect();
        if *v.last().unwrap() != n {
            v.push(n);
        }
        v
    }
}

/// Qubit-field disentangling applied every `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementKind {
    /// `ρ → ρ_q ⊗ ρ_f`.
    NonSelective,
    /// `ρ → ρ_reset ⊗ ρ_f`.
    Projective,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSchedule {
    pub tau: f64,
    pub kind: MeasurementKind,
    /// Qubit state written by the projective kind.
    pub qubit_reset: nd::Array2<C64>,
    /// Non-selective only: also drop the qubit coherences.
    pub collapse_populations: bool,
}

impl MeasurementSchedule {
    pub fn non_selective(tau: f64) -> Self {
        Self {
            tau,
            kind: MeasurementKind::NonSelective,
            qubit_reset: nd::Array2::eye(2) * C64::new(0.5, 0.0),
            collapse_populations: false,
        }
    }

    pub fn projective(tau: f64, qubit_reset: nd::Array2<C64>) -> Self {
        Self { tau, kind: MeasurementKind::Projective, qubit_reset, collapse_populations: false }
    }

    pub fn validate(&self, dt: f64) -> Result<()> {
        if !(self.tau >= dt) {
            return invalid(format!("measurement interval tau = {} is below dt = {dt}", self.tau));
        }
        if self.qubit_reset.dim() != (2, 2) {
            return invalid("qubit reset state must be 2x2");
        }
        Ok(())
    }
}

/// Closed evolution of a pure state.
pub fn evolve_closed(
    h: &Operator,
    psi0: &QuantumState,
    cfg: &EvolutionConfig,
    observables: &[Observable],
) -> Result<TimeSeries> {
    let mut rec = Recorder::new(observables, "full");
    let diag = evolve_closed_with(h, psi0, cfg, &mut rec)?;
    rec.absorb(&diag);
    rec.finish()
}

/// Master-equation evolution; pure inputs are promoted.
pub fn evolve_lindblad(
    spec: &LindbladSpec,
    rho0: &QuantumState,
    cfg: &EvolutionConfig,
    observables: &[Observable],
) -> Result<TimeSeries> {
    let mut rec = Recorder::new(observables, "full");
    let diag = evolve_lindblad_with(spec, rho0, cfg, &mut rec)?;
    rec.absorb(&diag);
    rec.finish()
}

/// Unitary evolution interrupted by measurements every `sched.tau`.
pub fn evolve_with_measurements(
    h: &Operator,
    rho0: &QuantumState,
    sched: &MeasurementSchedule,
    cfg: &EvolutionConfig,
    observables: &[Observable],
) -> Result<TimeSeries> {
    let mut rec = Recorder::new(observables, "full");
    let diag = evolve_with_measurements_with(h, rho0, sched, cfg, &mut rec)?;
    rec.absorb(&diag);
    rec.finish()
}

/// Sup-norm change of each column when `dt` is halved.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub dt: f64,
    pub threshold: f64,
    pub changes: Vec<(String, f64)>,
}

impl ConvergenceReport {
    pub fn max_change(&self) -> f64 {
        self.changes.iter().map(|(_, c)| *c).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_change() <= self.threshold
    }
}

/// Reruns at `dt/2` (same record grid) and compares every column.
pub fn convergence_probe<F>(run: F, cfg: &EvolutionConfig, threshold: f64) -> Result<ConvergenceReport>
where
    F: Fn(&EvolutionConfig) -> Result<TimeSeries>,
{
    let coarse = run(cfg)?;
    let fine = run(&halved(cfg))?;
    Ok(ConvergenceReport { dt: cfg.dt, threshold, changes: column_changes(&coarse, &fine)? })
}

/// `|x(dt) - x(dt/2)| / |x(dt/2) - x(dt/4)|` in sup norm over one column.
///
/// A method of order `p` gives about `2ᵖ`.
pub fn convergence_ratio<F>(run: F, cfg: &EvolutionConfig, column: &str) -> Result<f64>
where
    F: Fn(&EvolutionConfig) -> Result<TimeSeries>,
{
    let c1 = halved(cfg);
    let c2 = halved(&c1);
    let (a, b, c) = (run(cfg)?, run(&c1)?, run(&c2)?);
    let d1 = sup_difference(a.column(column)?, b.column(column)?);
    let d2 = sup_difference(b.column(column)?, c.column(column)?);
    Ok(d1 / d2)
}

fn halved(cfg: &EvolutionConfig) -> EvolutionConfig {
    EvolutionConfig { dt: cfg.dt / 2.0, record_stride: cfg.record_stride * 2, ..*cfg }
}

fn column_changes(a: &TimeSeries, b: &TimeSeries) -> Result<Vec<(String, f64)>> {
    if a.len() != b.len() {
        return invalid("runs at dt and dt/2 produced different record grids");
    }
    a.names().map(|n| Ok((n.to_string(), sup_difference(a.column(n)?, b.column(n)?)))).collect()
}

pub(crate) fn check_hermitian(h: &Operator) -> Result<()> {
    let err = h.hermiticity_error();
    if err > 1e-10 {
        return invalid(format!("Hamiltonian is not Hermitian (max |H - H†| = {err:.3e})"));
    }
    Ok(())
}

/// `(ρ + ρ†)/2` in place; returns the removed `max|ρ - ρ†|`.
pub(crate) fn symmetrize(rho: &mut nd::Array2<C64>) -> f64 {
    let n = rho.nrows();
    let mut drift: f64 = 0.0;
    for i in 0..n {
        rho[[i, i]].im = 0.0;
        for j in (i + 1)..n {
            let (x, y) = (rho[[i, j]], rho[[j, i]]);
            drift = drift.max((x - y.conj()).norm());
            let m = (x + y.conj()) * 0.5;
            rho[[i, j]] = m;
            rho[[j, i]] = m.conj();
        }
    }
    drift
}

/// Unitary `V e^{-iEt} V†` from an eigendecomposition.
pub(crate) fn propagator(e: &nd::Array1<f64>, v: &nd::Array2<C64>, t: f64) -> nd::Array2<C64> {
    let mut vp = v.clone();
    for (mut col, &ei) in vp.columns_mut().into_iter().zip(e.iter()) {
        col *= C64::from_polar(1.0, -ei * t);
    }
    vp.dot(&v.t().mapv(|z| z.conj()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::new(0.0, 1.0, 1).is_err());
        assert!(EvolutionConfig::new(0.1, -1.0, 1).is_err());
        assert!(EvolutionConfig::new(0.1, 1.0, 0).is_err());
        let cfg = EvolutionConfig::new(0.1, 1.0, 3).unwrap();
        assert_eq!(cfg.steps(), 10);
        assert_eq!(cfg.record_steps(), vec![0, 3, 6, 9, 10]);
        let s = MeasurementSchedule::non_selective(0.01);
        assert!(s.validate(0.1).is_err());
        assert!(MeasurementSchedule::non_selective(f64::INFINITY).validate(0.1).is_ok());
    }

    #[test]
    fn negative_rates_rejected() {
        let sp = crate::hilbert::build_space(2, 2).unwrap();
        let h = crate::hilbert::identity(sp);
        assert!(LindbladSpec::new(h.clone()).with_channel(-0.1, h.clone()).is_err());
        let other = crate::hilbert::identity(crate::hilbert::build_space(3, 2).unwrap());
        assert!(LindbladSpec::new(h).with_channel(0.1, other).is_err());
    }
}
