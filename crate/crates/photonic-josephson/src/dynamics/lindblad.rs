use ndarray as nd;
use num_complex::Complex64 as C64;

use super::closed::Rk4;
use super::{check_hermitian, propagator, symmetrize, Channel, EvolutionConfig, Integrator, LindbladSpec};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{eigh_hermitian, identity, Operator};
use crate::observables::{snapshot, Observer, RunDiagnostics};
use crate::states::{QuantumState, StateData};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Right-hand side `-i(H_eff ρ - ρ H_eff†) + Σ 2γ LρL†` with `H_eff = H - iΣγL†L`.
pub(crate) struct Generator {
    heff: Operator,
    heff_dag: Operator,
    jumps: Vec<(f64, Operator, Operator)>,
}

impl Generator {
    pub(crate) fn new(h: &Operator, channels: &[Channel]) -> Self {
        let mut heff = h.clone();
        let mut jumps = Vec::new();
        for ch in channels.iter().filter(|c| c.rate > 0.0) {
            let ld = ch.jump.adjoint();
            heff = &heff - &(&ld * &ch.jump).scaled(I * ch.rate);
            jumps.push((2.0 * ch.rate, ch.jump.clone(), ld));
        }
        Self { heff_dag: heff.adjoint(), heff, jumps }
    }

    pub(crate) fn apply(&self, rho: &nd::Array2<C64>, out: &mut nd::Array2<C64>, tmp: &mut nd::Array2<C64>) {
        self.heff.left_mul_acc(rho, out, -I);
        self.heff_dag.right_mul_acc(rho, out, I);
        for (w, l, ld) in &self.jumps {
            tmp.fill(C64::new(0.0, 0.0));
            ld.right_mul_acc(rho, tmp, ONE);
            l.left_mul_acc(tmp, out, C64::new(*w, 0.0));
        }
    }
}

fn is_hermitian_involution(l: &Operator) -> bool {
    l.hermiticity_error() < 1e-14 && (&(l * l) - &identity(l.space())).max_abs() < 1e-14
}

/// Master-equation evolution reporting to an arbitrary observer.
pub fn evolve_lindblad_with(
    spec: &LindbladSpec,
    rho0: &QuantumState,
    cfg: &EvolutionConfig,
    obs: &mut dyn Observer,
) -> Result<RunDiagnostics> {
    cfg.validate()?;
    check_hermitian(&spec.hamiltonian)?;
    if rho0.space() != spec.space() {
        return invalid("initial state and Hamiltonian live on different spaces");
    }
    if spec.channels.iter().any(|c| !(c.rate >= 0.0)) {
        return invalid("channel rates must be non-negative");
    }
    let state = rho0.clone().into_density();
    match cfg.integrator {
        Integrator::Rk4 => rk4(spec, state, cfg, obs),
        Integrator::Split => split(spec, state, cfg, obs),
        Integrator::Spectral => invalid("the spectral integrator applies to closed runs"),
    }
}

fn check_trace(state: &QuantumState, k: usize, cfg: &EvolutionConfig, diag: &mut RunDiagnostics) -> Result<()> {
    let drift = (state.trace() - 1.0).abs();
    diag.max_trace_drift = diag.max_trace_drift.max(drift);
    if drift > cfg.trace_tolerance {
        return Err(Error::TraceDrift { step: k, time: k as f64 * cfg.dt, drift, tolerance: cfg.trace_tolerance });
    }
    Ok(())
}

fn rk4(spec: &LindbladSpec, mut state: QuantumState, cfg: &EvolutionConfig, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
    let mut diag = RunDiagnostics::new("full");
    let gen = Generator::new(&spec.hamiltonian, &spec.channels);
    let dim = spec.space().dim();
    let mut rk = Rk4::new(nd::Ix2(dim, dim));
    let mut tmp = nd::Array2::zeros((dim, dim));
    let n = cfg.steps();
    for k in 0..=n {
        check_trace(&state, k, cfg, &mut diag)?;
        if cfg.is_record_step(k) {
            let snap = snapshot(&state);
            diag.track(&snap);
            obs.observe(k as f64 * cfg.dt, &snap, Some(&state));
        }
        if k == n {
            break;
        }
        let StateData::Density(rho) = state.data_mut() else { unreachable!() };
        rk.step(rho, cfg.dt, |x, out| gen.apply(x, out, &mut tmp));
        diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(symmetrize(rho));
    }
    diag.steps = n;
    Ok(diag)
}

/// Dissipator-only step of length `dt`: exact for Hermitian involutions, RK4 otherwise.
pub(crate) struct DissipatorStep {
    exact: Vec<(f64, Operator)>,
    rest: Option<Generator>,
    rk: Rk4<nd::Ix2>,
    tmp: nd::Array2<C64>,
}

impl DissipatorStep {
    pub(crate) fn new(channels: &[Channel], dim: usize, space_zero: &Operator) -> Self {
        let (exact, rest): (Vec<&Channel>, Vec<&Channel>) =
            channels.iter().filter(|c| c.rate > 0.0).partition(|c| is_hermitian_involution(&c.jump));
        let rest: Vec<Channel> = rest.into_iter().cloned().collect();
        Self {
            exact: exact.into_iter().map(|c| (c.rate, c.jump.clone())).collect(),
            rest: (!rest.is_empty()).then(|| Generator::new(space_zero, &rest)),
            rk: Rk4::new(nd::Ix2(dim, dim)),
            tmp: nd::Array2::zeros((dim, dim)),
        }
    }

    pub(crate) fn apply(&mut self, rho: &mut nd::Array2<C64>, dt: f64) {
        for (rate, l) in &self.exact {
            // e^{γ dt D[L]} for L = L† = L⁻¹.
            let decay = (-4.0 * rate * dt).exp();
            self.tmp.fill(C64::new(0.0, 0.0));
            l.right_mul_acc(rho, &mut self.tmp, ONE);
            let keep = C64::new(0.5 * (1.0 + decay), 0.0);
            *rho *= keep;
            l.left_mul_acc(&self.tmp, rho, C64::new(0.5 * (1.0 - decay), 0.0));
        }
        if let Some(gen) = &self.rest {
            let (rk, scratch) = (&mut self.rk, &mut self.tmp);
            rk.step(rho, dt, |x, out| gen.apply(x, out, scratch));
        }
    }
}

fn sandwich(u: &nd::Array2<C64>, ud: &nd::Array2<C64>, rho: &nd::Array2<C64>) -> nd::Array2<C64> {
    u.dot(rho).dot(ud)
}

fn split(spec: &LindbladSpec, mut state: QuantumState, cfg: &EvolutionConfig, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
    let mut diag = RunDiagnostics::new("full-split");
    let dim = spec.space().dim();
    let (e, v) = eigh_hermitian(&spec.hamiltonian.to_dense())?;
    let uh = propagator(&e, &v, cfg.dt / 2.0);
    let uhd = uh.t().mapv(|z| z.conj());
    let uf = uh.dot(&uh);
    let ufd = uf.t().mapv(|z| z.conj());
    let mut diss = DissipatorStep::new(&spec.channels, dim, &Operator::zero(spec.space()));
    let n = cfg.steps();

    check_trace(&state, 0, cfg, &mut diag)?;
    let snap = snapshot(&state);
    diag.track(&snap);
    obs.observe(0.0, &snap, Some(&state));
    let StateData::Density(rho0) = state.data_mut() else { unreachable!() };
    // Interaction state: half a unitary step ahead of the synchronized one.
    let mut inner = sandwich(&uh, &uhd, rho0);
    for k in 1..=n {
        diss.apply(&mut inner, cfg.dt);
        diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(symmetrize(&mut inner));
        if cfg.is_record_step(k) {
            let synced = sandwich(&uh, &uhd, &inner);
            *state.data_mut() = StateData::Density(synced);
            check_trace(&state, k, cfg, &mut diag)?;
            let snap = snapshot(&state);
            diag.track(&snap);
            obs.observe(k as f64 * cfg.dt, &snap, Some(&state));
            if k < n {
                let StateData::Density(rho) = state.data() else { unreachable!() };
                inner = sandwich(&uh, &uhd, rho);
            }
        } else {
            inner = sandwich(&uf, &ufd, &inner);
        }
    }
    diag.steps = n;
    Ok(diag)
}
