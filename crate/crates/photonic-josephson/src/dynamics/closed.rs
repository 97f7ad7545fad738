use ndarray as nd;
use num_complex::Complex64 as C64;

use super::{check_hermitian, EvolutionConfig, Integrator};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{eigh_hermitian, Operator};
use crate::observables::{snapshot, Observer, RunDiagnostics};
use crate::states::{QuantumState, StateData};

const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };

/// Scratch space for one classical RK4 step on an array of any rank.
pub(crate) struct Rk4<D: nd::Dimension> {
    acc: nd::Array<C64, D>,
    tmp: nd::Array<C64, D>,
    k: nd::Array<C64, D>,
}

impl<D: nd::Dimension> Rk4<D> {
    pub(crate) fn new(shape: D) -> Self {
        Self {
            acc: nd::Array::zeros(shape.clone()),
            tmp: nd::Array::zeros(shape.clone()),
            k: nd::Array::zeros(shape),
        }
    }

    /// Advances `y' = f(y)` by `dt`; `f` writes into a zeroed output.
    pub(crate) fn step<F>(&mut self, y: &mut nd::Array<C64, D>, dt: f64, mut f: F)
    where
        F: FnMut(&nd::Array<C64, D>, &mut nd::Array<C64, D>),
    {
        let h = C64::new(dt, 0.0);
        self.acc.assign(y);
        let weights = [(1.0 / 6.0, 0.5), (1.0 / 3.0, 0.5), (1.0 / 3.0, 1.0), (1.0 / 6.0, 0.0)];
        for (stage, &(w, next)) in weights.iter().enumerate() {
            self.k.fill(C64::new(0.0, 0.0));
            if stage == 0 {
                f(y, &mut self.k);
            } else {
                f(&self.tmp, &mut self.k);
            }
            self.acc.scaled_add(h * w, &self.k);
            if next > 0.0 {
                self.tmp.assign(y);
                self.tmp.scaled_add(h * next, &self.k);
            }
        }
        std::mem::swap(y, &mut self.acc);
    }
}

/// Closed evolution reporting to an arbitrary observer.
pub fn evolve_closed_with(
    h: &Operator,
    psi0: &QuantumState,
    cfg: &EvolutionConfig,
    obs: &mut dyn Observer,
) -> Result<RunDiagnostics> {
    cfg.validate()?;
    check_hermitian(h)?;
    if psi0.space() != h.space() {
        return invalid("initial state and Hamiltonian live on different spaces");
    }
    let StateData::Pure(psi_init) = psi0.data() else {
        return invalid("closed evolution needs a pure initial state");
    };
    match cfg.integrator {
        Integrator::Rk4 => rk4(h, psi0.clone(), cfg, obs),
        Integrator::Spectral => spectral(h, psi_init, psi0, cfg, obs),
        Integrator::Split => invalid("the split integrator applies to master-equation runs"),
    }
}

fn rk4(h: &Operator, mut state: QuantumState, cfg: &EvolutionConfig, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
    let mut diag = RunDiagnostics::new("full");
    let n = cfg.steps();
    let mut rk = Rk4::new(nd::Ix1(h.dim()));
    for k in 0..=n {
        let t = k as f64 * cfg.dt;
        let norm = state.trace();
        let drift = (norm - 1.0).abs();
        diag.max_trace_drift = diag.max_trace_drift.max(drift);
        if drift > cfg.trace_tolerance {
            return Err(Error::TraceDrift { step: k, time: t, drift, tolerance: cfg.trace_tolerance });
        }
        if cfg.is_record_step(k) {
            let snap = snapshot(&state);
            diag.track(&snap);
            obs.observe(t, &snap, Some(&state));
        }
        if k == n {
            break;
        }
        let StateData::Pure(psi) = state.data_mut() else { unreachable!() };
        rk.step(psi, cfg.dt, |x, out| h.apply_acc(x.view(), out.view_mut(), MINUS_I));
    }
    diag.steps = n;
    Ok(diag)
}

fn spectral(
    h: &Operator,
    psi_init: &nd::Array1<C64>,
    psi0: &QuantumState,
    cfg: &EvolutionConfig,
    obs: &mut dyn Observer,
) -> Result<RunDiagnostics> {
    let mut diag = RunDiagnostics::new("full-spectral");
    let (e, v) = eigh_hermitian(&h.to_dense())?;
    let c = v.t().mapv(|z| z.conj()).dot(psi_init);
    for k in cfg.record_steps() {
        let t = k as f64 * cfg.dt;
        let phased = nd::Array1::from_iter(c.iter().zip(e.iter()).map(|(ci, ei)| ci * C64::from_polar(1.0, -ei * t)));
        let state = QuantumState::pure_unchecked(psi0.space(), v.dot(&phased));
        let snap = snapshot(&state);
        diag.track(&snap);
        if (snap.trace - 1.0).abs() > cfg.trace_tolerance {
            return Err(Error::TraceDrift { step: k, time: t, drift: (snap.trace - 1.0).abs(), tolerance: cfg.trace_tolerance });
        }
        obs.observe(t, &snap, Some(&state));
    }
    diag.steps = cfg.steps();
    Ok(diag)
}
