use num_complex::Complex64 as C64;

use super::{fock, propagate};
use crate::error::{invalid, Result};
use crate::hamiltonians::{HamiltonianKind, SystemParams};
use crate::hilbert::{build_space, mode_annihilator, number_operator, qubit_operator, Mode, Operator, QubitOp, SpaceDescriptor};
use crate::observables::{Observer, RunDiagnostics, Snapshot};
use crate::scenarios::Scenario;
use crate::states::{assemble_product, coherent_mode_state, qubit_state, LocalState, QuantumState};

/// Coherent amplitude of the dark mode, `β' = -(iω + κ)β + η_B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct DarkMode {
    pub beta0: C64,
    pub omega: f64,
    pub kappa: f64,
    pub drive: f64,
}

impl DarkMode {
    pub fn amplitude(&self, t: f64) -> C64 {
        let z = C64::new(self.kappa, self.omega);
        if z.norm() < 1e-300 {
            return self.beta0 + self.drive * t;
        }
        let ss = C64::new(self.drive, 0.0) / z;
        (self.beta0 - ss) * (-z * t).exp() + ss
    }
}

/// Mode rotation `(c, s) = (cosθ, sinθ)` with `A = c a + s b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Rotation {
    pub c: f64,
    pub s: f64,
}

impl Rotation {
    pub fn of(p: &SystemParams) -> Self {
        let (s, c) = p.theta().sin_cos();
        Self { c, s }
    }

    /// `(<n_a>, <n_b>)` from `<A†A>`, `<A>` and the dark amplitude.
    pub fn populations(&self, n_big_a: f64, mean_a: C64, beta: C64) -> (f64, f64) {
        let (c, s) = (self.c, self.s);
        let cross = 2.0 * c * s * (mean_a.conj() * beta).re;
        let nb2 = beta.norm_sqr();
        (c * c * n_big_a + s * s * nb2 - cross, s * s * n_big_a + c * c * nb2 + cross)
    }
}

/// Hamiltonian of `qubit ⊗ A` equivalent to the scenario's two-mode model.
pub(crate) fn bright_hamiltonian(kind: HamiltonianKind, p: &SystemParams, space: SpaceDescriptor) -> Result<Operator> {
    let rot = Rotation::of(p);
    let g = p.g();
    let reduced = SystemParams { g_a: g, g_b: 0.0, eta: p.eta * (rot.c + rot.s), mode_b_offset: 0.0, ..*p };
    match kind {
        HamiltonianKind::Rwa | HamiltonianKind::Nonrwa | HamiltonianKind::Quadratic => kind.build(space, &reduced),
        HamiltonianKind::Linear => {
            // δN + 2Uσz A†A once a†b + b†a = A†A - B†B.
            let u = p.u()?;
            let na = number_operator(space, Mode::A);
            let sz = qubit_operator(space, QubitOp::Z);
            Ok(&na.scaled(p.delta()) + &(&sz * &na).scaled(2.0 * u))
        }
    }
}

/// The bright-mode problem: space, Hamiltonian, initial state and dark mode.
pub(crate) struct BrightProblem {
    pub space: SpaceDescriptor,
    pub hamiltonian: Operator,
    pub initial: QuantumState,
    pub rotation: Rotation,
    pub dark: DarkMode,
}

impl BrightProblem {
    pub fn new(s: &Scenario) -> Result<Self> {
        let Some(alpha) = s.field_a.amplitude() else {
            return invalid("the bright reduction needs a coherent or empty mode a");
        };
        let p = &s.params;
        let rot = Rotation::of(p);
        let cutoff = s.cutoff_a.max(s.cutoff_b);
        let space = build_space(cutoff, 1)?;
        let hamiltonian = bright_hamiltonian(s.hamiltonian, p, space)?;
        let initial = assemble_product(
            &qubit_state(s.qubit),
            &LocalState::Pure(coherent_mode_state(alpha * rot.c, cutoff)?),
            &LocalState::Pure(fock(0, 1)),
            space,
        )?;
        let pumped = s.hamiltonian == HamiltonianKind::Rwa;
        let kappa = if s.dissipation.dephase_fields { 0.0 } else { s.dissipation.kappa };
        let dark = DarkMode {
            beta0: -alpha * rot.s,
            omega: p.delta(),
            kappa,
            drive: if pumped { p.eta * (rot.c - rot.s) } else { 0.0 },
        };
        Ok(Self { space, hamiltonian, initial, rotation: rot, dark })
    }
}

/// Lifts `qubit ⊗ A` snapshots to two-mode observables.
struct Lift<'a> {
    inner: &'a mut dyn Observer,
    a: Operator,
    rotation: Rotation,
    dark: DarkMode,
}

impl Observer for Lift<'_> {
    fn observe(&mut self, t: f64, snap: &Snapshot, state: Option<&QuantumState>) {
        let mean_a = match state {
            Some(st) => st.expectation(&self.a).unwrap_or(C64::new(f64::NAN, 0.0)),
            None => C64::new(f64::NAN, 0.0),
        };
        let beta = self.dark.amplitude(t);
        let (n_a, n_b) = self.rotation.populations(snap.n_a, mean_a, beta);
        let lifted = Snapshot { n_a, n_b, ..*snap };
        self.inner.observe(t, &lifted, None);
    }
}

pub(crate) fn run(s: &Scenario, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
    let prob = BrightProblem::new(s)?;
    let mut lift =
        Lift { inner: obs, a: mode_annihilator(prob.space, Mode::A), rotation: prob.rotation, dark: prob.dark };
    let mut diag = propagate(s, prob.hamiltonian, &prob.initial, &mut lift)?;
    diag.engine = format!("bright/{}", diag.engine);
    Ok(diag)
}
