use ndarray as nd;
use num_complex::Complex64 as C64;

use super::{check_hermitian, symmetrize, EvolutionConfig, MeasurementKind, MeasurementSchedule};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{eigh_hermitian, Operator, SpaceDescriptor};
use crate::observables::{snapshot, Observer, RunDiagnostics};
use crate::states::{kron_mat, QuantumState};

/// Reduced qubit (2×2) and field (F×F) blocks of a full density matrix.
pub(crate) fn qubit_field_blocks(rho: &nd::Array2<C64>, f: usize) -> (nd::Array2<C64>, nd::Array2<C64>) {
    let mut rq = nd::Array2::zeros((2, 2));
    for q in 0..2 {
        for r in 0..2 {
            rq[[q, r]] = (0..f).map(|k| rho[[q * f + k, r * f + k]]).sum();
        }
    }
    let rf = &rho.slice(nd::s![..f, ..f]) + &rho.slice(nd::s![f.., f..]);
    (rq, rf)
}

/// Instantaneous measurement map in the computational basis.
///
/// Both kinds preserve the trace: the non-selective product is divided by
/// `Tr ρ` once, and the projective kind keeps the field weight as it is.
pub fn measurement_map(rho: &nd::Array2<C64>, space: SpaceDescriptor, sched: &MeasurementSchedule) -> nd::Array2<C64> {
    let (mut rq, rf) = qubit_field_blocks(rho, space.field_dim());
    match sched.kind {
        MeasurementKind::NonSelective => {
            let tr = rq[[0, 0]].re + rq[[1, 1]].re;
            if sched.collapse_populations {
                rq[[0, 1]] = C64::new(0.0, 0.0);
                rq[[1, 0]] = C64::new(0.0, 0.0);
            }
            kron_mat(&(rq / C64::new(tr, 0.0)), &rf)
        }
        MeasurementKind::Projective => kron_mat(&sched.qubit_reset, &rf),
    }
}

/// Measurement-interrupted evolution reporting to an arbitrary observer.
///
/// The state is carried in the eigenbasis of `H`, where free evolution is a
/// phase per matrix element; measurements are applied in the computational
/// basis. A measurement and a record at the same instant are applied in that
/// order.
pub fn evolve_with_measurements_with(
    h: &Operator,
    rho0: &QuantumState,
    sched: &MeasurementSchedule,
    cfg: &EvolutionConfig,
    obs: &mut dyn Observer,
) -> Result<RunDiagnostics> {
    cfg.validate()?;
    sched.validate(cfg.dt)?;
    check_hermitian(h)?;
    if rho0.space() != h.space() {
        return invalid("initial state and Hamiltonian live on different spaces");
    }
    let space = h.space();
    let mut diag = RunDiagnostics::new("full-measured");
    let (e, v) = eigh_hermitian(&h.to_dense())?;
    let vd = v.t().mapv(|z| z.conj());
    let mut tilde = vd.dot(&rho0.to_density_matrix()).dot(&v);
    let mut now = 0.0;
    let advance = |tilde: &mut nd::Array2<C64>, s: f64| {
        if s == 0.0 {
            return;
        }
        let ph: Vec<C64> = e.iter().map(|x| C64::from_polar(1.0, -x * s)).collect();
        for ((i, j), z) in tilde.indexed_iter_mut() {
            *z *= ph[i] * ph[j].conj();
        }
    };

    let t_end = cfg.steps() as f64 * cfg.dt;
    let mut next_meas = 1usize;
    for k in cfg.record_steps() {
        let t_rec = k as f64 * cfg.dt;
        // Measurements due up to and including this record time.
        loop {
            let t_m = next_meas as f64 * sched.tau;
            if !(t_m <= t_rec + 1e-9 * cfg.dt) || t_m > t_end + 1e-9 * cfg.dt {
                break;
            }
            advance(&mut tilde, t_m - now);
            now = t_m;
            let rho = v.dot(&tilde).dot(&vd);
            let mut m = measurement_map(&rho, space, sched);
            diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(symmetrize(&mut m));
            tilde = vd.dot(&m).dot(&v);
            diag.measurements += 1;
            next_meas += 1;
        }
        advance(&mut tilde, t_rec - now);
        now = t_rec;
        let state = QuantumState::density_unchecked(space, v.dot(&tilde).dot(&vd));
        let snap = snapshot(&state);
        diag.track(&snap);
        let drift = (snap.trace - 1.0).abs();
        if drift > cfg.trace_tolerance {
            return Err(Error::TraceDrift { step: k, time: t_rec, drift, tolerance: cfg.trace_tolerance });
        }
        obs.observe(t_rec, &snap, Some(&state));
    }
    diag.steps = cfg.steps();
    Ok(diag)
}
