use ndarray as nd;
use num_complex::Complex64 as C64;

use super::initial_state;
use crate::dynamics::{check_hermitian, propagator};
use crate::error::{Error, Result};
use crate::hilbert::{build_space, eigh_hermitian};
use crate::observables::{Observer, RunDiagnostics, Snapshot};
use crate::scenarios::Scenario;
use crate::states::StateData;

/// Basis states `(full index, n_a, n_b, q)` of one excitation sector.
struct Sector {
    states: Vec<(usize, usize, usize, usize)>,
    half: nd::Array2<C64>,
    full: nd::Array2<C64>,
}

/// A density-matrix block between sectors `n` and `n + band`.
struct Block {
    row: usize,
    col: usize,
    rho: nd::Array2<C64>,
    /// `exp(-κ dt [(Δn_a)² + (Δn_b)²])` per element.
    damp: nd::Array2<f64>,
}

/// Block propagation of `-i[H,ρ] + κ Σ D[n_k]ρ` for `H` conserving
/// `n_a + n_b + (1 + σz)/2`. Only bands 0 and 1 of the block structure are
/// kept; they carry every recorded observable.
pub(crate) fn run(s: &Scenario, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
    let cfg = s.config;
    let space = build_space(s.cutoff_a, s.cutoff_b)?;
    let h = s.hamiltonian.build(space, &s.params)?;
    check_hermitian(&h)?;
    let (ca, cb) = (s.cutoff_a, s.cutoff_b);
    let n_sectors = ca + cb;
    let mut members: Vec<Vec<(usize, usize, usize, usize)>> = vec![Vec::new(); n_sectors];
    for i in 0..space.dim() {
        let (q, na, nb) = space.decode(i);
        members[na + nb + q].push((i, na, nb, q));
    }
    let mut sectors = Vec::with_capacity(n_sectors);
    for states in members {
        let n = states.len();
        let hs = nd::Array2::from_shape_fn((n, n), |(i, j)| h.get(states[i].0, states[j].0));
        let (e, v) = eigh_hermitian(&hs)?;
        sectors.push(Sector { half: propagator(&e, &v, cfg.dt / 2.0), full: propagator(&e, &v, cfg.dt), states });
    }

    let rho0 = initial_state(s, space)?;
    let element = |i: usize, j: usize| -> C64 {
        match rho0.data() {
            StateData::Pure(psi) => psi[i] * psi[j].conj(),
            StateData::Density(rho) => rho[[i, j]],
        }
    };
    let kappa = s.dissipation.kappa;
    let mut blocks = Vec::new();
    for band in 0..2 {
        for row in 0..n_sectors.saturating_sub(band) {
            let col = row + band;
            let (sr, sc) = (&sectors[row].states, &sectors[col].states);
            if sr.is_empty() || sc.is_empty() {
                continue;
            }
            let rho = nd::Array2::from_shape_fn((sr.len(), sc.len()), |(i, j)| element(sr[i].0, sc[j].0));
            // Unitary steps preserve a block's norm and dephasing only shrinks it.
            if band == 1 && rho.iter().all(|z| z.norm() < 1e-14) {
                continue;
            }
            let damp = nd::Array2::from_shape_fn((sr.len(), sc.len()), |(i, j)| {
                let da = sr[i].1 as f64 - sc[j].1 as f64;
                let db = sr[i].2 as f64 - sc[j].2 as f64;
                (-kappa * cfg.dt * (da * da + db * db)).exp()
            });
            blocks.push(Block { row, col, rho, damp });
        }
    }

    let mut diag = RunDiagnostics::new("sectors");
    let sandwich = |u: &nd::Array2<C64>, w: &nd::Array2<C64>, r: &nd::Array2<C64>| {
        u.dot(r).dot(&w.t().mapv(|z| z.conj()))
    };
    let n = cfg.steps();
    let meta: Vec<(usize, usize)> = blocks.iter().map(|b| (b.row, b.col)).collect();
    let mut report = |k: usize, synced: &[nd::Array2<C64>], diag: &mut RunDiagnostics| -> Result<()> {
        let snap = observe_blocks(&meta, synced, &sectors, ca, cb);
        diag.track(&snap);
        let drift = (snap.trace - 1.0).abs();
        if drift > cfg.trace_tolerance {
            return Err(Error::TraceDrift { step: k, time: k as f64 * cfg.dt, drift, tolerance: cfg.trace_tolerance });
        }
        obs.observe(k as f64 * cfg.dt, &snap, None);
        Ok(())
    };
    let initial: Vec<nd::Array2<C64>> = blocks.iter().map(|b| b.rho.clone()).collect();
    report(0, &initial, &mut diag)?;
    // Inner blocks sit half a unitary step ahead of the synchronized state.
    let mut inner: Vec<nd::Array2<C64>> =
        blocks.iter().map(|b| sandwich(&sectors[b.row].half, &sectors[b.col].half, &b.rho)).collect();
    for k in 1..=n {
        for (b, r) in blocks.iter().zip(inner.iter_mut()) {
            r.zip_mut_with(&b.damp, |z, &d| *z *= d);
        }
        if cfg.is_record_step(k) {
            let synced: Vec<nd::Array2<C64>> = blocks
                .iter()
                .zip(&inner)
                .map(|(b, r)| sandwich(&sectors[b.row].half, &sectors[b.col].half, r))
                .collect();
            report(k, &synced, &mut diag)?;
        }
        if k < n {
            for (b, r) in blocks.iter().zip(inner.iter_mut()) {
                *r = sandwich(&sectors[b.row].full, &sectors[b.col].full, r);
            }
        }
    }
    diag.steps = n;
    Ok(diag)
}

fn observe_blocks(blocks: &[(usize, usize)], synced: &[nd::Array2<C64>], sectors: &[Sector], ca: usize, cb: usize) -> Snapshot {
    let zero = C64::new(0.0, 0.0);
    let (mut n_a, mut n_b, mut trace, mut edge) = (0.0, 0.0, 0.0, 0.0);
    let mut rho_q = [[zero; 2]; 2];
    for (&(row, col), rho) in blocks.iter().zip(synced) {
        let (sr, sc) = (&sectors[row].states, &sectors[col].states);
        if row == col {
            for (i, &(_, na, nb, q)) in sr.iter().enumerate() {
                let p = rho[[i, i]].re;
                n_a += na as f64 * p;
                n_b += nb as f64 * p;
                trace += p;
                rho_q[q][q] += p;
                if (ca > 1 && na == ca - 1) || (cb > 1 && nb == cb - 1) {
                    edge += p;
                }
            }
        } else {
            // <-, n_a, n_b| ρ |+, n_a, n_b> links sector N to N + 1.
            for (i, &(_, na, nb, q)) in sr.iter().enumerate() {
                if q != 0 {
                    continue;
                }
                if let Some(j) = sc.iter().position(|&(_, ma, mb, r)| r == 1 && ma == na && mb == nb) {
                    rho_q[0][1] += rho[[i, j]];
                }
            }
        }
    }
    rho_q[1][0] = rho_q[0][1].conj();
    Snapshot { n_a, n_b, rho_q, field_purity: None, trace, edge_population: edge }
}
