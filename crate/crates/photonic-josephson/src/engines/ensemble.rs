use ndarray as nd;
use num_complex::Complex64 as C64;

use super::bright::{bright_hamiltonian, Rotation};
use super::field_state;
use crate::dynamics::check_hermitian;
use crate::error::{invalid, Error, Result};
use crate::hilbert::{build_space, eigh_hermitian, mode_annihilator, number_operator, Mode};
use crate::observables::{Observable, Observer, RunDiagnostics, Snapshot};
use crate::scenarios::Scenario;
use crate::states::{qubit_state, LocalState};

const NEGLIGIBLE: f64 = 1e-16;

/// Closed dynamics of `ρ_q ⊗ Σ p_n |n><n| ⊗ |0><0|`.
///
/// Each member `|q_r>|n>_a|0>_b` splits into `Σ_k c_nk |q_r, k>_A |n-k>_B`
/// with `c_nk = √C(n,k) cᵏ (-s)ⁿ⁻ᵏ`. The dark mode only picks up the phase
/// `e^{-iω(n-k)t}`, so every observable reduces to sums over the eigenbasis
/// of the `qubit ⊗ A` Hamiltonian and can be evaluated at any time directly.
pub struct EnsembleRun {
    cutoff: usize,
    photons: usize,
    omega: f64,
    rotation: Rotation,
    energies: nd::Array1<f64>,
    vectors: nd::Array2<C64>,
    /// `(n, r, p_n w_r)` for the retained members.
    members: Vec<(usize, usize, f64)>,
    /// Per qubit branch `r`, row `k` holds the eigencoefficients of `|q_r, k>`.
    coeffs: Vec<nd::Array2<C64>>,
    /// `c_nk`, zero for `k > n`.
    binom: nd::Array2<f64>,
    forms: Forms,
    n_dark: f64,
}

/// Quadratic forms `u† M u` in the phase vector `u = e^{-iEt}`.
struct Forms {
    n_bright: nd::Array2<C64>,
    cross: nd::Array2<C64>,
    q00: nd::Array2<C64>,
    q11: nd::Array2<C64>,
    q01: nd::Array2<C64>,
    edge: nd::Array2<C64>,
}

impl EnsembleRun {
    pub fn new(s: &Scenario) -> Result<Self> {
        if let Some(why) = super::unsupported_reason(s, super::Engine::Ensemble) {
            return invalid(format!("ensemble engine: {why}"));
        }
        let p = &s.params;
        let rotation = Rotation::of(p);
        let photons = s.cutoff_a;
        let cutoff = s.cutoff_a.max(s.cutoff_b);
        let space = build_space(cutoff, 1)?;
        let h = bright_hamiltonian(s.hamiltonian, p, space)?;
        check_hermitian(&h)?;
        let (energies, vectors) = eigh_hermitian(&h.to_dense())?;
        let d = space.dim();

        let weights = match field_state(&s.field_a, photons)? {
            LocalState::Mixed(rho) => rho.diag().mapv(|z| z.re),
            LocalState::Pure(psi) => psi.mapv(|z| z.norm_sqr()),
        };
        let branches = qubit_branches(&qubit_state(s.qubit));
        let mut members = Vec::new();
        for (n, &pn) in weights.iter().enumerate() {
            for (r, (w, _)) in branches.iter().enumerate() {
                if pn * w > NEGLIGIBLE {
                    members.push((n, r, pn * w));
                }
            }
        }

        let binom = split_coefficients(photons, rotation);
        let vh = vectors.t().mapv(|z| z.conj());
        let coeffs: Vec<nd::Array2<C64>> = branches
            .iter()
            .map(|(_, q)| {
                let mut w = nd::Array2::zeros((photons, d));
                for k in 0..photons {
                    for (qi, &amp) in q.iter().enumerate() {
                        let col = vh.column(space.index(qi, k, 0)).to_owned();
                        w.row_mut(k).scaled_add(amp, &col);
                    }
                }
                w
            })
            .collect();

        // Per-(r, k) weights of the diagonal and the A†B forms.
        let nr = branches.len();
        let mut diag_w = nd::Array2::<f64>::zeros((nr, photons));
        let mut cross_w = nd::Array2::<f64>::zeros((nr, photons));
        let mut n_dark = 0.0;
        for &(n, r, pw) in &members {
            for k in 0..=n {
                let c2 = binom[[n, k]] * binom[[n, k]];
                diag_w[[r, k]] += pw * c2;
                n_dark += pw * c2 * (n - k) as f64;
                if k < n {
                    cross_w[[r, k]] += pw * binom[[n, k + 1]] * binom[[n, k]] * ((n - k) as f64).sqrt();
                }
            }
        }
        let mut s0 = nd::Array2::<C64>::zeros((d, d));
        let mut s1 = nd::Array2::<C64>::zeros((d, d));
        for (r, w) in coeffs.iter().enumerate() {
            for k in 0..photons {
                if diag_w[[r, k]] > 0.0 {
                    add_outer(&mut s0, diag_w[[r, k]], w.row(k), w.row(k));
                }
                if k + 1 < photons && cross_w[[r, k]] != 0.0 {
                    add_outer(&mut s1, cross_w[[r, k]], w.row(k + 1), w.row(k));
                }
            }
        }

        let rotate = |m: nd::Array2<C64>| vh.dot(&m).dot(&vectors);
        let block = |q: usize| vectors.slice(nd::s![q * cutoff..(q + 1) * cutoff, ..]).to_owned();
        let (v0, v1) = (block(0), block(1));
        let qform = |a: &nd::Array2<C64>, b: &nd::Array2<C64>| a.t().mapv(|z| z.conj()).dot(b);
        let mut edge_op = nd::Array2::<C64>::zeros((d, d));
        if cutoff > 1 {
            for q in 0..2 {
                let i = space.index(q, cutoff - 1, 0);
                edge_op[[i, i]] = C64::new(1.0, 0.0);
            }
        }
        let a_dag = mode_annihilator(space, Mode::A).adjoint().to_dense();
        let forms = Forms {
            n_bright: rotate(number_operator(space, Mode::A).to_dense()) * &s0,
            cross: rotate(a_dag) * &s1,
            q00: qform(&v0, &v0) * &s0,
            q11: qform(&v1, &v1) * &s0,
            // ρ_q[0][1] = <(|+><-|) ⊗ 1>.
            q01: qform(&v1, &v0) * &s0,
            edge: rotate(edge_op) * &s0,
        };

        Ok(Self {
            cutoff,
            photons,
            omega: p.delta(),
            rotation,
            energies,
            vectors,
            members,
            coeffs,
            binom,
            forms,
            n_dark,
        })
    }

    /// Cutoff of the bright mode.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Dimension of the mode-a density returned by the reduced-state methods.
    pub fn mode_a_dim(&self) -> usize {
        self.cutoff + self.photons - 1
    }

    fn phases(&self, t: f64) -> nd::Array1<C64> {
        self.energies.mapv(|e| C64::from_polar(1.0, -e * t))
    }

    /// Observables at time `t`; the field purity is optional because it costs
    /// far more than the rest.
    pub fn snapshot(&self, t: f64, field_purity: bool) -> Snapshot {
        let u = self.phases(t);
        let uc = u.mapv(|z| z.conj());
        let form = |m: &nd::Array2<C64>| uc.dot(&m.dot(&u));
        let n_bright = form(&self.forms.n_bright).re;
        let cross = form(&self.forms.cross) * C64::from_polar(1.0, -self.omega * t);
        let (c, s) = (self.rotation.c, self.rotation.s);
        let mix = 2.0 * c * s * cross.re;
        let n_a = c * c * n_bright + s * s * self.n_dark - mix;
        let n_b = s * s * n_bright + c * c * self.n_dark + mix;
        let q00 = form(&self.forms.q00).re;
        let q11 = form(&self.forms.q11).re;
        let q01 = form(&self.forms.q01);
        Snapshot {
            n_a,
            n_b,
            rho_q: [[C64::new(q00, 0.0), q01], [q01.conj(), C64::new(q11, 0.0)]],
            field_purity: field_purity.then(|| self.field_purity_at(&u)),
            trace: q00 + q11,
            edge_population: form(&self.forms.edge).re,
        }
    }

    /// `Φ_r = V (u ∘ W_r)`, columns indexed by `k`.
    fn evolved(&self, u: &nd::Array1<C64>) -> Vec<nd::Array2<C64>> {
        self.coeffs
            .iter()
            .map(|w| {
                let scaled = w.t().to_owned() * &u.view().insert_axis(nd::Axis(1));
                self.vectors.dot(&scaled)
            })
            .collect()
    }

    /// `Tr ρ_f²` from the Gram matrices of the members' qubit components.
    fn field_purity_at(&self, u: &nd::Array1<C64>) -> f64 {
        let phi = self.evolved(u);
        let ca = self.cutoff;
        let nr = phi.len();
        let part = |r: usize, q: usize| phi[r].slice(nd::s![q * ca..(q + 1) * ca, ..]).to_owned();
        let mut gram = Vec::with_capacity(4 * nr * nr);
        for r in 0..nr {
            for r2 in 0..nr {
                for q in 0..2 {
                    for q2 in 0..2 {
                        gram.push(((r, r2), part(r, q).t().mapv(|z| z.conj()).dot(&part(r2, q2))));
                    }
                }
            }
        }
        let mut total = 0.0;
        for &(n, r, pw) in &self.members {
            for &(n2, r2, pw2) in &self.members {
                let d = n2 as isize - n as isize;
                let k0 = (-d).max(0) as usize;
                for ((gr, gr2), g) in &gram {
                    if (*gr, *gr2) != (r, r2) {
                        continue;
                    }
                    let mut acc = C64::new(0.0, 0.0);
                    for k in k0..=n {
                        let k2 = (k as isize + d) as usize;
                        acc += g[[k, k2]] * (self.binom[[n, k]] * self.binom[[n2, k2]]);
                    }
                    total += pw * pw2 * acc.norm_sqr();
                }
            }
        }
        total
    }

    /// Reduced density matrix of mode a at time `t`.
    pub fn mode_a_density(&self, t: f64) -> nd::Array2<C64> {
        let u = self.phases(t);
        let phi = self.evolved(&u);
        let na = self.mode_a_dim();
        let table = BeamSplitter::new(self.rotation, na - 1);
        let mut rho = nd::Array2::zeros((na, na));
        let mut amp = nd::Array3::<C64>::zeros((2, na, na));
        for &(n, r, pw) in &self.members {
            amp.fill(C64::new(0.0, 0.0));
            for m in 0..=n {
                let k = n - m;
                let coeff = self.binom[[n, k]] * C64::from_polar(1.0, -self.omega * m as f64 * t);
                for q in 0..2 {
                    for j in 0..self.cutoff {
                        let y = coeff * phi[r][[q * self.cutoff + j, k]];
                        if y.norm_sqr() > 0.0 {
                            table.scatter(&mut amp, q, j, m, y);
                        }
                    }
                }
            }
            for q in 0..2 {
                let a = amp.index_axis(nd::Axis(0), q);
                rho.scaled_add(C64::new(pw, 0.0), &a.dot(&a.t().mapv(|z| z.conj())));
            }
        }
        rho
    }
}

/// Time-averaged mode-a density over `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct ManifoldAverage {
    pub rho: nd::Array2<C64>,
    pub clusters: usize,
    /// Smallest energy gap between clusters.
    pub min_gap: f64,
    /// Bound on each dropped cross-cluster term, `2 / (gap · horizon)`.
    pub neglected_bound: f64,
}

/// Time average of `ρ_a` over `[0, horizon]`, or its infinite-time limit.
///
/// Energies `E_i + ωm` of the members' components are grouped into clusters
/// separated by gaps large enough that cross-cluster terms average below
/// `tolerance`. Within a cluster the average is exact.
pub fn manifold_averaged_mode_a(run: &EnsembleRun, horizon: f64, tolerance: f64) -> Result<ManifoldAverage> {
    if !(horizon > 0.0) || !(tolerance > 0.0) {
        return invalid("horizon and tolerance must be positive");
    }
    let d = run.energies.len();
    let ca = run.cutoff;
    let threshold = if horizon.is_finite() { 2.0 / (tolerance * horizon) } else { 1e-9 };
    let mut elems: Vec<(f64, usize, usize)> = Vec::with_capacity(d * run.photons);
    for m in 0..run.photons {
        for i in 0..d {
            elems.push((run.energies[i] + run.omega * m as f64, i, m));
        }
    }
    elems.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut bounds = vec![0];
    let mut min_gap = f64::INFINITY;
    for w in 1..elems.len() {
        let gap = elems[w].0 - elems[w - 1].0;
        if gap > threshold {
            bounds.push(w);
            min_gap = min_gap.min(gap);
        }
    }
    bounds.push(elems.len());

    let sparse: Vec<Vec<(usize, C64)>> = (0..d)
        .map(|i| {
            run.vectors
                .column(i)
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > 1e-12)
                .map(|(row, &z)| (row, z))
                .collect()
        })
        .collect();
    let na = run.mode_a_dim();
    let table = BeamSplitter::new(run.rotation, na - 1);
    let mut rho = nd::Array2::<C64>::zeros((na, na));
    let mut amp = nd::Array3::<C64>::zeros((2, na, na));
    let mut local = nd::Array3::<C64>::zeros((2, ca, run.photons));
    let mut clusters = 0;
    for win in bounds.windows(2) {
        let cluster = &elems[win[0]..win[1]];
        let size = cluster.len();
        if size > 4000 {
            return Err(Error::InvalidArgument(format!(
                "spectrum too dense to average over {horizon}: cluster of {size} levels"
            )));
        }
        let mut x = nd::Array2::<C64>::zeros((size, run.members.len()));
        let mut live = false;
        for (col, &(n, r, _)) in run.members.iter().enumerate() {
            for (row, &(_, i, m)) in cluster.iter().enumerate() {
                if m <= n {
                    let k = n - m;
                    x[[row, col]] = run.coeffs[r][[k, i]] * run.binom[[n, k]];
                    live |= x[[row, col]].norm_sqr() > 0.0;
                }
            }
        }
        if !live {
            continue;
        }
        clusters += 1;
        let weights = nd::Array1::from_iter(run.members.iter().map(|&(_, _, pw)| C64::new(pw, 0.0)));
        let xw = &x * &weights.view().insert_axis(nd::Axis(0));
        let mut avg = xw.dot(&x.t().mapv(|z| z.conj()));
        if horizon.is_finite() {
            for a in 0..size {
                for b in 0..size {
                    avg[[a, b]] *= phase_average((cluster[a].0 - cluster[b].0) * horizon);
                }
            }
        }
        let (lam, vecs) = eigh_hermitian(&avg)?;
        for (l, &lv) in lam.iter().enumerate() {
            if lv < 1e-15 {
                continue;
            }
            local.fill(C64::new(0.0, 0.0));
            for (row, &(_, i, m)) in cluster.iter().enumerate() {
                let y = vecs[[row, l]];
                for &(idx, v) in &sparse[i] {
                    local[[idx / ca, idx % ca, m]] += y * v;
                }
            }
            amp.fill(C64::new(0.0, 0.0));
            for ((q, j, m), &y) in local.indexed_iter() {
                if y.norm_sqr() > 1e-30 {
                    table.scatter(&mut amp, q, j, m, y);
                }
            }
            for q in 0..2 {
                let a = amp.index_axis(nd::Axis(0), q);
                rho.scaled_add(C64::new(lv, 0.0), &a.dot(&a.t().mapv(|z| z.conj())));
            }
        }
    }
    let neglected_bound = if horizon.is_finite() { 2.0 / (min_gap * horizon) } else { 0.0 };
    Ok(ManifoldAverage { rho, clusters, min_gap, neglected_bound })
}

/// `(1/T)∫₀ᵀ e^{-ixt} dt` with `y = xT`.
fn phase_average(y: f64) -> C64 {
    if y.abs() < 1e-8 {
        C64::new(1.0, -y / 2.0)
    } else {
        (C64::from_polar(1.0, -y) - 1.0) / C64::new(0.0, -y)
    }
}

/// Eigen-decomposition of the qubit's initial density matrix.
fn qubit_branches(q: &LocalState) -> Vec<(f64, [C64; 2])> {
    match q {
        LocalState::Pure(v) => vec![(1.0, [v[0], v[1]])],
        LocalState::Mixed(m) => {
            let (w, v) = eigh_hermitian(m).expect("2x2 Hermitian eigensolve");
            (0..2).filter(|&r| w[r] > NEGLIGIBLE).map(|r| (w[r], [v[[0, r]], v[[1, r]]])).collect()
        }
    }
}

/// `c_nk = √C(n,k) cᵏ (-s)ⁿ⁻ᵏ` for `n, k < size`.
fn split_coefficients(size: usize, rot: Rotation) -> nd::Array2<f64> {
    let mut lnf = vec![0.0; size + 1];
    for i in 1..=size {
        lnf[i] = lnf[i - 1] + (i as f64).ln();
    }
    nd::Array2::from_shape_fn((size, size), |(n, k)| {
        if k > n {
            0.0
        } else {
            (0.5 * (lnf[n] - lnf[k] - lnf[n - k])).exp() * rot.c.powi(k as i32) * (-rot.s).powi((n - k) as i32)
        }
    })
}

fn add_outer(m: &mut nd::Array2<C64>, w: f64, bra: nd::ArrayView1<C64>, ket: nd::ArrayView1<C64>) {
    let bc = bra.mapv(|z| z.conj() * w);
    let outer = bc.view().insert_axis(nd::Axis(1)).dot(&ket.view().insert_axis(nd::Axis(0)));
    *m += &outer;
}

/// Overlaps `<n_a, N - n_a | j, N - j>_AB` for every total number `N`.
pub(crate) struct BeamSplitter {
    blocks: Vec<nd::Array2<f64>>,
}

impl BeamSplitter {
    pub fn new(rot: Rotation, max_total: usize) -> Self {
        let theta = rot.s.atan2(rot.c);
        let blocks = (0..=max_total)
            .map(|n| {
                // A† = e^{θK} a† e^{-θK} with K = b†a - a†b.
                let kmat = nd::Array2::from_shape_fn((n + 1, n + 1), |(row, col)| {
                    let (r, c) = (row as f64, col as f64);
                    let nt = n as f64;
                    if row + 1 == col {
                        C64::new(0.0, -(c * (nt - c + 1.0)).sqrt())
                    } else if row == col + 1 {
                        C64::new(0.0, -(-(r * (nt - c)).sqrt()))
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                // kmat = -iK is Hermitian; e^{θK} = V e^{iθλ} V†.
                let (lam, v) = eigh_hermitian(&kmat).expect("Hermitian eigensolve");
                let ph = lam.mapv(|l| C64::from_polar(1.0, theta * l));
                let vd = v.t().mapv(|z| z.conj());
                (&v * &ph.view().insert_axis(nd::Axis(0))).dot(&vd).mapv(|z| z.re)
            })
            .collect();
        Self { blocks }
    }

    /// Adds `y |j>_A |m>_B` to `amp[q]` in the `(n_a, n_b)` basis.
    pub fn scatter(&self, amp: &mut nd::Array3<C64>, q: usize, j: usize, m: usize, y: C64) {
        let n = j + m;
        let t = &self.blocks[n];
        for na in 0..=n {
            amp[[q, na, n - na]] += y * t[[na, j]];
        }
    }
}

pub(crate) fn run(s: &Scenario, obs: &mut dyn Observer) -> Result<RunDiagnostics> {
    let cfg = s.config;
    let run = EnsembleRun::new(s)?;
    let purity = s.observables.contains(&Observable::Pf);
    let mut diag = RunDiagnostics::new("ensemble");
    for k in cfg.record_steps() {
        let t = k as f64 * cfg.dt;
        let snap = run.snapshot(t, purity);
        diag.track(&snap);
        let drift = (snap.trace - 1.0).abs();
        if drift > cfg.trace_tolerance {
            return Err(Error::TraceDrift { step: k, time: t, drift, tolerance: cfg.trace_tolerance });
        }
        obs.observe(t, &snap, None);
    }
    diag.steps = cfg.steps();
    Ok(diag)
}
