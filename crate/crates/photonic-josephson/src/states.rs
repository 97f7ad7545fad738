//! Initial-state factories and basic state calculus.
//!
//! Single-mode factories return bare vectors or matrices over `0..cutoff`;
//! [`assemble_product`] places them on a [`SpaceDescriptor`]. Truncated
//! distributions are renormalized, and a factory refuses cutoffs that keep
//! less than `1 - 1e-6` of the weight.

use ndarray as nd;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::hilbert::{Operator, SpaceDescriptor, Subsystem};

/// Weight a truncated distribution must retain.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug)]
pub enum StateData {
    Pure(nd::Array1<C64>),
    Density(nd::Array2<C64>),
}

/// State vector or density matrix over a [`SpaceDescriptor`].
#[derive(Clone, Debug)]
pub struct QuantumState {
    space: SpaceDescriptor,
    data: StateData,
}

impl QuantumState {
    /// Wraps a state vector; the norm must be 1 within `1e-10`.
    pub fn pure(space: SpaceDescriptor, psi: nd::Array1<C64>) -> Result<Self> {
        if psi.len() != space.dim() {
            return invalid(format!("vector length {} does not match dim {}", psi.len(), space.dim()));
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return invalid(format!("state vector has norm {norm}, expected 1"));
        }
        Ok(Self { space, data: StateData::Pure(psi) })
    }

    /// Wraps a density matrix, checking Hermiticity, unit trace and positivity.
    pub fn density(space: SpaceDescriptor, rho: nd::Array2<C64>) -> Result<Self> {
        check_density(&rho, space.dim())?;
        Ok(Self { space, data: StateData::Density(rho) })
    }

    pub(crate) fn density_unchecked(space: SpaceDescriptor, rho: nd::Array2<C64>) -> Self {
        Self { space, data: StateData::Density(rho) }
    }

    pub(crate) fn pure_unchecked(space: SpaceDescriptor, psi: nd::Array1<C64>) -> Self {
        Self { space, data: StateData::Pure(psi) }
    }

    pub(crate) fn data_mut(&mut self) -> &mut StateData {
        &mut self.data
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn to_density_matrix(&self) -> nd::Array2<C64> {
        match &self.data {
            StateData::Pure(psi) => outer(psi),
            StateData::Density(rho) => rho.clone(),
        }
    }

    /// Promotes a pure state to density form; density states pass through.
    pub fn into_density(self) -> Self {
        match self.data {
            StateData::Pure(psi) => Self { space: self.space, data: StateData::Density(outer(&psi)) },
            d => Self { space: self.space, data: d },
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(psi) => psi.iter().map(|z| z.norm_sqr()).sum(),
            StateData::Density(rho) => rho.diag().iter().map(|z| z.re).sum(),
        }
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        match &self.data {
            StateData::Pure(psi) => psi.iter().map(|z| z.norm_sqr()).sum::<f64>().powi(2),
            StateData::Density(rho) => rho.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.space() != self.space {
            return invalid("operator and state live on different spaces");
        }
        Ok(match &self.data {
            StateData::Pure(psi) => op.expectation_pure(psi),
            StateData::Density(rho) => op.expectation_density(rho),
        })
    }
}

/// Reduced density matrix produced by a partial trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedState {
    pub subsystem: Subsystem,
    pub matrix: nd::Array2<C64>,
}

impl ReducedState {
    pub fn new(subsystem: Subsystem, matrix: nd::Array2<C64>) -> Self {
        Self { subsystem, matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().iter().map(|z| z.re).sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `1 - Tr ρ²`.
    pub fn linear_entropy(&self) -> f64 {
        1.0 - self.purity()
    }
}

/// State of a single factor (qubit or one mode).
#[derive(Clone, Debug, PartialEq)]
pub enum LocalState {
    Pure(nd::Array1<C64>),
    Mixed(nd::Array2<C64>),
}

impl LocalState {
    pub fn dim(&self) -> usize {
        match self {
            LocalState::Pure(v) => v.len(),
            LocalState::Mixed(m) => m.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, LocalState::Pure(_))
    }

    pub fn to_density(&self) -> nd::Array2<C64> {
        match self {
            LocalState::Pure(v) => outer(v),
            LocalState::Mixed(m) => m.clone(),
        }
    }

    /// Diagonal of the density matrix.
    pub fn populations(&self) -> nd::Array1<f64> {
        match self {
            LocalState::Pure(v) => v.mapv(|z| z.norm_sqr()),
            LocalState::Mixed(m) => m.diag().mapv(|z| z.re),
        }
    }
}

impl From<nd::Array1<C64>> for LocalState {
    fn from(v: nd::Array1<C64>) -> Self {
        LocalState::Pure(v)
    }
}

impl From<nd::Array2<C64>> for LocalState {
    fn from(m: nd::Array2<C64>) -> Self {
        LocalState::Mixed(m)
    }
}

/// Qubit preparations used by the scenarios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QubitSpec {
    /// `(|+> + |->)/√2`
    PlusSuperposition,
    /// `|+>`
    Plus,
    /// `|->`
    Minus,
    MaximallyMixed,
    /// `cos(θ/2)|+> + e^{iφ} sin(θ/2)|->`
    Bloch { theta: f64, phi: f64 },
}

/// Qubit vector in the `(|->, |+>)` ordering, or `I/2`.
pub fn qubit_state(spec: QubitSpec) -> LocalState {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: C64, b: C64| LocalState::Pure(nd::arr1(&[a, b]));
    match spec {
        QubitSpec::PlusSuperposition => v(C64::new(r, 0.0), C64::new(r, 0.0)),
        QubitSpec::Plus => v(ZERO, C64::new(1.0, 0.0)),
        QubitSpec::Minus => v(C64::new(1.0, 0.0), ZERO),
        QubitSpec::MaximallyMixed => LocalState::Mixed(nd::Array2::eye(2) * C64::new(0.5, 0.0)),
        QubitSpec::Bloch { theta, phi } => {
            let (s, c) = (theta / 2.0).sin_cos();
            v(C64::from_polar(s, phi), C64::new(c, 0.0))
        }
    }
}

/// Fock amplitudes of `|α>`, renormalized over `0..cutoff`.
pub fn coherent_mode_state(alpha: C64, cutoff: usize) -> Result<nd::Array1<C64>> {
    if cutoff == 0 {
        return invalid("cutoff must be at least 1");
    }
    let mut c = nd::Array1::<C64>::zeros(cutoff);
    c[0] = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 1..cutoff {
        c[n] = c[n - 1] * alpha / (n as f64).sqrt();
    }
    let kept: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    check_kept(kept, cutoff)?;
    Ok(c / C64::new(kept.sqrt(), 0.0))
}

/// Bose-Einstein weights `n̄ⁿ/(n̄+1)ⁿ⁺¹` on the diagonal.
pub fn thermal_mode_state(nbar: f64, cutoff: usize) -> Result<nd::Array2<C64>> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return invalid(format!("mean photon number must be finite and non-negative (got {nbar})"));
    }
    if cutoff == 0 {
        return invalid("cutoff must be at least 1");
    }
    let ratio = nbar / (nbar + 1.0);
    let w: Vec<f64> = (0..cutoff).map(|n| ratio.powi(n as i32) / (nbar + 1.0)).collect();
    diagonal_state(w, cutoff)
}

/// Diagonal of `|α><α|` with the coherences removed.
pub fn poissonian_diagonal_state(alpha: C64, cutoff: usize) -> Result<nd::Array2<C64>> {
    let c = coherent_mode_state(alpha, cutoff)?;
    // Recompute unnormalized weights to run the truncation check on them.
    let m = alpha.norm_sqr();
    let mut w = vec![(-m).exp(); cutoff];
    for n in 1..cutoff {
        w[n] = w[n - 1] * m / n as f64;
    }
    debug_assert!(c.len() == cutoff);
    diagonal_state(w, cutoff)
}

fn diagonal_state(w: Vec<f64>, cutoff: usize) -> Result<nd::Array2<C64>> {
    let kept: f64 = w.iter().sum();
    check_kept(kept, cutoff)?;
    Ok(nd::Array2::from_diag(&nd::Array1::from_iter(w.into_iter().map(|x| C64::new(x / kept, 0.0)))))
}

fn check_kept(kept: f64, cutoff: usize) -> Result<()> {
    if kept < 1.0 - TRUNCATION_TOLERANCE {
        return Err(Error::Truncation { cutoff, achieved: kept, tolerance: TRUNCATION_TOLERANCE });
    }
    Ok(())
}

/// `qubit ⊗ mode_a ⊗ mode_b`; density form if any factor is mixed.
pub fn assemble_product(
    qubit: &LocalState,
    mode_a: &LocalState,
    mode_b: &LocalState,
    space: SpaceDescriptor,
) -> Result<QuantumState> {
    if qubit.dim() != 2 || mode_a.dim() != space.cutoff_a() || mode_b.dim() != space.cutoff_b() {
        return invalid(format!(
            "factor dimensions ({}, {}, {}) do not match space {}",
            qubit.dim(),
            mode_a.dim(),
            mode_b.dim(),
            space
        ));
    }
    match (qubit, mode_a, mode_b) {
        (LocalState::Pure(q), LocalState::Pure(a), LocalState::Pure(b)) => {
            let psi = kron_vec(q, &kron_vec(a, b));
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            QuantumState::pure(space, psi / C64::new(norm, 0.0))
        }
        _ => {
            let rho = kron_mat(&qubit.to_density(), &kron_mat(&mode_a.to_density(), &mode_b.to_density()));
            let tr: C64 = rho.diag().sum();
            if (tr.re - 1.0).abs() > 1e-8 {
                return invalid(format!("product trace {} differs from 1", tr.re));
            }
            Ok(QuantumState::density_unchecked(space, rho))
        }
    }
}

pub(crate) fn outer(v: &nd::Array1<C64>) -> nd::Array2<C64> {
    let n = v.len();
    nd::Array2::from_shape_fn((n, n), |(i, j)| v[i] * v[j].conj())
}

pub(crate) fn kron_vec(x: &nd::Array1<C64>, y: &nd::Array1<C64>) -> nd::Array1<C64> {
    nd::Array1::from_iter(x.iter().flat_map(|&a| y.iter().map(move |&b| a * b)))
}

pub(crate) fn kron_mat(x: &nd::Array2<C64>, y: &nd::Array2<C64>) -> nd::Array2<C64> {
    let (n, m) = (x.nrows(), y.nrows());
    nd::Array2::from_shape_fn((n * m, n * m), |(i, j)| x[[i / m, j / m]] * y[[i % m, j % m]])
}

fn check_density(rho: &nd::Array2<C64>, dim: usize) -> Result<()> {
    if rho.dim() != (dim, dim) {
        return invalid(format!("density matrix shape {:?} does not match dim {dim}", rho.dim()));
    }
    let herm = rho
        .indexed_iter()
        .map(|((i, j), z)| (z - rho[[j, i]].conj()).norm())
        .fold(0.0, f64::max);
    if herm > 1e-10 {
        return invalid(format!("density matrix is not Hermitian (deviation {herm:.3e})"));
    }
    let tr: f64 = rho.diag().iter().map(|z| z.re).sum();
    if (tr - 1.0).abs() > 1e-8 {
        return invalid(format!("density matrix trace {tr} differs from 1"));
    }
    let (eig, _) = rho.eigh(UPLO::Lower)?;
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-8 {
        return invalid(format!("density matrix has negative eigenvalue {min:.3e}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_space, partial_trace};
    use proptest::prelude::*;

    fn mean_and_var(p: &nd::Array1<f64>) -> (f64, f64) {
        let mean: f64 = p.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
        let sq: f64 = p.iter().enumerate().map(|(n, w)| (n * n) as f64 * w).sum();
        (mean, sq - mean * mean)
    }

    #[test]
    fn coherent_examples() {
        let vac = coherent_mode_state(ZERO, 5).unwrap();
        assert_eq!(vac[0], C64::new(1.0, 0.0));
        let c = coherent_mode_state(C64::new(4.0, 0.0), 40).unwrap();
        let (mean, _) = mean_and_var(&c.mapv(|z| z.norm_sqr()));
        assert!((mean - 16.0).abs() < 1e-4);
        let c = coherent_mode_state(C64::new(2.0, 0.0), 20).unwrap();
        let (mean, var) = mean_and_var(&c.mapv(|z| z.norm_sqr()));
        assert!((mean - var).abs() < 1e-4);
        // 35 levels drop 2.7e-5 of the Poisson(16) weight.
        assert!(matches!(coherent_mode_state(C64::new(4.0, 0.0), 35), Err(Error::Truncation { .. })));
    }

    #[test]
    fn thermal_examples() {
        let vac = thermal_mode_state(0.0, 4).unwrap();
        assert_eq!(vac[[0, 0]], C64::new(1.0, 0.0));
        assert_eq!(vac[[1, 1]], ZERO);
        let th = thermal_mode_state(5.0, 76).unwrap();
        let p = th.diag().mapv(|z| z.re);
        assert!((mean_and_var(&p).0 - 5.0).abs() < 1e-3);
        // Untruncated purity is the geometric series Σ p_n² = 1/(2n̄+1).
        let purity: f64 = p.iter().map(|w| w * w).sum();
        assert!((purity - 1.0 / 11.0).abs() < 1e-3);
        // 60 levels lose (5/6)^60 ≈ 1.8e-5 of the weight.
        assert!(matches!(thermal_mode_state(5.0, 60), Err(Error::Truncation { .. })));
        assert!(thermal_mode_state(-1.0, 10).is_err());
    }

    #[test]
    fn poissonian_examples() {
        let alpha = C64::new(4.0, 0.0);
        let d = poissonian_diagonal_state(alpha, 60).unwrap();
        let c = coherent_mode_state(alpha, 60).unwrap();
        for n in 0..60 {
            assert!((d[[n, n]].re - c[n].norm_sqr()).abs() < 1e-15);
        }
        assert!((mean_and_var(&d.diag().mapv(|z| z.re)).0 - 16.0).abs() < 1e-6);
        let d1 = poissonian_diagonal_state(C64::new(1.0, 0.0), 30).unwrap();
        let mut brute = 0.0;
        let mut f = 1.0;
        for n in 0..30 {
            if n > 0 {
                f *= n as f64;
            }
            let w = (-1.0f64).exp() / f;
            brute += w * w;
        }
        let purity: f64 = d1.iter().map(|z| z.norm_sqr()).sum();
        assert!((purity - brute).abs() < 1e-12);
    }

    #[test]
    fn qubit_examples() {
        let sp = build_space(1, 1).unwrap();
        let vac = LocalState::Pure(nd::arr1(&[C64::new(1.0, 0.0)]));
        let bloch = |spec| {
            let st = assemble_product(&qubit_state(spec), &vac, &vac, sp).unwrap();
            let r = partial_trace(&st, Subsystem::Qubit).unwrap().matrix;
            (2.0 * r[[0, 1]].re, 2.0 * r[[0, 1]].im, r[[1, 1]].re - r[[0, 0]].re)
        };
        let (x, y, z) = bloch(QubitSpec::PlusSuperposition);
        assert!((x - 1.0).abs() < 1e-15 && y.abs() < 1e-15 && z.abs() < 1e-15);
        assert_eq!(bloch(QubitSpec::Plus).2, 1.0);
        let mixed = qubit_state(QubitSpec::MaximallyMixed).to_density();
        let p: f64 = 1.0 - mixed.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert_eq!(p, 0.5);
        let (x, y, z) = bloch(QubitSpec::Bloch { theta: 1.1, phi: 0.4 });
        assert!((x - 1.1f64.sin() * 0.4f64.cos()).abs() < 1e-14);
        assert!((y - 1.1f64.sin() * 0.4f64.sin()).abs() < 1e-14);
        assert!((z - 1.1f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn product_examples() {
        let sp = build_space(4, 3).unwrap();
        let a = coherent_mode_state(ZERO, 4).unwrap();
        let b = coherent_mode_state(ZERO, 3).unwrap();
        let st = assemble_product(&qubit_state(QubitSpec::Minus), &a.into(), &b.into(), sp).unwrap();
        match st.data() {
            StateData::Pure(psi) => {
                assert_eq!(psi[0], C64::new(1.0, 0.0));
                assert!(psi.iter().skip(1).all(|z| *z == ZERO));
            }
            _ => panic!("expected a pure product"),
        }
        let th = thermal_mode_state(0.02, 4).unwrap();
        let st = assemble_product(
            &qubit_state(QubitSpec::PlusSuperposition),
            &th.into(),
            &coherent_mode_state(ZERO, 3).unwrap().into(),
            sp,
        )
        .unwrap();
        assert!(!st.is_pure());
        assert!(QuantumState::density(sp, st.to_density_matrix()).is_ok());
        let bad = assemble_product(&qubit_state(QubitSpec::Plus), &coherent_mode_state(ZERO, 5).unwrap().into(), &LocalState::Pure(nd::Array1::zeros(3)), sp);
        assert!(bad.is_err());
    }

    #[test]
    fn density_validation() {
        let sp = build_space(1, 1).unwrap();
        let bad = nd::arr2(&[[C64::new(1.5, 0.0), ZERO], [ZERO, C64::new(-0.5, 0.0)]]);
        assert!(QuantumState::density(sp, bad).is_err());
        let nonherm = nd::arr2(&[[C64::new(0.5, 0.0), C64::new(0.1, 0.0)], [ZERO, C64::new(0.5, 0.0)]]);
        assert!(QuantumState::density(sp, nonherm).is_err());
        assert!(QuantumState::pure(sp, nd::arr1(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)])).is_err());
    }

    #[test]
    fn product_reassembles_from_its_reductions() {
        let sp = build_space(3, 4).unwrap();
        let q = qubit_state(QubitSpec::Bloch { theta: 0.3, phi: 1.2 });
        let a = thermal_mode_state(0.01, 3).unwrap();
        let b = coherent_mode_state(C64::new(0.1, 0.0), 4).unwrap();
        let st = assemble_product(&q, &a.into(), &b.into(), sp).unwrap();
        let rq = partial_trace(&st, Subsystem::Qubit).unwrap().matrix;
        let rf = partial_trace(&st, Subsystem::Fields).unwrap().matrix;
        let rebuilt = kron_mat(&rq, &rf);
        let diff = (&rebuilt - &st.to_density_matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15);
    }

    proptest! {
        #[test]
        fn coherent_overlap(ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, bi in -2.0f64..2.0) {
            let (alpha, beta) = (C64::new(ar, ai), C64::new(br, bi));
            prop_assume!(alpha.norm() <= 2.0 && beta.norm() <= 2.0);
            let x = coherent_mode_state(alpha, 30).unwrap();
            let y = coherent_mode_state(beta, 30).unwrap();
            let ov: C64 = x.iter().zip(y.iter()).map(|(p, q)| p.conj() * q).sum();
            prop_assert!((ov.norm_sqr() - (-(alpha - beta).norm_sqr()).exp()).abs() < 1e-6);
        }

        #[test]
        fn factories_satisfy_state_invariants(nbar in 0.0f64..1.0, ar in -1.5f64..1.5) {
            let sp = build_space(24, 2).unwrap();
            let vac_b: LocalState = coherent_mode_state(ZERO, 2).unwrap().into();
            for a in [
                LocalState::Mixed(thermal_mode_state(nbar, 24).unwrap()),
                LocalState::Mixed(poissonian_diagonal_state(C64::new(ar, 0.0), 24).unwrap()),
                LocalState::Pure(coherent_mode_state(C64::new(ar, 0.3), 24).unwrap()),
            ] {
                let st = assemble_product(&qubit_state(QubitSpec::MaximallyMixed), &a, &vac_b, sp).unwrap();
                prop_assert!(QuantumState::density(sp, st.to_density_matrix()).is_ok());
            }
        }
    }
}
