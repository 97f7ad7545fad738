//! Truncated qubit ⊗ mode-a ⊗ mode-b space and its elementary operators.
//!
//! The basis index of `|q, n_a, n_b>` is `q·(c_a·c_b) + n_a·c_b + n_b`, where
//! `q = 0` is the lower qubit state `|->` and `q = 1` the upper state `|+>`.
//! Ladder operators are plain truncated matrices: no boundary renormalization.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use ndarray as nd;
use ndarray::ShapeBuilder;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::states::{QuantumState, ReducedState, StateData};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Cutoffs and index map of the composite space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceDescriptor {
    cutoff_a: usize,
    cutoff_b: usize,
}

impl SpaceDescriptor {
    pub fn new(cutoff_a: usize, cutoff_b: usize) -> Result<Self> {
        if cutoff_a == 0 || cutoff_b == 0 {
            return invalid(format!(
                "cutoffs must be at least 1 (got cutoff_a = {cutoff_a}, cutoff_b = {cutoff_b})"
            ));
        }
        Ok(Self { cutoff_a, cutoff_b })
    }

    pub fn cutoff_a(&self) -> usize {
        self.cutoff_a
    }

    pub fn cutoff_b(&self) -> usize {
        self.cutoff_b
    }

    /// Dimension of the two-mode field factor.
    pub fn field_dim(&self) -> usize {
        self.cutoff_a * self.cutoff_b
    }

    pub fn dim(&self) -> usize {
        2 * self.field_dim()
    }

    pub fn index(&self, q: usize, n_a: usize, n_b: usize) -> usize {
        debug_assert!(q < 2 && n_a < self.cutoff_a && n_b < self.cutoff_b);
        q * self.field_dim() + n_a * self.cutoff_b + n_b
    }

    pub fn decode(&self, index: usize) -> (usize, usize, usize) {
        debug_assert!(index < self.dim());
        let q = index / self.field_dim();
        let r = index % self.field_dim();
        (q, r / self.cutoff_b, r % self.cutoff_b)
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2 x {} x {} (dim {})", self.cutoff_a, self.cutoff_b, self.dim())
    }
}

/// Builds the space for the given photon-number cutoffs.
pub fn build_space(cutoff_a: usize, cutoff_b: usize) -> Result<SpaceDescriptor> {
    SpaceDescriptor::new(cutoff_a, cutoff_b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Mode::A),
            "b" | "B" => Ok(Mode::B),
            _ => invalid(format!("unknown mode tag '{s}' (expected a or b)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitOp {
    Z,
    X,
    Y,
    Raise,
    Lower,
}

impl FromStr for QubitOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" | "sz" => Ok(QubitOp::Z),
            "x" | "sx" => Ok(QubitOp::X),
            "y" | "sy" => Ok(QubitOp::Y),
            "+" | "plus" | "raise" => Ok(QubitOp::Raise),
            "-" | "minus" | "lower" => Ok(QubitOp::Lower),
            _ => invalid(format!("unknown qubit operator tag '{s}'")),
        }
    }
}

/// Subsystem kept by a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    Qubit,
    Fields,
    ModeA,
    ModeB,
}

impl FromStr for Subsystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubit" => Ok(Subsystem::Qubit),
            "fields" => Ok(Subsystem::Fields),
            "mode_a" => Ok(Subsystem::ModeA),
            "mode_b" => Ok(Subsystem::ModeB),
            _ => invalid(format!("unknown subsystem '{s}'")),
        }
    }
}

/// Compressed sparse row matrix, square.
#[derive(Clone, Debug)]
pub(crate) struct Csr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    fn from_triplets(n: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(trips.len());
        for (r, c, v) in trips {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(merged.len());
        let mut data = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            if v == ZERO {
                continue;
            }
            indptr[r + 1] += 1;
            indices.push(c);
            data.push(v);
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        Self { n, indptr, indices, data }
    }

    fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.data[k]))
        })
    }

    fn nnz(&self) -> usize {
        self.data.len()
    }

    fn adjoint(&self) -> Self {
        Self::from_triplets(self.n, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    fn combine(&self, other: &Self, a: C64, b: C64) -> Self {
        let trips = self
            .triplets()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.triplets().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        Self::from_triplets(self.n, trips)
    }

    fn matmul(&self, other: &Self) -> Self {
        let mut acc = vec![ZERO; self.n];
        let mut touched = vec![false; self.n];
        let mut cols: Vec<usize> = Vec::new();
        let mut trips = Vec::new();
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let (m, v) = (self.indices[k], self.data[k]);
                for l in other.indptr[m]..other.indptr[m + 1] {
                    let c = other.indices[l];
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += v * other.data[l];
                }
            }
            for &c in &cols {
                trips.push((r, c, acc[c]));
                acc[c] = ZERO;
                touched[c] = false;
            }
            cols.clear();
        }
        Self::from_triplets(self.n, trips)
    }

    fn to_dense(&self) -> nd::Array2<C64> {
        let mut m = nd::Array2::zeros((self.n, self.n));
        for (r, c, v) in self.triplets() {
            m[[r, c]] += v;
        }
        m
    }

    /// `out += alpha · A x`
    fn matvec_acc(&self, x: &[C64], out: &mut [C64], alpha: C64) {
        for r in 0..self.n {
            let mut s = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            out[r] += alpha * s;
        }
    }

    /// `out += alpha · A M` for a row-major dense `M`.
    fn left_mul_acc(&self, m: &[C64], out: &mut [C64], alpha: C64) {
        let n = self.n;
        for r in 0..n {
            let orow = &mut out[r * n..(r + 1) * n];
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = alpha * self.data[k];
                let mrow = &m[self.indices[k] * n..(self.indices[k] + 1) * n];
                for (o, &x) in orow.iter_mut().zip(mrow) {
                    *o += v * x;
                }
            }
        }
    }

    /// `out += alpha · M A` for a row-major dense `M`.
    fn right_mul_acc(&self, m: &[C64], out: &mut [C64], alpha: C64) {
        let n = self.n;
        for i in 0..n {
            let mrow = &m[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for r in 0..n {
                let x = mrow[r];
                if x == ZERO {
                    continue;
                }
                let x = alpha * x;
                for k in self.indptr[r]..self.indptr[r + 1] {
                    orow[self.indices[k]] += x * self.data[k];
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Sparse(Csr),
    Dense(nd::Array2<C64>),
}

/// Complex square matrix over a [`SpaceDescriptor`], stored sparse or dense.
///
/// Comparisons and products are storage-agnostic.
#[derive(Clone, Debug)]
pub struct Operator {
    space: SpaceDescriptor,
    repr: Repr,
}

impl Operator {
    pub fn from_triplets(space: SpaceDescriptor, trips: Vec<(usize, usize, C64)>) -> Self {
        Self { space, repr: Repr::Sparse(Csr::from_triplets(space.dim(), trips)) }
    }

    pub fn from_dense(space: SpaceDescriptor, m: nd::Array2<C64>) -> Result<Self> {
        if m.dim() != (space.dim(), space.dim()) {
            return invalid(format!(
                "matrix shape {:?} does not match space dimension {}",
                m.dim(),
                space.dim()
            ));
        }
        Ok(Self { space, repr: Repr::Dense(m) })
    }

    pub fn zero(space: SpaceDescriptor) -> Self {
        Self::from_triplets(space, Vec::new())
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.repr, Repr::Sparse(_))
    }

    /// Stored entries (dense operators report dim²).
    pub fn nnz(&self) -> usize {
        match &self.repr {
            Repr::Sparse(s) => s.nnz(),
            Repr::Dense(d) => d.len(),
        }
    }

    pub fn to_dense(&self) -> nd::Array2<C64> {
        match &self.repr {
            Repr::Sparse(s) => s.to_dense(),
            Repr::Dense(d) => d.clone(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match &self.repr {
            Repr::Sparse(s) => (s.indptr[row]..s.indptr[row + 1])
                .find(|&k| s.indices[k] == col)
                .map_or(ZERO, |k| s.data[k]),
            Repr::Dense(d) => d[[row, col]],
        }
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Sparse(s) => Repr::Sparse(s.adjoint()),
            Repr::Dense(d) => Repr::Dense(d.t().mapv(|z| z.conj())),
        };
        Self { space: self.space, repr }
    }

    pub fn scaled(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        let repr = match &self.repr {
            Repr::Sparse(s) => {
                let mut s = s.clone();
                s.data.iter_mut().for_each(|v| *v *= c);
                Repr::Sparse(s)
            }
            Repr::Dense(d) => Repr::Dense(d * c),
        };
        Self { space: self.space, repr }
    }

    fn combine(&self, other: &Self, a: C64, b: C64) -> Self {
        assert_eq!(self.space, other.space, "operators live on different spaces");
        let repr = match (&self.repr, &other.repr) {
            (Repr::Sparse(x), Repr::Sparse(y)) => Repr::Sparse(x.combine(y, a, b)),
            _ => Repr::Dense(self.to_dense() * a + other.to_dense() * b),
        };
        Self { space: self.space, repr }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.space, other.space, "operators live on different spaces");
        let repr = match (&self.repr, &other.repr) {
            (Repr::Sparse(x), Repr::Sparse(y)) => Repr::Sparse(x.matmul(y)),
            (Repr::Sparse(x), Repr::Dense(d)) => Repr::Dense(sparse_left(x, d)),
            (Repr::Dense(d), Repr::Sparse(y)) => Repr::Dense(sparse_right(y, d)),
            (Repr::Dense(x), Repr::Dense(y)) => Repr::Dense(x.dot(y)),
        };
        Self { space: self.space, repr }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        match &self.repr {
            Repr::Sparse(s) => s.data.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Repr::Dense(d) => d.iter().map(|v| v.norm()).fold(0.0, f64::max),
        }
    }

    /// Largest entrywise difference, independent of storage.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    /// `max |H - H†|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn apply(&self, x: &nd::Array1<C64>) -> nd::Array1<C64> {
        let mut out = nd::Array1::zeros(self.dim());
        self.apply_acc(x.view(), out.view_mut(), ONE);
        out
    }

    /// `out += alpha · self · x`
    pub fn apply_acc(&self, x: nd::ArrayView1<C64>, mut out: nd::ArrayViewMut1<C64>, alpha: C64) {
        match &self.repr {
            Repr::Sparse(s) => {
                let xs = x.as_slice().expect("contiguous vector");
                let os = out.as_slice_mut().expect("contiguous vector");
                s.matvec_acc(xs, os, alpha);
            }
            Repr::Dense(d) => out.scaled_add(alpha, &d.dot(&x)),
        }
    }

    /// `out += alpha · self · m`
    pub fn left_mul_acc(&self, m: &nd::Array2<C64>, out: &mut nd::Array2<C64>, alpha: C64) {
        match &self.repr {
            Repr::Sparse(s) => s.left_mul_acc(
                m.as_slice().expect("standard layout"),
                out.as_slice_mut().expect("standard layout"),
                alpha,
            ),
            Repr::Dense(d) => out.scaled_add(alpha, &d.dot(m)),
        }
    }

    /// `out += alpha · m · self`
    pub fn right_mul_acc(&self, m: &nd::Array2<C64>, out: &mut nd::Array2<C64>, alpha: C64) {
        match &self.repr {
            Repr::Sparse(s) => s.right_mul_acc(
                m.as_slice().expect("standard layout"),
                out.as_slice_mut().expect("standard layout"),
                alpha,
            ),
            Repr::Dense(d) => out.scaled_add(alpha, &m.dot(d)),
        }
    }

    pub fn expectation_pure(&self, psi: &nd::Array1<C64>) -> C64 {
        psi.iter().zip(self.apply(psi).iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn expectation_density(&self, rho: &nd::Array2<C64>) -> C64 {
        match &self.repr {
            Repr::Sparse(s) => s.triplets().map(|(r, c, v)| v * rho[[c, r]]).sum(),
            Repr::Dense(d) => d.iter().zip(rho.t().iter()).map(|(a, b)| a * b).sum(),
        }
    }
}

fn sparse_left(s: &Csr, d: &nd::Array2<C64>) -> nd::Array2<C64> {
    let d = d.as_standard_layout();
    let mut out = nd::Array2::zeros(d.dim());
    s.left_mul_acc(d.as_slice().unwrap(), out.as_slice_mut().unwrap(), ONE);
    out
}

fn sparse_right(s: &Csr, d: &nd::Array2<C64>) -> nd::Array2<C64> {
    let d = d.as_standard_layout();
    let mut out = nd::Array2::zeros(d.dim());
    s.right_mul_acc(d.as_slice().unwrap(), out.as_slice_mut().unwrap(), ONE);
    out
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.combine(rhs, ONE, ONE)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.combine(rhs, ONE, -ONE)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scaled(self)
    }
}

impl Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scaled(self)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scaled(-1.0)
    }
}

pub fn identity(space: SpaceDescriptor) -> Operator {
    Operator::from_triplets(space, (0..space.dim()).map(|i| (i, i, ONE)).collect())
}

/// Annihilation operator of one mode, identity on the qubit and the other mode.
pub fn mode_annihilator(space: SpaceDescriptor, mode: Mode) -> Operator {
    let mut trips = Vec::new();
    for q in 0..2 {
        for na in 0..space.cutoff_a() {
            for nb in 0..space.cutoff_b() {
                let (n, target) = match mode {
                    Mode::A if na > 0 => (na, space.index(q, na - 1, nb)),
                    Mode::B if nb > 0 => (nb, space.index(q, na, nb - 1)),
                    _ => continue,
                };
                trips.push((target, space.index(q, na, nb), C64::new((n as f64).sqrt(), 0.0)));
            }
        }
    }
    Operator::from_triplets(space, trips)
}

pub fn number_operator(space: SpaceDescriptor, mode: Mode) -> Operator {
    let trips = (0..space.dim())
        .map(|i| {
            let (_, na, nb) = space.decode(i);
            let n = if mode == Mode::A { na } else { nb };
            (i, i, C64::new(n as f64, 0.0))
        })
        .collect();
    Operator::from_triplets(space, trips)
}

/// Pauli or ladder operator on the qubit factor; `σz|±> = ±|±>`.
pub fn qubit_operator(space: SpaceDescriptor, which: QubitOp) -> Operator {
    let f = space.field_dim();
    let i = C64::i();
    // (row qubit, column qubit, value)
    let entries: &[(usize, usize, C64)] = match which {
        QubitOp::Z => &[(0, 0, C64 { re: -1.0, im: 0.0 }), (1, 1, ONE)],
        QubitOp::X => &[(0, 1, ONE), (1, 0, ONE)],
        QubitOp::Y => &[(0, 1, i), (1, 0, C64 { re: 0.0, im: -1.0 })],
        QubitOp::Raise => &[(1, 0, ONE)],
        QubitOp::Lower => &[(0, 1, ONE)],
    };
    let mut trips = Vec::with_capacity(2 * f);
    for &(qr, qc, v) in entries {
        for k in 0..f {
            trips.push((qr * f + k, qc * f + k, v));
        }
    }
    Operator::from_triplets(space, trips)
}

/// Rotated pair `A = cosθ a + sinθ b`, `B = -sinθ a + cosθ b`.
pub fn rotated_mode_operators(space: SpaceDescriptor, theta: f64) -> (Operator, Operator) {
    let a = mode_annihilator(space, Mode::A);
    let b = mode_annihilator(space, Mode::B);
    let (s, c) = theta.sin_cos();
    (&(c * &a) + &(s * &b), &(c * &b) - &(s * &a))
}

/// Reduced density matrix of the kept subsystem.
pub fn partial_trace(state: &QuantumState, keep: Subsystem) -> Result<ReducedState> {
    let sp = state.space();
    let (ca, cb) = (sp.cutoff_a(), sp.cutoff_b());
    let matrix = match state.data() {
        StateData::Pure(psi) => {
            // Arrange amplitudes as (kept, traced) and form M M†.
            let (rows, cols) = kept_dims(keep, ca, cb);
            let mut m = nd::Array2::<C64>::zeros((rows, cols));
            for (i, &amp) in psi.iter().enumerate() {
                let (q, na, nb) = sp.decode(i);
                let (r, c) = split_index(keep, q, na, nb, ca, cb);
                m[[r, c]] = amp;
            }
            m.dot(&m.t().mapv(|z| z.conj()))
        }
        StateData::Density(rho) => {
            let (rows, _) = kept_dims(keep, ca, cb);
            let mut out = nd::Array2::<C64>::zeros((rows, rows));
            let dim = sp.dim();
            for i in 0..dim {
                let (q, na, nb) = sp.decode(i);
                let (ri, ti) = split_index(keep, q, na, nb, ca, cb);
                for j in 0..dim {
                    let (q2, na2, nb2) = sp.decode(j);
                    let (rj, tj) = split_index(keep, q2, na2, nb2, ca, cb);
                    if ti == tj {
                        out[[ri, rj]] += rho[[i, j]];
                    }
                }
            }
            out
        }
    };
    Ok(ReducedState::new(keep, matrix))
}

fn kept_dims(keep: Subsystem, ca: usize, cb: usize) -> (usize, usize) {
    match keep {
        Subsystem::Qubit => (2, ca * cb),
        Subsystem::Fields => (ca * cb, 2),
        Subsystem::ModeA => (ca, 2 * cb),
        Subsystem::ModeB => (cb, 2 * ca),
    }
}

/// (kept index, traced index) of a basis state.
fn split_index(keep: Subsystem, q: usize, na: usize, nb: usize, ca: usize, cb: usize) -> (usize, usize) {
    match keep {
        Subsystem::Qubit => (q, na * cb + nb),
        Subsystem::Fields => (na * cb + nb, q),
        Subsystem::ModeA => (na, q * cb + nb),
        Subsystem::ModeB => (nb, q * ca + na),
    }
}


/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is copied to column-major order: for row-major complex input the
/// LAPACK binding hands back conjugated eigenvectors.
pub fn eigh_hermitian(m: &nd::Array2<C64>) -> Result<(nd::Array1<f64>, nd::Array2<C64>)> {
    let mut f = nd::Array2::zeros(m.raw_dim().f());
    f.assign(m);
    Ok(f.eigh(UPLO::Lower)?)
}
