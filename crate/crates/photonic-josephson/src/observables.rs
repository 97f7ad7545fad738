//! Observables, the [`TimeSeries`] record and the fits used to analyze it.
//!
//! Every engine reduces its state to a [`Snapshot`] at record times; the
//! [`Recorder`] turns snapshots into named columns.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray as nd;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::hilbert::{number_operator, partial_trace, Mode, Subsystem};
use crate::states::{QuantumState, ReducedState, StateData};

/// Total photon number below which the inversion is undefined.
pub const MIN_PHOTONS: f64 = 1e-12;

/// Scalar observables a run can record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    Na,
    Nb,
    /// Scaled photon inversion.
    Z,
    /// Linear entropy of the two-mode field.
    Pf,
    /// Linear entropy of the qubit.
    Pq,
    Rx,
    Ry,
    Rz,
    RAbs,
    Trace,
    /// Running integral of `|R|`.
    Theta,
}

impl Observable {
    pub const ALL: [Observable; 11] = [
        Observable::Na,
        Observable::Nb,
        Observable::Z,
        Observable::Pf,
        Observable::Pq,
        Observable::Rx,
        Observable::Ry,
        Observable::Rz,
        Observable::RAbs,
        Observable::Trace,
        Observable::Theta,
    ];

    /// Column set written by default.
    pub const STANDARD: [Observable; 9] = [
        Observable::Na,
        Observable::Nb,
        Observable::Z,
        Observable::Pf,
        Observable::Pq,
        Observable::Rx,
        Observable::Ry,
        Observable::Rz,
        Observable::RAbs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Na => "n_a",
            Observable::Nb => "n_b",
            Observable::Z => "Z",
            Observable::Pf => "P_f",
            Observable::Pq => "P_q",
            Observable::Rx => "Rx",
            Observable::Ry => "Ry",
            Observable::Rz => "Rz",
            Observable::RAbs => "R_abs",
            Observable::Trace => "trace",
            Observable::Theta => "Theta",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown observable '{s}'")))
    }
}

/// Everything the observables need from a state at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Snapshot {
    pub n_a: f64,
    pub n_b: f64,
    /// Qubit reduced density matrix in the `(|->, |+>)` ordering.
    pub rho_q: [[C64; 2]; 2],
    /// `Tr ρ_f²`, when the engine can provide it.
    pub field_purity: Option<f64>,
    pub trace: f64,
    /// Population on the last Fock level of either mode.
    pub edge_population: f64,
}

impl Snapshot {
    pub fn inversion(&self) -> f64 {
        let tot = self.n_a + self.n_b;
        if tot.abs() < MIN_PHOTONS {
            f64::NAN
        } else {
            (self.n_a - self.n_b) / tot
        }
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector::from_qubit(&self.rho_q)
    }

    /// Value of an instantaneous observable; `Theta` is produced by the recorder.
    pub fn value(&self, obs: Observable) -> f64 {
        let r = self.bloch();
        match obs {
            Observable::Na => self.n_a,
            Observable::Nb => self.n_b,
            Observable::Z => self.inversion(),
            Observable::Pf => self.field_purity.map_or(f64::NAN, |p| 1.0 - p),
            Observable::Pq => {
                let q = &self.rho_q;
                1.0 - (q[0][0].norm_sqr() + q[1][1].norm_sqr() + 2.0 * q[0][1].norm_sqr())
            }
            Observable::Rx => r.x,
            Observable::Ry => r.y,
            Observable::Rz => r.z,
            Observable::RAbs | Observable::Theta => r.length,
            Observable::Trace => self.trace,
        }
    }
}

/// Bloch vector `(<σx>, <σy>, <σz>)` and its length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub length: f64,
}

impl BlochVector {
    pub fn from_qubit(q: &[[C64; 2]; 2]) -> Self {
        let (x, y, z) = (2.0 * q[0][1].re, 2.0 * q[0][1].im, q[1][1].re - q[0][0].re);
        Self { x, y, z, length: (x * x + y * y + z * z).sqrt() }
    }
}

/// Run-level numerical health report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunDiagnostics {
    pub engine: String,
    pub steps: usize,
    pub measurements: usize,
    pub max_trace_drift: f64,
    /// Largest `max|ρ - ρ†|` removed by symmetrization.
    pub max_hermiticity_drift: f64,
    pub max_edge_population: f64,
}

impl RunDiagnostics {
    pub fn new(engine: &str) -> Self {
        Self { engine: engine.to_string(), ..Default::default() }
    }

    pub fn track(&mut self, snap: &Snapshot) {
        self.max_trace_drift = self.max_trace_drift.max((snap.trace - 1.0).abs());
        self.max_edge_population = self.max_edge_population.max(snap.edge_population);
    }
}

/// Time grid plus named observable columns.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
    pub diagnostics: RunDiagnostics,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("time grid must be strictly increasing");
        }
        Ok(Self { times, columns: Vec::new(), diagnostics: RunDiagnostics::default() })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.times.len() {
            return invalid(format!(
                "column '{name}' has {} values for {} times",
                values.len(),
                self.times.len()
            ));
        }
        match self.columns.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = values,
            None => self.columns.push((name.to_string(), values)),
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::InvalidArgument(format!("column '{name}' not recorded")))
    }

    pub fn get(&self, obs: Observable) -> Result<&[f64]> {
        self.column(obs.name())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    /// Records with `lo <= t <= hi` as `(times, values)`.
    pub fn window(&self, name: &str, lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let col = self.column(name)?;
        Ok(self.times.iter().zip(col).filter(|(t, _)| **t >= lo && **t <= hi).map(|(t, v)| (*t, *v)).unzip())
    }

    /// CSV with a `t` column first; numbers in `{:.17e}` form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = std::iter::once("t").chain(self.names()).collect();
        w.write_record(&header).map_err(csv_err)?;
        for (i, t) in self.times.iter().enumerate() {
            let row: Vec<String> = std::iter::once(*t)
                .chain(self.columns.iter().map(|(_, v)| v[i]))
                .map(|x| format!("{x:.17e}"))
                .collect();
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

/// Receives one snapshot per record time.
///
/// Full-space engines also pass the state itself; reduced engines pass `None`.
pub trait Observer {
    fn observe(&mut self, t: f64, snap: &Snapshot, state: Option<&QuantumState>);
}

/// Two observers fed from one run.
impl<A: Observer, B: Observer> Observer for (A, B) {
    fn observe(&mut self, t: f64, snap: &Snapshot, state: Option<&QuantumState>) {
        self.0.observe(t, snap, state);
        self.1.observe(t, snap, state);
    }
}

/// Observer that accumulates the requested columns.
#[derive(Clone, Debug)]
pub struct Recorder {
    observables: Vec<Observable>,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
    pub diagnostics: RunDiagnostics,
}

impl Recorder {
    pub fn new(observables: &[Observable], engine: &str) -> Self {
        Self {
            observables: observables.to_vec(),
            times: Vec::new(),
            rows: Vec::new(),
            diagnostics: RunDiagnostics::new(engine),
        }
    }

    /// Folds engine-side counters into the recorded diagnostics.
    pub fn absorb(&mut self, run: &RunDiagnostics) {
        let d = &mut self.diagnostics;
        d.engine = run.engine.clone();
        d.steps = run.steps;
        d.measurements = run.measurements;
        d.max_trace_drift = d.max_trace_drift.max(run.max_trace_drift);
        d.max_hermiticity_drift = d.max_hermiticity_drift.max(run.max_hermiticity_drift);
        d.max_edge_population = d.max_edge_population.max(run.max_edge_population);
    }

    pub fn finish(self) -> Result<TimeSeries> {
        let mut ts = TimeSeries::new(self.times)?;
        for (k, obs) in self.observables.iter().enumerate() {
            let mut col: Vec<f64> = self.rows.iter().map(|r| r[k]).collect();
            if *obs == Observable::Theta {
                col = cumulative_trapezoid(&ts.times, &col);
            }
            ts.push_column(obs.name(), col)?;
        }
        ts.diagnostics = self.diagnostics;
        Ok(ts)
    }
}

impl Observer for Recorder {
    fn observe(&mut self, t: f64, snap: &Snapshot, _state: Option<&QuantumState>) {
        self.diagnostics.track(snap);
        self.times.push(t);
        self.rows.push(self.observables.iter().map(|&o| snap.value(o)).collect());
    }
}

/// Observer keeping every full-space state it is shown.
#[derive(Clone, Debug, Default)]
pub struct StateSampler {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
}

impl Observer for StateSampler {
    fn observe(&mut self, t: f64, _snap: &Snapshot, state: Option<&QuantumState>) {
        if let Some(s) = state {
            self.times.push(t);
            self.states.push(s.clone());
        }
    }
}

/// Snapshot of a state on the full composite space.
pub fn snapshot(state: &QuantumState) -> Snapshot {
    let sp = state.space();
    let f = sp.field_dim();
    let (ca, cb) = (sp.cutoff_a(), sp.cutoff_b());
    let pop = |i: usize| -> f64 {
        match state.data() {
            StateData::Pure(psi) => psi[i].norm_sqr(),
            StateData::Density(rho) => rho[[i, i]].re,
        }
    };
    let (mut n_a, mut n_b, mut trace, mut edge) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..sp.dim() {
        let (_, na, nb) = sp.decode(i);
        let p = pop(i);
        n_a += na as f64 * p;
        n_b += nb as f64 * p;
        trace += p;
        if (ca > 1 && na == ca - 1) || (cb > 1 && nb == cb - 1) {
            edge += p;
        }
    }
    let mut rho_q = [[C64::new(0.0, 0.0); 2]; 2];
    let field_purity;
    match state.data() {
        StateData::Pure(psi) => {
            for q in 0..2 {
                for r in 0..2 {
                    rho_q[q][r] = (0..f).map(|k| psi[q * f + k] * psi[r * f + k].conj()).sum();
                }
            }
            // Schmidt: both halves of a pure state share their spectrum.
            field_purity = Some(qubit_purity(&rho_q));
        }
        StateData::Density(rho) => {
            for q in 0..2 {
                for r in 0..2 {
                    rho_q[q][r] = (0..f).map(|k| rho[[q * f + k, r * f + k]]).sum();
                }
            }
            let mut s = 0.0;
            for i in 0..f {
                for j in 0..f {
                    s += (rho[[i, j]] + rho[[f + i, f + j]]).norm_sqr();
                }
            }
            field_purity = Some(s);
        }
    }
    Snapshot { n_a, n_b, rho_q, field_purity, trace, edge_population: edge }
}

pub(crate) fn qubit_purity(q: &[[C64; 2]; 2]) -> f64 {
    q[0][0].norm_sqr() + q[1][1].norm_sqr() + q[0][1].norm_sqr() + q[1][0].norm_sqr()
}

/// `Z = (<n_a> - <n_b>)/(<n_a> + <n_b>)`.
pub fn photon_inversion(state: &QuantumState) -> Result<f64> {
    let sp = state.space();
    let na = state.expectation(&number_operator(sp, Mode::A))?.re;
    let nb = state.expectation(&number_operator(sp, Mode::B))?.re;
    if (na + nb).abs() < MIN_PHOTONS {
        return Err(Error::UndefinedObservable(format!(
            "photon inversion needs a nonzero photon number (got {:.3e})",
            na + nb
        )));
    }
    Ok((na - nb) / (na + nb))
}

/// `1 - Tr ρ_sub²` of the qubit or the two-mode field.
pub fn linear_entropy(state: &QuantumState, subsystem: Subsystem) -> Result<f64> {
    Ok(partial_trace(state, subsystem)?.linear_entropy())
}

pub fn bloch_vector(state: &QuantumState) -> Result<BlochVector> {
    let q = partial_trace(state, Subsystem::Qubit)?.matrix;
    Ok(BlochVector::from_qubit(&[[q[[0, 0]], q[[0, 1]]], [q[[1, 0]], q[[1, 1]]]]))
}

/// `Θ(t) = ∫₀ᵗ |R| dt'` on the record grid.
pub fn integrated_bloch_length(series: &TimeSeries) -> Result<Vec<f64>> {
    let r = series.get(Observable::RAbs)?;
    Ok(cumulative_trapezoid(&series.times, r))
}

pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for i in 0..y.len() {
        if i > 0 {
            acc += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Uniform-sample mean of the reduced states of `keep`.
pub fn time_averaged_density(samples: &[QuantumState], keep: Subsystem) -> Result<ReducedState> {
    if samples.len() < 2 {
        return invalid(format!("time averaging needs at least 2 samples (got {})", samples.len()));
    }
    let mut acc: Option<nd::Array2<C64>> = None;
    for s in samples {
        let r = partial_trace(s, keep)?.matrix;
        acc = Some(match acc {
            None => r,
            Some(a) if a.dim() == r.dim() => a + r,
            Some(_) => return invalid("samples live on different spaces"),
        });
    }
    let mut m = acc.expect("non-empty") / C64::new(samples.len() as f64, 0.0);
    // The mean of Hermitian samples is Hermitian up to roundoff.
    let mt = m.t().mapv(|z| z.conj());
    m = (&m + &mt) * C64::new(0.5, 0.0);
    Ok(ReducedState::new(keep, m))
}

/// Frobenius norm of the off-diagonal part in the Fock basis.
pub fn offdiagonal_norm(rho: &nd::Array2<C64>) -> f64 {
    rho.indexed_iter().filter(|((i, j), _)| i != j).map(|(_, z)| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `½ Σ |λ_k(ρ - σ)|`.
pub fn trace_distance(rho: &nd::Array2<C64>, sigma: &nd::Array2<C64>) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return invalid("trace distance needs matrices of equal shape");
    }
    let (ev, _) = (rho - sigma).eigh(UPLO::Lower)?;
    Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
}

/// Sliding maximum of `|value|` over a centered time window.
///
/// NaN entries are ignored; a window containing only NaN yields NaN.
pub fn envelope(times: &[f64], values: &[f64], window: f64) -> Result<Vec<f64>> {
    if times.len() != values.len() {
        return invalid("times and values differ in length");
    }
    if times.len() < 3 {
        return invalid("envelope needs at least 3 records");
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if window < 2.0 * dt {
        return invalid(format!("window {window} spans fewer than 3 records (spacing {dt})"));
    }
    let half = window / 2.0;
    let n = times.len();
    let mut out = Vec::with_capacity(n);
    // Monotone deque of indices with decreasing |value|.
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut hi = 0;
    for i in 0..n {
        while hi < n && times[hi] <= times[i] + half {
            let v = values[hi].abs();
            if !v.is_nan() {
                while dq.back().is_some_and(|&j| values[j].abs() <= v) {
                    dq.pop_back();
                }
                dq.push_back(hi);
            }
            hi += 1;
        }
        while dq.front().is_some_and(|&j| times[j] < times[i] - half) {
            dq.pop_front();
        }
        out.push(dq.front().map_or(f64::NAN, |&j| values[j].abs()));
    }
    Ok(out)
}

/// Largest `|value|` in consecutive windows of width `width`, as `(time, peak)`.
pub fn windowed_peaks(times: &[f64], values: &[f64], width: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < times.len() {
        let end_t = times[start] + width;
        let mut best: Option<(f64, f64)> = None;
        let mut i = start;
        while i < times.len() && times[i] < end_t {
            let v = values[i].abs();
            if !v.is_nan() && best.is_none_or(|(_, b)| v > b) {
                best = Some((times[i], v));
            }
            i += 1;
        }
        if i == times.len() && times[times.len() - 1] - times[start] < 0.5 * width {
            break;
        }
        if let Some(b) = best {
            out.push(b);
        }
        start = i.max(start + 1);
    }
    out
}

/// Least-squares line `y = slope·x + intercept` with its `R²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("linear fit needs at least two paired points");
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("linear fit needs distinct abscissae");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit { slope, intercept, r_squared })
}

/// Fit of `ln y` against `t`; non-positive samples are rejected.
pub fn log_linear_fit(t: &[f64], y: &[f64]) -> Result<LinearFit> {
    if y.iter().any(|v| !(*v > 0.0)) {
        return invalid("log-linear fit needs strictly positive values");
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(t, &ly)
}

/// Exponent `p` of `y ≈ c·tᵖ` from a log-log fit.
pub fn power_law_exponent(t: &[f64], y: &[f64]) -> Result<f64> {
    if t.iter().chain(y).any(|v| !(*v > 0.0)) {
        return invalid("power-law fit needs strictly positive samples");
    }
    let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lt, &ly)?.slope)
}

/// RMS residual of the one-parameter fit `y ≈ c·tᵖ` through the origin.
pub fn monomial_fit_rms(t: &[f64], y: &[f64], p: i32) -> Result<f64> {
    if t.len() != y.len() || t.is_empty() {
        return invalid("monomial fit needs paired samples");
    }
    let num: f64 = t.iter().zip(y).map(|(a, b)| b * a.powi(p)).sum();
    let den: f64 = t.iter().map(|a| a.powi(2 * p)).sum();
    if den == 0.0 {
        return invalid("monomial fit needs a nonzero abscissa");
    }
    let c = num / den;
    let sse: f64 = t.iter().zip(y).map(|(a, b)| (b - c * a.powi(p)).powi(2)).sum();
    Ok((sse / t.len() as f64).sqrt())
}

/// Root-mean-square of the pointwise difference.
pub fn rms_difference(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (s / a.len().max(1) as f64).sqrt()
}

pub fn sup_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).filter(|d| !d.is_nan()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::build_space;
    use crate::states::{assemble_product, coherent_mode_state, qubit_state, thermal_mode_state, LocalState, QubitSpec};
    use proptest::prelude::*;

    fn coherent_a(alpha: f64, q: QubitSpec) -> QuantumState {
        let sp = build_space(20, 4).unwrap();
        assemble_product(
            &qubit_state(q),
            &coherent_mode_state(C64::new(alpha, 0.0), 20).unwrap().into(),
            &coherent_mode_state(C64::new(0.0, 0.0), 4).unwrap().into(),
            sp,
        )
        .unwrap()
    }

    #[test]
    fn inversion_examples() {
        assert!((photon_inversion(&coherent_a(2.0, QubitSpec::Plus)).unwrap() - 1.0).abs() < 1e-14);
        let vac = coherent_a(0.0, QubitSpec::Plus);
        assert!(matches!(photon_inversion(&vac), Err(Error::UndefinedObservable(_))));
        let sp = build_space(3, 3).unwrap();
        let mut psi = nd::Array1::zeros(sp.dim());
        psi[sp.index(0, 1, 0)] = C64::new(0.6, 0.0);
        psi[sp.index(1, 0, 1)] = C64::new(0.0, 0.8);
        let st = QuantumState::pure(sp, psi).unwrap();
        let z = photon_inversion(&st).unwrap();
        assert!((z - (0.36 - 0.64)).abs() < 1e-14);
        let snap = snapshot(&st);
        assert!((snap.inversion() - z).abs() < 1e-14);
    }

    #[test]
    fn entropy_and_bloch_examples() {
        let st = coherent_a(1.5, QubitSpec::PlusSuperposition);
        assert!(linear_entropy(&st, Subsystem::Qubit).unwrap().abs() < 1e-14);
        let r = bloch_vector(&st).unwrap();
        assert!((r.x - 1.0).abs() < 1e-14 && r.y.abs() < 1e-14 && r.z.abs() < 1e-14);
        let mixed = coherent_a(1.5, QubitSpec::MaximallyMixed);
        assert!(bloch_vector(&mixed).unwrap().length < 1e-15);
        assert!((linear_entropy(&mixed, Subsystem::Qubit).unwrap() - 0.5).abs() < 1e-14);
        let s = snapshot(&mixed);
        assert!((s.value(Observable::Pq) - 0.5).abs() < 1e-14);
        assert!(s.value(Observable::Pf).abs() < 1e-12);
    }

    #[test]
    fn snapshot_matches_reductions() {
        let sp = build_space(4, 6).unwrap();
        let st = assemble_product(
            &qubit_state(QubitSpec::Bloch { theta: 0.4, phi: 2.0 }),
            &thermal_mode_state(0.02, 4).unwrap().into(),
            &coherent_mode_state(C64::new(0.2, 0.1), 6).unwrap().into(),
            sp,
        )
        .unwrap();
        let s = snapshot(&st);
        let pf = linear_entropy(&st, Subsystem::Fields).unwrap();
        assert!((s.value(Observable::Pf) - pf).abs() < 1e-12);
        let r = bloch_vector(&st).unwrap();
        assert!((s.value(Observable::Ry) - r.y).abs() < 1e-14);
        assert!((r.y - 0.4f64.sin() * 2.0f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_of_constant() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let th = cumulative_trapezoid(&t, &vec![1.0; 11]);
        for (a, b) in t.iter().zip(&th) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn envelope_examples() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 0.1).collect();
        let c = envelope(&t, &vec![0.3; 2000], 1.0).unwrap();
        assert!(c.iter().all(|v| *v == 0.3));
        let u = 0.02;
        let period = std::f64::consts::PI / u;
        let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.1).collect();
        let z: Vec<f64> = t.iter().map(|x| (2.0 * u * x).cos()).collect();
        let e = envelope(&t, &z, period).unwrap();
        assert!(e.iter().all(|v| *v > 0.99));
        assert!(envelope(&t, &z, 0.1).is_err());
    }

    #[test]
    fn offdiagonal_examples() {
        let th = thermal_mode_state(0.7, 30).unwrap();
        assert_eq!(offdiagonal_norm(&th), 0.0);
        let c = coherent_mode_state(C64::new(1.0, 0.0), 30).unwrap();
        let rho = nd::Array2::from_shape_fn((30, 30), |(i, j)| c[i] * c[j].conj());
        let mut brute = 0.0;
        for n in 0..30 {
            for m in 0..30 {
                if n != m {
                    brute += (c[n].norm() * c[m].norm()).powi(2);
                }
            }
        }
        assert!((offdiagonal_norm(&rho) - brute.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn time_average_examples() {
        let st = coherent_a(1.0, QubitSpec::Plus).into_density();
        let avg = time_averaged_density(&[st.clone(), st.clone(), st.clone()], Subsystem::ModeA).unwrap();
        let direct = partial_trace(&st, Subsystem::ModeA).unwrap();
        assert!((&avg.matrix - &direct.matrix).iter().all(|z| z.norm() < 1e-15));
        assert!(time_averaged_density(&[], Subsystem::ModeA).is_err());
    }

    #[test]
    fn fits() {
        let t: Vec<f64> = (1..50).map(|i| i as f64).collect();
        let y: Vec<f64> = t.iter().map(|x| 2.0 * (-0.03 * x).exp()).collect();
        let f = log_linear_fit(&t, &y).unwrap();
        assert!((f.slope + 0.03).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        let y2: Vec<f64> = t.iter().map(|x| 0.5 * x * x).collect();
        assert!((power_law_exponent(&t, &y2).unwrap() - 2.0).abs() < 1e-12);
        assert!(monomial_fit_rms(&t, &y2, 2).unwrap() < 1e-10);
        assert!(monomial_fit_rms(&t, &y2, 1).unwrap() > 1.0);
    }

    #[test]
    fn csv_round_trip_format() {
        let mut ts = TimeSeries::new(vec![0.0, 0.5]).unwrap();
        ts.push_column("Z", vec![1.0, f64::NAN]).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "t,Z");
        assert_eq!(lines[1], "0.00000000000000000e0,1.00000000000000000e0");
        assert!(lines[2].ends_with("NaN"));
        assert!(TimeSeries::new(vec![0.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn qubit_identities(re in -0.5f64..0.5, im in -0.5f64..0.5, p in 0.0f64..1.0) {
            let off = C64::new(re, im);
            prop_assume!(off.norm_sqr() <= p * (1.0 - p));
            let q = [[C64::new(1.0 - p, 0.0), off], [off.conj(), C64::new(p, 0.0)]];
            let snap = Snapshot { n_a: 1.0, n_b: 0.0, rho_q: q, field_purity: None, trace: 1.0, edge_population: 0.0 };
            let r = snap.value(Observable::RAbs);
            let pq = snap.value(Observable::Pq);
            prop_assert!(r <= 1.0 + 1e-10);
            prop_assert!(pq <= 0.5 + 1e-10);
            prop_assert!((pq - (1.0 - r * r) / 2.0).abs() <= 1e-10);
        }

        #[test]
        fn inversion_scale_invariant(na in 0.01f64..50.0, nb in 0.01f64..50.0, c in 0.1f64..10.0) {
            let base = Snapshot { n_a: na, n_b: nb, rho_q: [[C64::new(0.0, 0.0); 2]; 2], field_purity: None, trace: 1.0, edge_population: 0.0 };
            let scaled = Snapshot { n_a: c * na, n_b: c * nb, ..base };
            prop_assert!((base.inversion() - scaled.inversion()).abs() <= 1e-12);
        }

        #[test]
        fn averaging_commutes_with_reduction(w in 0.05f64..0.95, theta in 0.0f64..3.0) {
            let sp = build_space(3, 2).unwrap();
            let vac: LocalState = nd::arr1(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).into();
            let a1: LocalState = thermal_mode_state(0.01, 3).unwrap().into();
            let a2: LocalState = nd::arr1(&[C64::new(w.sqrt(), 0.0), C64::new((1.0 - w).sqrt(), 0.0), C64::new(0.0, 0.0)]).into();
            let s1 = assemble_product(&qubit_state(QubitSpec::Bloch { theta, phi: 0.3 }), &a1, &vac, sp).unwrap();
            let s2 = assemble_product(&qubit_state(QubitSpec::PlusSuperposition), &a2, &vac, sp).unwrap();
            for keep in [Subsystem::Qubit, Subsystem::ModeA, Subsystem::Fields] {
                let avg = time_averaged_density(&[s1.clone(), s2.clone()], keep).unwrap();
                let full = (s1.to_density_matrix() + s2.to_density_matrix()) * C64::new(0.5, 0.0);
                let direct = partial_trace(&QuantumState::density(sp, full).unwrap(), keep).unwrap();
                let d = (&avg.matrix - &direct.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
                prop_assert!(d <= 1e-12);
            }
        }
    }
}
