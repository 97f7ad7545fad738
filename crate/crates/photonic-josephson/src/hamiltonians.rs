//! Hamiltonians of the driven bimodal cavity.
//!
//! The driven models live in the frame rotating at the pump frequency, so
//! only detunings enter: `δ = ω_c - ω_p` for the modes and `Δ = Ω - ω_p` for
//! the qubit. The Rabi model is built in the laboratory frame.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hilbert::{
    identity, mode_annihilator, number_operator, qubit_operator, rotated_mode_operators, Mode, Operator,
    QubitOp, SpaceDescriptor,
};

/// Frequencies and couplings in units of the bare coupling `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub g_a: f64,
    pub g_b: f64,
    /// Cavity frequency `ω_c`.
    pub omega_c: f64,
    /// Qubit splitting `Ω`.
    pub omega_q: f64,
    /// Pump frequency `ω_p`.
    pub omega_p: f64,
    /// Pump amplitude `η`.
    pub eta: f64,
    /// Extra frequency of mode b relative to mode a; zero for degenerate modes.
    pub mode_b_offset: f64,
}

impl SystemParams {
    /// Rotating-frame parameters with `ω_p = 0`, so `δ = ω_c` and `Δ = Ω`.
    pub fn rotating(g_a: f64, g_b: f64, delta: f64, big_delta: f64, eta: f64) -> Self {
        Self { g_a, g_b, omega_c: delta, omega_q: big_delta, omega_p: 0.0, eta, mode_b_offset: 0.0 }
    }

    /// Laboratory-frame parameters of the unpumped Rabi model.
    pub fn laboratory(g_a: f64, g_b: f64, omega_c: f64, omega_q: f64) -> Self {
        Self { g_a, g_b, omega_c, omega_q, omega_p: 0.0, eta: 0.0, mode_b_offset: 0.0 }
    }

    /// `δ = ω_c - ω_p`.
    pub fn delta(&self) -> f64 {
        self.omega_c - self.omega_p
    }

    /// `Δ = Ω - ω_p`.
    pub fn big_delta(&self) -> f64 {
        self.omega_q - self.omega_p
    }

    /// Bright-mode coupling `√(g_a² + g_b²)`.
    pub fn g(&self) -> f64 {
        self.g_a.hypot(self.g_b)
    }

    /// Mixing angle of the bright mode, `cosθ = g_a/g`.
    pub fn theta(&self) -> f64 {
        self.g_b.atan2(self.g_a)
    }

    /// Dispersive mode-mode coupling `U = (g_a² + g_b²)/(2Δ)`.
    ///
    /// For equal couplings this is `g_a²/Δ`: the bright mode couples with
    /// strength `√2·g_a` and its dispersive shift `2U` is split evenly over
    /// `N` and the tunnelling term.
    pub fn u(&self) -> Result<f64> {
        let d = self.big_delta();
        if d == 0.0 {
            return invalid("dispersive coupling U is undefined at zero qubit detuning");
        }
        Ok((self.g_a * self.g_a + self.g_b * self.g_b) / (2.0 * d))
    }

    fn check(&self) -> Result<()> {
        let vals = [self.g_a, self.g_b, self.omega_c, self.omega_q, self.omega_p, self.eta, self.mode_b_offset];
        if vals.iter().any(|v| !v.is_finite()) {
            return invalid("system parameters must be finite");
        }
        Ok(())
    }
}

fn pump(space: SpaceDescriptor, eta: f64) -> Operator {
    // -iη(a - a†) - iη(b - b†) = iη Σ (a† - a)
    let mut out = Operator::zero(space);
    for mode in [Mode::A, Mode::B] {
        let a = mode_annihilator(space, mode);
        out = &out + &(&a.adjoint() - &a).scaled(num_complex::Complex64::new(0.0, eta));
    }
    out
}

fn mode_energies(space: SpaceDescriptor, w: f64, offset: f64) -> Operator {
    &number_operator(space, Mode::A).scaled(w) + &number_operator(space, Mode::B).scaled(w + offset)
}

/// Rotating-frame JC model with two modes and a coherent pump on both.
pub fn h_rwa(space: SpaceDescriptor, p: &SystemParams) -> Result<Operator> {
    p.check()?;
    let sz = qubit_operator(space, QubitOp::Z);
    let sp = qubit_operator(space, QubitOp::Raise);
    let sm = qubit_operator(space, QubitOp::Lower);
    let mut h = &mode_energies(space, p.delta(), p.mode_b_offset) + &sz.scaled(p.big_delta() / 2.0);
    for (g, mode) in [(p.g_a, Mode::A), (p.g_b, Mode::B)] {
        let a = mode_annihilator(space, mode);
        let jc = &(&a.adjoint() * &sm) + &(&sp * &a);
        h = &h + &jc.scaled(g);
    }
    if p.eta != 0.0 {
        h = &h + &pump(space, p.eta);
    }
    Ok(h)
}

/// Two-mode Rabi model in the laboratory frame.
pub fn h_nonrwa(space: SpaceDescriptor, p: &SystemParams) -> Result<Operator> {
    p.check()?;
    if p.eta != 0.0 {
        return invalid("the Rabi model is built without a pump; set eta = 0");
    }
    let sz = qubit_operator(space, QubitOp::Z);
    let sx = qubit_operator(space, QubitOp::X);
    let mut field = Operator::zero(space);
    for (g, mode) in [(p.g_a, Mode::A), (p.g_b, Mode::B)] {
        let a = mode_annihilator(space, mode);
        field = &field + &(&a + &a.adjoint()).scaled(g);
    }
    Ok(&(&mode_energies(space, p.omega_c, p.mode_b_offset) + &sz.scaled(p.omega_q / 2.0)) + &(&field * &sx))
}

/// Linearized dispersive model `(δ + Uσz)N + U(a†b + b†a)σz`.
pub fn h_linear_dispersive(space: SpaceDescriptor, p: &SystemParams) -> Result<Operator> {
    p.check()?;
    let u = p.u()?;
    let sz = qubit_operator(space, QubitOp::Z);
    let a = mode_annihilator(space, Mode::A);
    let b = mode_annihilator(space, Mode::B);
    let n = &number_operator(space, Mode::A) + &number_operator(space, Mode::B);
    let hop = &(&a.adjoint() * &b) + &(&b.adjoint() * &a);
    let free = mode_energies(space, p.delta(), p.mode_b_offset);
    Ok(&free + &(&(&n + &hop) * &sz).scaled(u))
}

/// Adiabatically eliminated model in the rotated modes, kept to `(Â†Â)²`.
pub fn h_dispersive_quadratic(space: SpaceDescriptor, p: &SystemParams) -> Result<Operator> {
    p.check()?;
    let u = p.u()?;
    if p.mode_b_offset != 0.0 {
        return invalid("the quadratic dispersive model assumes degenerate modes");
    }
    let (big_a, big_b) = rotated_mode_operators(space, p.theta());
    let sz = qubit_operator(space, QubitOp::Z);
    let na = &big_a.adjoint() * &big_a;
    let nb = &big_b.adjoint() * &big_b;
    let shift = &(&identity(space).scaled(2.0 * u) - &na.scaled(4.0 * u * u / p.big_delta())) * &na;
    Ok(&(&na + &nb).scaled(p.delta()) + &(&shift * &sz))
}

/// Hamiltonian families selectable from scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianKind {
    Rwa,
    Nonrwa,
    Linear,
    Quadratic,
}

impl HamiltonianKind {
    pub fn build(self, space: SpaceDescriptor, p: &SystemParams) -> Result<Operator> {
        match self {
            HamiltonianKind::Rwa => h_rwa(space, p),
            HamiltonianKind::Nonrwa => h_nonrwa(space, p),
            HamiltonianKind::Linear => h_linear_dispersive(space, p),
            HamiltonianKind::Quadratic => h_dispersive_quadratic(space, p),
        }
    }

    /// True when the model commutes with the excitation number at `η = 0`.
    pub fn conserves_excitations(self) -> bool {
        !matches!(self, HamiltonianKind::Nonrwa)
    }

    pub fn name(self) -> &'static str {
        match self {
            HamiltonianKind::Rwa => "rwa",
            HamiltonianKind::Nonrwa => "nonrwa",
            HamiltonianKind::Linear => "linear",
            HamiltonianKind::Quadratic => "quadratic",
        }
    }
}

impl std::str::FromStr for HamiltonianKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rwa" => Ok(HamiltonianKind::Rwa),
            "nonrwa" => Ok(HamiltonianKind::Nonrwa),
            "linear" => Ok(HamiltonianKind::Linear),
            "quadratic" => Ok(HamiltonianKind::Quadratic),
            _ => invalid(format!("unknown hamiltonian '{s}' (expected rwa, nonrwa, linear or quadratic)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::build_space;
    use ndarray_linalg::{Eigh, UPLO};
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;

    fn fig1() -> SystemParams {
        SystemParams::rotating(1.0, 1.0, 1.0, 50.0, 0.1)
    }

    #[test]
    fn decoupled_limit_is_diagonal() {
        let sp = build_space(4, 3).unwrap();
        let p = SystemParams::rotating(0.0, 0.0, 1.3, 7.0, 0.0);
        let h = h_rwa(sp, &p).unwrap().to_dense();
        for i in 0..sp.dim() {
            let (q, na, nb) = sp.decode(i);
            let want = 1.3 * (na + nb) as f64 + if q == 1 { 3.5 } else { -3.5 };
            assert!((h[[i, i]].re - want).abs() < 1e-14);
            for j in 0..sp.dim() {
                if i != j {
                    assert_eq!(h[[i, j]], C64::new(0.0, 0.0));
                }
            }
        }
        let lab = h_nonrwa(sp, &SystemParams::laboratory(0.0, 0.0, 1.3, 7.0)).unwrap();
        assert_eq!(lab.max_abs_diff(&h_rwa(sp, &p).unwrap()), 0.0);
    }

    #[test]
    fn matrix_elements() {
        let sp = build_space(4, 4).unwrap();
        let p = SystemParams { g_a: 0.7, ..fig1() };
        let h = h_rwa(sp, &p).unwrap();
        assert_eq!(h.get(sp.index(1, 0, 0), sp.index(0, 1, 0)), C64::new(0.7, 0.0));
        let lab = h_nonrwa(sp, &SystemParams::laboratory(0.7, 1.0, 54.3, 150.0)).unwrap();
        assert_eq!(lab.get(sp.index(1, 1, 0), sp.index(0, 0, 0)), C64::new(0.7, 0.0));
        assert_eq!(h.get(sp.index(1, 1, 0), sp.index(0, 0, 0)), C64::new(0.0, 0.0));
        let lin = h_linear_dispersive(sp, &fig1()).unwrap();
        assert!((lin.get(sp.index(1, 1, 0), sp.index(1, 0, 1)).re - 0.02).abs() < 1e-15);
        assert!(h_nonrwa(sp, &fig1()).is_err());
    }

    #[test]
    fn dispersive_coupling_and_josephson_time() {
        let u = fig1().u().unwrap();
        assert!((u - 0.02).abs() < 1e-15);
        assert!((std::f64::consts::PI / (2.0 * u) - 78.54).abs() < 1e-2);
        let zero = SystemParams::rotating(1.0, 1.0, 1.0, 0.0, 0.0);
        assert!(zero.u().is_err());
        let sp = build_space(2, 2).unwrap();
        assert!(h_linear_dispersive(sp, &zero).is_err());
        assert!(h_dispersive_quadratic(sp, &zero).is_err());
    }

    #[test]
    fn hermiticity() {
        let sp = build_space(6, 5).unwrap();
        let p = SystemParams { g_a: 0.8, g_b: 1.1, ..fig1() };
        for kind in [HamiltonianKind::Rwa, HamiltonianKind::Linear, HamiltonianKind::Quadratic] {
            assert!(kind.build(sp, &p).unwrap().hermiticity_error() <= 1e-12);
        }
        let lab = SystemParams::laboratory(1.0, 0.6, 54.3, 150.0);
        assert!(h_nonrwa(sp, &lab).unwrap().hermiticity_error() <= 1e-12);
    }

    #[test]
    fn linear_model_conserves_photon_number() {
        let sp = build_space(6, 6).unwrap();
        let h = h_linear_dispersive(sp, &fig1()).unwrap();
        let n = &number_operator(sp, Mode::A) + &number_operator(sp, Mode::B);
        assert_eq!(h.commutator(&n).max_abs(), 0.0);
    }

    #[test]
    fn quadratic_commutes_with_bright_number() {
        let sp = build_space(5, 5).unwrap();
        let p = SystemParams { g_a: 1.0, g_b: 0.5, ..fig1() };
        let h = h_dispersive_quadratic(sp, &p).unwrap();
        let (a, _) = rotated_mode_operators(sp, p.theta());
        assert!(h.commutator(&(&a.adjoint() * &a)).max_abs() < 1e-12);
    }

    #[test]
    fn quadratic_correction_scales_as_u_squared_over_delta() {
        // On N ≤ 4 the two models differ by the (Â†Â)² term alone.
        let sp = build_space(8, 8).unwrap();
        let diff_on_low_n = |big_delta: f64| {
            let p = SystemParams::rotating(1.0, 1.0, 1.0, big_delta, 0.0);
            let d = (&h_dispersive_quadratic(sp, &p).unwrap() - &h_linear_dispersive(sp, &p).unwrap()).to_dense();
            let mut m: f64 = 0.0;
            for i in 0..sp.dim() {
                for j in 0..sp.dim() {
                    let (_, a, b) = sp.decode(i);
                    let (_, a2, b2) = sp.decode(j);
                    if a + b <= 4 && a2 + b2 <= 4 {
                        m = m.max(d[[i, j]].norm());
                    }
                }
            }
            let u = p.u().unwrap();
            m / (u * u / big_delta)
        };
        let (r50, r500) = (diff_on_low_n(50.0), diff_on_low_n(500.0));
        // The normalized difference is 4(Â†Â)²σz at both detunings, bounded by 4·4².
        assert!((r50 - r500).abs() < 1e-6 * r50, "{r50} vs {r500}");
        assert!(r50 > 1.0 && r50 <= 64.0 + 1e-9);
    }

    #[test]
    fn nonrwa_equals_rwa_plus_counter_rotating_terms() {
        let sp = build_space(5, 4).unwrap();
        let lab = SystemParams::laboratory(0.9, 1.2, 54.3, 150.0);
        let rot = SystemParams::rotating(0.9, 1.2, 54.3, 150.0, 0.0);
        let sp_ = qubit_operator(sp, QubitOp::Raise);
        let sm = qubit_operator(sp, QubitOp::Lower);
        let mut rhs = h_rwa(sp, &rot).unwrap();
        for (g, mode) in [(0.9, Mode::A), (1.2, Mode::B)] {
            let a = mode_annihilator(sp, mode);
            rhs = &rhs + &(&(&a.adjoint() * &sp_) + &(&sm * &a)).scaled(g);
        }
        assert!(h_nonrwa(sp, &lab).unwrap().max_abs_diff(&rhs) < 1e-14);
    }

    #[test]
    fn rotated_spectrum_matches_on_interior() {
        // (δ + Uσz)N + U(a†b + b†a)σz and δ(Â†Â + B̂†B̂) + 2UÂ†Âσz agree on N ≤ c - 2 blocks.
        let c = 6;
        let sp = build_space(c, c).unwrap();
        let p = SystemParams::rotating(1.0, 1.0, 1.0, 50.0, 0.0);
        let (delta, u) = (p.delta(), p.u().unwrap());
        let sz = qubit_operator(sp, QubitOp::Z);
        let h1 = h_linear_dispersive(sp, &p).unwrap();
        let (ra, rb) = rotated_mode_operators(sp, std::f64::consts::FRAC_PI_4);
        let na = &ra.adjoint() * &ra;
        let h2 = &(&na + &(&rb.adjoint() * &rb)).scaled(delta) + &(&na * &sz).scaled(2.0 * u);
        let keep: Vec<usize> = (0..sp.dim()).filter(|&i| {
            let (_, x, y) = sp.decode(i);
            x + y <= c - 2
        }).collect();
        let restrict = |h: &Operator| {
            let d = h.to_dense();
            ndarray::Array2::from_shape_fn((keep.len(), keep.len()), |(i, j)| d[[keep[i], keep[j]]])
        };
        let (e1, _) = restrict(&h1).eigh(UPLO::Lower).unwrap();
        let (e2, _) = restrict(&h2).eigh(UPLO::Lower).unwrap();
        for (x, y) in e1.iter().zip(e2.iter()) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn rwa_conserves_excitations(ga in -1.5f64..1.5, gb in -1.5f64..1.5, delta in -2.0f64..2.0, big in -60.0f64..60.0) {
            let sp = build_space(4, 3).unwrap();
            let h = h_rwa(sp, &SystemParams::rotating(ga, gb, delta, big, 0.0)).unwrap();
            let nexc = &(&number_operator(sp, Mode::A) + &number_operator(sp, Mode::B))
                + &(&qubit_operator(sp, QubitOp::Z) + &identity(sp)).scaled(0.5);
            prop_assert!(h.commutator(&nexc).max_abs() <= 1e-12);
            prop_assert!(h.hermiticity_error() <= 1e-12);
        }
    }
}
