//! Closed-form results of the linear dispersive model.
//!
//! In the dispersive regime the qubit only shifts the mode frequencies and
//! the two modes exchange photons at rate `2U`. Coherent inputs stay coherent
//! on each qubit branch, which gives the formulas below.

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::hamiltonians::SystemParams;
use crate::observables::cumulative_trapezoid;
use crate::states::thermal_mode_state;

/// Parameters of the dispersive oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersiveParams {
    /// Initial coherent amplitude of mode a.
    pub alpha: C64,
    /// Dispersive coupling.
    pub u: f64,
    /// Qubit dephasing rate.
    pub gamma: f64,
    /// Cavity decay rate.
    pub kappa: f64,
    pub eta: f64,
    /// Cavity-pump detuning.
    pub delta: f64,
}

impl DispersiveParams {
    pub fn new(alpha: impl Into<C64>, u: f64) -> Self {
        Self { alpha: alpha.into(), u, gamma: 0.0, kappa: 0.0, eta: 0.0, delta: 0.0 }
    }

    /// Oracle parameters matching a two-mode system.
    pub fn from_system(p: &SystemParams, alpha: impl Into<C64>) -> Result<Self> {
        Ok(Self { eta: p.eta, delta: p.delta(), ..Self::new(alpha, p.u()?) })
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_kappa(self, kappa: f64) -> Self {
        Self { kappa, ..self }
    }

    pub fn with_pump(self, eta: f64, delta: f64) -> Self {
        Self { eta, delta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !(self.kappa >= 0.0) {
            return invalid("rates must be non-negative");
        }
        if !self.u.is_finite() || self.u == 0.0 {
            return invalid("the dispersive coupling must be finite and non-zero");
        }
        Ok(())
    }

    fn n0(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    fn phase(&self, t: f64) -> f64 {
        2.0 * self.u * t
    }
}

/// Coherent amplitudes of modes a and b on each qubit branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchAmplitudes {
    pub a_plus: C64,
    pub b_plus: C64,
    pub a_minus: C64,
    pub b_minus: C64,
}

/// Branch amplitudes of the linear model, in the frame rotating at `δ`.
///
/// On branch `|±>` mode a holds `α(e^{∓i2Ut} + 1)/2` and mode b holds
/// `α(e^{∓i2Ut} - 1)/2`, so at `t = 0` mode a carries `α` and b is empty.
pub fn linear_state_amplitudes(p: &DispersiveParams, t: f64) -> BranchAmplitudes {
    let plus = C64::from_polar(1.0, -p.phase(t));
    let minus = plus.conj();
    let half = p.alpha / 2.0;
    BranchAmplitudes {
        a_plus: half * (plus + 1.0),
        b_plus: half * (plus - 1.0),
        a_minus: half * (minus + 1.0),
        b_minus: half * (minus - 1.0),
    }
}

/// Linear entropy `½(1 - e^{-2|α|² sin²(2Ut)})` of either subsystem.
pub fn linear_purity(p: &DispersiveParams, t: f64) -> f64 {
    let s = p.phase(t).sin();
    0.5 * (1.0 - (-2.0 * p.n0() * s * s).exp())
}

/// `(Rx, Ry, |R|)`, with `|R|` carrying the extra `e^{-γt}` of qubit dephasing.
pub fn bloch_components(p: &DispersiveParams, t: f64) -> (f64, f64, f64) {
    let s = p.phase(t).sin();
    let decay = (-p.n0() * s * s).exp();
    let arg = 2.0 * p.n0() * s;
    (decay * arg.cos(), decay * arg.sin(), decay * (-p.gamma * t).exp())
}

/// Inversion `cos(2Ut)`, unaffected by cavity decay when unpumped.
pub fn linear_inversion(p: &DispersiveParams, t: f64) -> f64 {
    p.phase(t).cos()
}

/// Area of one step of `Θ(t)`: `∫ e^{-|α|²(2Ut)²} dt = √(π/(4U²|α|²))`.
pub fn bloch_step_area(p: &DispersiveParams) -> Result<f64> {
    if !(p.u > 0.0) || p.n0() == 0.0 {
        return invalid("the step area needs U > 0 and a non-zero amplitude");
    }
    Ok((std::f64::consts::PI / (4.0 * p.u * p.u * p.n0())).sqrt())
}

/// `Θ(t) = ∫₀ᵗ |R|` of the analytic Bloch length on the given grid.
pub fn analytic_theta(p: &DispersiveParams, times: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = times.iter().map(|&t| bloch_components(p, t).2).collect();
    cumulative_trapezoid(times, &r)
}

/// `(<n_a>, <n_b>, Z)` of the unpumped model with cavity decay.
pub fn dissipative_populations(p: &DispersiveParams, t: f64) -> (f64, f64, f64) {
    let c = p.phase(t).cos();
    let total = p.n0() * (-2.0 * p.kappa * t).exp();
    (0.5 * total * (1.0 + c), 0.5 * total * (1.0 - c), c)
}

/// Long-time decay rate `κη²(U/(κ² + U²))²` of the qubit coherence under
/// pumping and cavity decay.
pub fn dissipative_qubit_coherence_rate(p: &DispersiveParams) -> Result<f64> {
    if !(p.kappa > 0.0) {
        return invalid("the coherence rate needs kappa > 0");
    }
    let r = p.u / (p.kappa * p.kappa + p.u * p.u);
    Ok(p.kappa * p.eta * p.eta * r * r)
}

/// Steady population `η²/δ²` of a detuned, pumped empty mode.
pub fn pump_steady_population(eta: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return invalid("resonant pumping has no steady state");
    }
    Ok(eta * eta / (delta * delta))
}

/// Thermal state with half the photons of mode a, the state both modes would
/// share if they thermalized.
pub fn thermalized_target(nbar_a: f64, cutoff: usize) -> Result<nd::Array2<C64>> {
    thermal_mode_state(nbar_a / 2.0, cutoff)
}
