//! Continuous qubit measurement damps the oscillations exponentially.

use std::f64::consts::PI;

use photonic_josephson::analytic::{bloch_components, DispersiveParams};
use photonic_josephson::observables::{envelope, log_linear_fit, Observable};
use photonic_josephson::scenarios::builtin;

fn main() -> photonic_josephson::error::Result<()> {
    let mut s = builtin("fig4")?.with_cutoffs(30, 30);
    s.observables = vec![Observable::Z, Observable::RAbs];
    let u = s.params.u()?;
    let ts = s.run()?;
    let env = envelope(&ts.times, ts.get(Observable::Z)?, 1.05 * PI / u)?;
    let fit = log_linear_fit(&ts.times, &env)?;
    println!("Z envelope decays at {:.3e} (R^2 = {:.3})", -fit.slope, fit.r_squared);
    let oracle = DispersiveParams::new(4.0, u).with_gamma(s.dissipation.gamma);
    println!("{:>6} {:>8} {:>8} {:>10}", "t", "Z env", "|R|", "|R| formula");
    for (i, t) in ts.times.iter().enumerate().step_by(500) {
        println!("{t:6.0} {:8.4} {:8.4} {:10.4}", env[i], ts.get(Observable::RAbs)?[i], bloch_components(&oracle, *t).2);
    }
    Ok(())
}
