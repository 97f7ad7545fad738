//! Photon loss from both modes with the pump on.

use std::f64::consts::PI;

use photonic_josephson::observables::{envelope, Observable};
use photonic_josephson::scenarios::builtin;

fn main() -> photonic_josephson::error::Result<()> {
    let mut s = builtin("fig6")?.with_cutoffs(20, 20);
    s.observables = vec![Observable::Na, Observable::Nb, Observable::Z, Observable::RAbs];
    let u = s.params.u()?;
    let kappa = s.dissipation.kappa;
    let ts = s.run()?;
    let env = envelope(&ts.times, ts.get(Observable::Z)?, 1.05 * PI / u)?;
    println!("{:>6} {:>8} {:>12} {:>8} {:>7}", "t", "n_a+n_b", "9 e^-2kt", "Z env", "|R|");
    for (i, t) in ts.times.iter().enumerate().step_by(2000) {
        let n = ts.get(Observable::Na)?[i] + ts.get(Observable::Nb)?[i];
        let r = ts.get(Observable::RAbs)?[i];
        println!("{t:6.0} {n:8.4} {:12.4} {:8.4} {r:7.4}", 9.0 * (-2.0 * kappa * t).exp(), env[i]);
    }
    Ok(())
}
