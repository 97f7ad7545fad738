//! Frequent non-selective qubit measurements slow the photon transfer.

use photonic_josephson::observables::{power_law_exponent, Observable};
use photonic_josephson::scenarios::fig5_sweep;

fn main() -> photonic_josephson::error::Result<()> {
    for mut s in fig5_sweep() {
        s.config.t_end = 1.0;
        s.observables = vec![Observable::Nb];
        let tau = s.measurement.as_ref().map_or(f64::INFINITY, |m| m.tau);
        let ts = s.run()?;
        let (t, nb) = ts.window("n_b", 1e-9, 0.5)?;
        let last = ts.get(Observable::Nb)?[ts.len() - 1];
        println!("tau = {tau:9.2e}: n_b(1) = {last:.3e}, early exponent {:.2}", power_law_exponent(&t, &nb)?);
    }
    Ok(())
}
