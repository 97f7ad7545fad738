//! Qubit linear entropy against the dispersive formula at two detunings.

use photonic_josephson::compare::compare;
use photonic_josephson::scenarios::builtin;

fn main() -> photonic_josephson::error::Result<()> {
    for name in ["fig2a", "fig2b"] {
        let s = builtin(name)?;
        let c = compare(&s)?;
        for g in &c.gaps {
            println!("{name} (Delta = {}): {} sup {:.4} rms {:.4}", s.params.big_delta(), g.observable, g.sup, g.rms);
        }
    }
    Ok(())
}
