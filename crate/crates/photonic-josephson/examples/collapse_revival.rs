//! Collapse and revival of the Josephson oscillations at alpha = 4.

use std::f64::consts::PI;

use photonic_josephson::observables::{envelope, Observable};
use photonic_josephson::scenarios::builtin;

fn main() -> photonic_josephson::error::Result<()> {
    let mut s = builtin("fig1")?;
    s.observables = vec![Observable::Z];
    let u = s.params.u()?;
    let ts = s.run()?;
    let env = envelope(&ts.times, ts.get(Observable::Z)?, 1.05 * PI / u)?;
    println!("engine {}", ts.diagnostics.engine);
    println!("{:>9} {:>9}", "t", "envelope");
    for (t, e) in ts.times.iter().zip(&env).step_by(4000) {
        println!("{t:9.0} {e:9.4}");
    }
    Ok(())
}
