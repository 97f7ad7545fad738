//! Number dephasing of both modes, solved sector by sector.

use std::f64::consts::PI;

use photonic_josephson::observables::{envelope, log_linear_fit, Observable};
use photonic_josephson::scenarios::builtin;

fn main() -> photonic_josephson::error::Result<()> {
    let mut s = builtin("fig6")?.with_cutoffs(20, 20).with_horizon(0.25, 800.0);
    s.params.eta = 0.0;
    s.field_a = photonic_josephson::scenarios::FieldSpec::Coherent(num_complex::Complex64::new(2.0, 0.0));
    s.dissipation.dephase_fields = true;
    s.config.record_stride = 1;
    s.observables = vec![Observable::Z];
    let u = s.params.u()?;
    let ts = s.run()?;
    let env = envelope(&ts.times, ts.get(Observable::Z)?, 1.05 * PI / u)?;
    let fit = log_linear_fit(&ts.times, &env)?;
    println!("engine {}: envelope rate {:.3e}, R^2 {:.3}", ts.diagnostics.engine, -fit.slope, fit.r_squared);
    Ok(())
}
