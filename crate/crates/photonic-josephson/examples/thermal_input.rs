//! A thermal field in the Rabi model: revivals and a coherent time average.

use std::f64::consts::PI;

use photonic_josephson::engines::{manifold_averaged_mode_a, EnsembleRun};
use photonic_josephson::observables::{envelope, offdiagonal_norm, Observable};
use photonic_josephson::scenarios::builtin;

fn main() -> photonic_josephson::error::Result<()> {
    let mut s = builtin("fig7")?;
    s.config.record_stride = 2000;
    s.observables = vec![Observable::Z, Observable::Pq];
    let u = s.params.u()?.abs();
    let ts = s.run()?;
    let env = envelope(&ts.times, ts.get(Observable::Z)?, 1.05 * PI / u)?;
    for (i, t) in ts.times.iter().enumerate().step_by(800) {
        println!("t = {t:7.0}: Z envelope {:.3}, P_q {:.3}", env[i], ts.get(Observable::Pq)?[i]);
    }
    let avg = manifold_averaged_mode_a(&EnsembleRun::new(&s)?, s.config.t_end, 1e-4)?;
    println!(
        "time-averaged mode a: {} clusters, off-diagonal norm {:.2e}, n = {:.3}",
        avg.clusters,
        offdiagonal_norm(&avg.rho),
        avg.rho.diag().iter().enumerate().map(|(n, z)| n as f64 * z.re).sum::<f64>()
    );
    Ok(())
}
