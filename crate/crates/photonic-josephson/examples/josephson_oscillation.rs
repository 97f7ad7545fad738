//! Photon exchange between the modes in the linear dispersive model.

use num_complex::Complex64 as C64;
use photonic_josephson::engines::Engine;
use photonic_josephson::hamiltonians::HamiltonianKind;
use photonic_josephson::observables::Observable;
use photonic_josephson::scenarios::{builtin, FieldSpec};

fn main() -> photonic_josephson::error::Result<()> {
    let mut s = builtin("fig2a")?.with_cutoffs(20, 20);
    s.hamiltonian = HamiltonianKind::Linear;
    s.params.eta = 0.0;
    s.field_a = FieldSpec::Coherent(C64::new(2.0, 0.0));
    s.engine = Engine::Full;
    s.config.record_stride = 2500;
    s.observables = vec![Observable::Na, Observable::Nb, Observable::Z];
    let u = s.params.u()?;
    let ts = s.run()?;
    println!("{:>8} {:>9} {:>9} {:>10} {:>10}", "t", "n_a", "n_b", "Z", "cos 2Ut");
    for (i, t) in ts.times.iter().enumerate() {
        let (na, nb, z) = (ts.get(Observable::Na)?[i], ts.get(Observable::Nb)?[i], ts.get(Observable::Z)?[i]);
        println!("{t:8.2} {na:9.5} {nb:9.5} {z:10.6} {:10.6}", (2.0 * u * t).cos());
    }
    Ok(())
}
