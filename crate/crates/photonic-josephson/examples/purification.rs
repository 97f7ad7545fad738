//! Repeated qubit resets pump the entropy out of a thermal field.

use photonic_josephson::dynamics::{EvolutionConfig, MeasurementSchedule};
use photonic_josephson::engines::Engine;
use photonic_josephson::hamiltonians::{HamiltonianKind, SystemParams};
use photonic_josephson::observables::Observable;
use photonic_josephson::scenarios::{builtin, Dissipation, FieldSpec};
use photonic_josephson::states::{qubit_state, QubitSpec};

fn main() -> photonic_josephson::error::Result<()> {
    let mut s = builtin("fig1")?.with_cutoffs(14, 2);
    s.hamiltonian = HamiltonianKind::Rwa;
    s.params = SystemParams::rotating(1.0, 0.0, 1.0, 0.0, 0.0);
    s.qubit = QubitSpec::Minus;
    s.field_a = FieldSpec::Thermal(0.5);
    s.dissipation = Dissipation::default();
    s.measurement = Some(MeasurementSchedule::projective(1.0, qubit_state(QubitSpec::Minus).to_density()));
    s.config = EvolutionConfig::new(0.01, 30.0, 100)?;
    s.observables = vec![Observable::Na, Observable::Pf];
    s.engine = Engine::Full;
    let ts = s.run()?;
    for (i, t) in ts.times.iter().enumerate().step_by(3) {
        println!("t = {t:5.1}: n_a {:.4}, P_f {:.4}", ts.get(Observable::Na)?[i], ts.get(Observable::Pf)?[i]);
    }
    Ok(())
}
