//! Runs a scenario document and writes the CSV to stdout.

use photonic_josephson::scenarios::Scenario;

const DOC: &str = r#"
scenario = "detuned-pair"
hamiltonian = "rwa"
g_a = 1.0
g_b = 0.5
Delta = 20.0
delta = 1.0
eta = 0.05
alpha_re = 1.5
cutoff_a = 14
cutoff_b = 14
t_end = 50.0
dt = 0.01
record_stride = 100
observables = "n_a,n_b,Z,R_abs"
"#;

fn main() -> photonic_josephson::error::Result<()> {
    let s = Scenario::from_toml(DOC)?;
    let ts = s.run()?;
    eprintln!("engine {}, {} records", ts.diagnostics.engine, ts.len());
    ts.write_csv(std::io::stdout().lock())
}
