//! Command-line front end: `run`, `validate` and `compare`.
//!
//! Data goes to `--out` (or stdout); diagnostics and summaries go to stderr.
//! Exit codes: 0 success, 1 failed validation, 2 invalid arguments,
//! 3 trace-drift abort, 4 scenario-file error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::compare::compare;
use crate::error::{Error, Result};
use crate::observables::TimeSeries;
use crate::scenarios::{builtin, fig5_sweep, Scenario, FIG5_TAUS};
use crate::validate::{run_criterion, Suite, CRITERIA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRACE_DRIFT: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "photonic-josephson", version, about = "Qubit-mediated photon exchange between two cavity modes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its observables as CSV.
    Run(RunArgs),
    /// Run the acceptance criteria and print a pass/fail table.
    Validate(ValidateArgs),
    /// Run a scenario next to its analytic counterpart.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Builtin scenario (fig1 ... fig8b).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    scenario: Option<String>,
    /// Scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cutoff_a: Option<usize>,
    #[arg(long)]
    cutoff_b: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Reduced cutoffs and record densities.
    #[arg(long)]
    fast: bool,
    /// Run only these criteria (1-11).
    #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=11))]
    criteria: Vec<u8>,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let out = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Validate(a) => return cmd_validate(&a),
        Command::Compare(a) => cmd_compare(&a),
    };
    match out {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::TraceDrift { .. } => EXIT_TRACE_DRIFT,
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_USAGE,
    }
}

impl RunArgs {
    fn apply(&self, mut s: Scenario) -> Scenario {
        s.cutoff_a = self.cutoff_a.unwrap_or(s.cutoff_a);
        s.cutoff_b = self.cutoff_b.unwrap_or(s.cutoff_b);
        s.config.dt = self.dt.unwrap_or(s.config.dt);
        s.config.t_end = self.t_end.unwrap_or(s.config.t_end);
        s
    }

    fn scenario(&self) -> Result<Scenario> {
        let s = match (&self.scenario, &self.config) {
            (Some(name), _) => builtin(name)?,
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
                Scenario::from_toml(&text)?
            }
            (None, None) => return Err(Error::InvalidArgument("either --scenario or --config is required".into())),
        };
        Ok(self.apply(s))
    }

    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let ts = if a.scenario.as_deref() == Some("fig5") {
        run_sweep(a)?
    } else {
        a.scenario()?.run()?
    };
    let d = &ts.diagnostics;
    eprintln!(
        "engine {}; {} records; max trace drift {:.2e}; max edge population {:.2e}",
        d.engine,
        ts.len(),
        d.max_trace_drift,
        d.max_edge_population
    );
    ts.write_csv(a.sink()?)
}

/// All members of the Zeno sweep, one column set per interval.
fn run_sweep(a: &RunArgs) -> Result<TimeSeries> {
    let members: Vec<Scenario> = fig5_sweep().into_iter().map(|s| a.apply(s)).collect();
    let runs: Vec<Result<TimeSeries>> = std::thread::scope(|scope| {
        let handles: Vec<_> = members.iter().map(|s| scope.spawn(move || s.run())).collect();
        handles.into_iter().map(|h| h.join().expect("sweep member panicked")).collect()
    });
    let mut merged: Option<TimeSeries> = None;
    for (run, tau) in runs.into_iter().zip(FIG5_TAUS) {
        let run = run?;
        let out = merged.get_or_insert_with(|| {
            let mut ts = TimeSeries::new(run.times.clone()).expect("grid already validated");
            ts.diagnostics = run.diagnostics.clone();
            ts
        });
        for name in run.names() {
            out.push_column(&format!("{name}[tau={tau:e}]"), run.column(name)?.to_vec())?;
        }
        let d = &mut out.diagnostics;
        d.max_trace_drift = d.max_trace_drift.max(run.diagnostics.max_trace_drift);
        d.max_edge_population = d.max_edge_population.max(run.diagnostics.max_edge_population);
    }
    merged.ok_or_else(|| Error::InvalidArgument("empty sweep".into()))
}

fn cmd_compare(a: &RunArgs) -> Result<()> {
    let c = compare(&a.scenario()?)?;
    for g in &c.gaps {
        eprintln!("{}: sup {:.4e}, rms {:.4e}", g.observable.name(), g.sup, g.rms);
    }
    c.series.write_csv(a.sink()?)
}

fn cmd_validate(a: &ValidateArgs) -> i32 {
    let suite = if a.fast { Suite::Fast } else { Suite::Full };
    let ids: Vec<usize> =
        if a.criteria.is_empty() { (1..=CRITERIA.len()).collect() } else { a.criteria.iter().map(|&i| i as usize).collect() };
    let mut failures = 0;
    for id in ids {
        let start = std::time::Instant::now();
        let r = run_criterion(id, suite);
        println!("{r} ({:.0} s)", start.elapsed().as_secs_f64());
        failures += usize::from(!r.passed);
    }
    println!("{failures} failed");
    if failures == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}
