//! Numerical runs paired with their closed-form counterparts.

use crate::analytic::{analytic_theta, bloch_components, dissipative_populations, linear_purity, DispersiveParams};
use crate::error::{invalid, Result};
use crate::observables::{rms_difference, sup_difference, Observable, TimeSeries};
use crate::scenarios::Scenario;

/// Scenarios with an analytic counterpart.
pub const COMPARABLE: [&str; 5] = ["fig2a", "fig2b", "fig3", "fig4", "fig6"];

/// Sup-norm and RMS gap of one paired column.
#[derive(Clone, Debug, PartialEq)]
pub struct Gap {
    pub observable: Observable,
    pub sup: f64,
    pub rms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    /// `<obs>` and `<obs>_analytic` columns side by side.
    pub series: TimeSeries,
    pub gaps: Vec<Gap>,
}

fn paired(s: &Scenario) -> Option<&'static [Observable]> {
    Some(match s.name.as_str() {
        "fig2a" | "fig2b" => &[Observable::Pq],
        "fig3" => &[Observable::Theta],
        "fig4" => &[Observable::RAbs],
        "fig6" => &[Observable::Na, Observable::Nb, Observable::Z],
        _ => return None,
    })
}

pub fn has_oracle(s: &Scenario) -> bool {
    paired(s).is_some()
}

/// Runs `s` and evaluates its oracle on the same grid.
pub fn compare(s: &Scenario) -> Result<Comparison> {
    let Some(observables) = paired(s) else {
        return invalid(format!("scenario '{}' has no analytic counterpart; choose one of {}", s.name, COMPARABLE.join(", ")));
    };
    let Some(alpha) = s.field_a.amplitude() else {
        return invalid("the analytic counterpart needs a coherent mode-a input");
    };
    let oracle = DispersiveParams::from_system(&s.params, alpha)?
        .with_gamma(s.dissipation.gamma)
        .with_kappa(s.dissipation.kappa);
    let mut run = s.clone();
    run.observables = observables.to_vec();
    let numeric = run.run()?;
    let t = &numeric.times;
    let mut series = TimeSeries::new(t.clone())?;
    series.diagnostics = numeric.diagnostics.clone();
    let mut gaps = Vec::new();
    for &obs in observables {
        let analytic: Vec<f64> = match obs {
            Observable::Pq => t.iter().map(|&t| linear_purity(&oracle, t)).collect(),
            Observable::Theta => analytic_theta(&oracle, t),
            Observable::RAbs => t.iter().map(|&t| bloch_components(&oracle, t).2).collect(),
            Observable::Na => t.iter().map(|&t| dissipative_populations(&oracle, t).0).collect(),
            Observable::Nb => t.iter().map(|&t| dissipative_populations(&oracle, t).1).collect(),
            _ => t.iter().map(|&t| dissipative_populations(&oracle, t).2).collect(),
        };
        let values = numeric.get(obs)?.to_vec();
        gaps.push(Gap { observable: obs, sup: sup_difference(&values, &analytic), rms: rms_difference(&values, &analytic) });
        series.push_column(obs.name(), values)?;
        series.push_column(&format!("{}_analytic", obs.name()), analytic)?;
    }
    Ok(Comparison { series, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::builtin;

    #[test]
    fn only_listed_scenarios_compare() {
        for name in crate::scenarios::BUILTIN_NAMES {
            assert_eq!(has_oracle(&builtin(name).unwrap()), COMPARABLE.contains(&name), "{name}");
        }
        assert!(compare(&builtin("fig1").unwrap()).is_err());
    }
}
