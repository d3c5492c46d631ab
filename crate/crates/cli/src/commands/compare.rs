//! Full trapped-ion model against the effective LMG model.

use lmg_core::adiabatic::PulseSchedule;
use lmg_core::iontrap::{self, CompareConfig, IonTrapParams, LAMB_DICKE_LIMIT};
use lmg_core::lmg::Extremal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::evolve::NORM_TOLERANCE;
use super::{base_defaults, to_value, CommandOutput};
use crate::output::{level_name, Table};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareJob {
    pub ion: IonTrapParams,
    pub schedule: PulseSchedule,
    /// Initial spin state; defaults to the one selected by the case.
    #[serde(default)]
    pub initial: Option<Extremal>,
    #[serde(default)]
    pub compare: CompareConfig,
    /// Repeat the full run with this many extra Fock levels and report the
    /// change of the final populations.
    #[serde(default)]
    pub cutoff_check: Option<usize>,
}

pub fn run(job: &CompareJob) -> Result<CommandOutput, CliError> {
    job.ion.validate()?;
    let eff = iontrap::effective_drive(&job.ion, &job.schedule, job.compare.lambda_mapping)?;
    let initial = match job.initial {
        Some(e) => e,
        None => eff.case_label()?.initial,
    };
    let psi = initial.state(job.ion.spin());
    let cmp = iontrap::compare_effective(&job.ion, &job.schedule, &psi, &job.compare)?;
    let sensitivity = match job.cutoff_check {
        Some(extra) => Some(cmp.cutoff_sensitivity(&job.ion, &job.schedule, &psi, extra)?),
        None => None,
    };

    let mut columns = vec!["t".to_string(), "interior".to_string()];
    for prefix in ["full", "coarse", "effective"] {
        columns.extend(cmp.level_labels.iter().map(|&m| level_name(prefix, m)));
    }
    let mut table = Table::new(columns);
    for k in 0..cmp.times.len() {
        let inside = (cmp.interior.0..cmp.interior.1).contains(&k);
        let mut row = vec![cmp.times[k], if inside { 1.0 } else { 0.0 }];
        row.extend(&cmp.full_raw[k]);
        row.extend(&cmp.full_coarse[k]);
        row.extend(&cmp.effective[k]);
        table.push(row);
    }

    let mut defaults = base_defaults();
    defaults.insert(
        "coarse_window".into(),
        json!({
            "length": cmp.window,
            "periods": job.compare.window_periods,
            "rule": "2 pi K / min(|delta|, |nu - |delta||), centered moving average",
        }),
    );
    defaults.insert(
        "full_model".into(),
        json!({
            "frame": "interaction picture of nu c^dag c + omega_eg Jz",
            "lamb_dicke": "first order, exp(i eta (c + c^dag)) ~ 1 + i eta (c + c^dag)",
            "propagator": "exponential midpoint, exact per step via the excitation-parity split",
            "dt": cmp.full_config.effective_dt(),
            "t_start": cmp.full_config.t_start,
            "t_end": cmp.full_config.t_end,
        }),
    );
    defaults.insert("effective_dt".into(), json!(cmp.effective_dt));
    defaults.insert("initial_state".into(), json!({"extremal": initial, "from_case": job.initial.is_none(), "phonons": "|n = 0>"}));
    defaults.insert("lamb_dicke_limit".into(), json!(LAMB_DICKE_LIMIT));

    let results = json!({
        "rms": cmp.rms,
        "max_deviation": cmp.max_deviation,
        "interior": [cmp.interior.0, cmp.interior.1],
        "effective_xi": cmp.effective_xi,
        "effective_lambda": cmp.effective_lambda,
        "full_final_coarse": cmp.full_final(),
        "effective_final": cmp.effective_final(),
        "full_final_raw": cmp.full_raw.last(),
        "max_top_population": cmp.max_top_population,
        "cutoff_overflow": cmp.cutoff_overflow,
        "cutoff_sensitivity": sensitivity,
        "full_norm_error": cmp.full_norm_error,
        "lamb_dicke_measure": job.ion.lamb_dicke_measure(),
    });
    let mut summary = vec![
        format!(
            "rms {:.6}, max deviation {:.6} (xi = {:.6}, lambda = {:.6})",
            cmp.rms, cmp.max_deviation, cmp.effective_xi, cmp.effective_lambda
        ),
        format!("top Fock population {:.3e}", cmp.max_top_population),
    ];
    if let Some(s) = sensitivity {
        summary.push(format!("cutoff sensitivity {s:.3e}"));
    }
    let failure = if cmp.cutoff_overflow {
        Some(CliError::Cutoff(format!(
            "population {:e} at n_max exceeds {:e}",
            cmp.max_top_population, job.ion.cutoff_threshold
        )))
    } else if cmp.full_norm_error > NORM_TOLERANCE {
        Some(CliError::Numerical(format!("norm drift {:e}", cmp.full_norm_error)))
    } else {
        None
    };
    Ok(CommandOutput {
        tables: vec![("populations".into(), table)],
        resolved: to_value(job),
        defaults,
        results,
        summary,
        failure,
    })
}
