//! Adiabatic transfer under a pulse schedule in the effective model.

use lmg_core::adiabatic::{self, DrivenLmg, EvolutionConfig, PulseSchedule, WINDOW_RAMPS, DEFAULT_NORM_STEP};
use lmg_core::iontrap::{self, IonTrapParams, LambdaMapping};
use lmg_core::linalg::C64;
use lmg_core::lmg::{self, Extremal, TransferCase};
use lmg_core::{Axis, Spin};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{base_defaults, to_value, CommandOutput};
use crate::output::{level_name, Table};
use crate::CliError;

/// Largest tolerated `| ||psi|| - 1 |` before a run is reported invalid.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Model {
    /// Effective couplings given directly.
    Lmg {
        xi: f64,
        lambda: f64,
        #[serde(default)]
        mu: f64,
        j: Spin,
    },
    /// Couplings derived from trap and laser parameters.
    Trap {
        ion: IonTrapParams,
        #[serde(default)]
        mu: f64,
        #[serde(default)]
        lambda_mapping: LambdaMapping,
    },
}

impl Model {
    /// `(xi, lambda, mu, J)`.
    pub fn couplings(&self) -> Result<(f64, f64, f64, Spin), CliError> {
        Ok(match self {
            Model::Lmg { xi, lambda, mu, j } => (*xi, *lambda, *mu, *j),
            Model::Trap { ion, mu, lambda_mapping } => {
                ion.validate()?;
                (ion.xi()?, ion.lambda(*lambda_mapping)?, *mu, ion.spin())
            }
        })
    }

    pub fn driven(&self, schedule: &PulseSchedule) -> Result<DrivenLmg, CliError> {
        schedule.validate()?;
        Ok(match self {
            Model::Lmg { xi, lambda, mu, j } => DrivenLmg {
                xi: *xi,
                lambda: *lambda,
                mu: *mu,
                spin: *j,
                schedule: schedule.clone(),
            },
            Model::Trap { ion, mu, lambda_mapping } => {
                ion.validate()?;
                let mut d = iontrap::effective_drive(ion, schedule, *lambda_mapping)?;
                d.mu = *mu;
                d
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveJob {
    pub model: Model,
    pub schedule: PulseSchedule,
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_axis")]
    pub population_basis: Axis,
    #[serde(default = "default_true")]
    pub record_spectrum: bool,
    /// Starts from this extremal state instead of the case's own.
    #[serde(default)]
    pub initial: Option<Extremal>,
}

fn default_stride() -> usize {
    100
}

fn default_axis() -> Axis {
    Axis::Y
}

fn default_true() -> bool {
    true
}

pub fn run(job: &EvolveJob) -> Result<CommandOutput, CliError> {
    let d = job.model.driven(&job.schedule)?;
    let label = d.case_label()?;
    let (w0, w1) = job.schedule.default_window();
    let t_start = job.t_start.unwrap_or(w0);
    let t_end = job.t_end.unwrap_or(w1);
    let dt = match job.dt {
        Some(dt) => dt,
        None => adiabatic::default_dt(&d, t_start, t_end)?,
    };
    let cfg = EvolutionConfig {
        t_start,
        t_end,
        dt,
        record_stride: job.record_stride,
        population_basis: job.population_basis,
        record_spectrum: job.record_spectrum,
    };
    let initial = job.initial.unwrap_or(label.initial);
    let traj = adiabatic::evolve(&d, &initial.state(d.spin), &cfg)?;
    let target = lmg::target_state(&label)?;
    let fidelity = traj.fidelity_to(&target)?;
    let flipped = match label.case {
        TransferCase::I => {
            let phase = -C64::from_polar(1.0, std::f64::consts::PI * d.spin.value());
            Some(traj.fidelity_to(&lmg::ghz_y_state(d.spin, phase)?)?)
        }
        _ => None,
    };

    let mut columns = vec!["t".to_string()];
    columns.extend(traj.level_labels.iter().map(|&m| level_name("p", m)));
    columns.push("target_fidelity".into());
    if flipped.is_some() {
        columns.push("flipped_phase_fidelity".into());
    }
    if job.record_spectrum {
        columns.extend(["E0".to_string(), "E1".to_string()]);
    }
    let mut table = Table::new(columns);
    for k in 0..traj.times.len() {
        let mut row = vec![traj.times[k]];
        row.extend(&traj.populations[k]);
        row.push(fidelity[k]);
        if let Some(f) = &flipped {
            row.push(f[k]);
        }
        if job.record_spectrum {
            row.extend([traj.e0[k], traj.e1[k]]);
        }
        table.push(row);
    }

    let efficiency = *fidelity.last().expect("at least one sample");
    let final_pops: Vec<Value> = traj
        .level_labels
        .iter()
        .zip(traj.final_populations())
        .map(|(m, p)| json!({"m": m, "population": p}))
        .collect();
    let min_gap = traj.gaps().into_iter().fold(f64::INFINITY, f64::min);

    let mut defaults = base_defaults();
    defaults.insert(
        "window".into(),
        json!({
            "t_start": t_start,
            "t_end": t_end,
            "rule": if job.t_start.is_none() || job.t_end.is_none() {
                format!("+-{WINDOW_RAMPS} x max ramp time")
            } else {
                "given".into()
            },
        }),
    );
    defaults.insert(
        "dt".into(),
        json!({
            "requested": dt,
            "used": traj.dt,
            "rule": if job.dt.is_none() { format!("max ||H|| dt = {DEFAULT_NORM_STEP}") } else { "given".into() },
        }),
    );
    defaults.insert("propagator".into(), json!("exponential midpoint via eigendecomposition"));
    defaults.insert("initial_state".into(), json!({"extremal": initial, "from_case": job.initial.is_none()}));
    defaults.insert("target".into(), json!(target_rule(label.case)));
    if let Model::Trap { lambda_mapping, .. } = &job.model {
        defaults.insert("lambda_mapping".into(), to_value(lambda_mapping));
    }

    let results = json!({
        "case": format!("{:?}", label.case),
        "initial": label.initial,
        "warning": label.warning,
        "target_projection": label.m,
        "xi": d.xi,
        "lambda": d.lambda,
        "mu": d.mu,
        "steps": traj.steps,
        "dt": traj.dt,
        "final_target_population": efficiency,
        "final_flipped_phase_population": flipped.as_ref().map(|f| *f.last().unwrap()),
        "final_populations": final_pops,
        "min_recorded_gap": if min_gap.is_finite() { json!(min_gap) } else { Value::Null },
        "max_norm_error": traj.max_norm_error,
    });
    let mut summary = vec![
        format!("case {:?}, start {:?}, xi = {:.6}, lambda = {:.6}", label.case, initial, d.xi, d.lambda),
        format!("final target population {efficiency:.6}"),
    ];
    if let Some(f) = &flipped {
        summary.push(format!("final flipped-phase population {:.3e}", f.last().unwrap()));
    }
    if let Some(w) = &label.warning {
        summary.push(format!("warning: {w}"));
    }
    let failure = (traj.max_norm_error > NORM_TOLERANCE).then(|| {
        CliError::Numerical(format!("norm drift {:e} exceeds {NORM_TOLERANCE:e}", traj.max_norm_error))
    });
    Ok(CommandOutput {
        tables: vec![("trajectory".into(), table)],
        resolved: to_value(job),
        defaults,
        results,
        summary,
        failure,
    })
}

fn target_rule(case: TransferCase) -> &'static str {
    match case {
        TransferCase::I => "(|m_y=J> + exp(i pi J) |m_y=-J>)/sqrt2",
        TransferCase::II => "(|m_y=1/2> + s |m_y=-1/2>)/sqrt2, s fixed by the parity of the initial state",
        TransferCase::III => "|m_y=0>",
        TransferCase::IV => "|m_y=mu>",
    }
}
