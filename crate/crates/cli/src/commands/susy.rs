//! Zero mode of the `lambda = 1` factorization against the eigensolver.

use lmg_core::lmg::{self, LmgParams};
use lmg_core::Spin;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{base_defaults, to_value, CommandOutput};
use crate::output::Table;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SusyJob {
    pub xi: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub j: Spin,
    /// `m_y` projection of the seed state.
    pub m: f64,
    /// Linear weight; when absent the weight that makes the seed an exact
    /// zero mode is used.
    #[serde(default)]
    pub mu: Option<f64>,
}

/// Residual allowed per unit of `(chi1 + chi2) J`.
pub const RESIDUAL_RTOL: f64 = 1e-10;

pub fn run(job: &SusyJob) -> Result<CommandOutput, CliError> {
    if !job.j.allows(job.m) {
        return Err(CliError::Config(format!("m = {} is not a projection of J = {}", job.m, job.j.value())));
    }
    let kernel_mu = lmg::kernel_mu(job.m, job.chi1, job.chi2)?;
    let mu = job.mu.unwrap_or(kernel_mu);
    let p = LmgParams {
        xi: job.xi,
        lambda: 1.0,
        mu,
        chi1: job.chi1,
        chi2: job.chi2,
        spin: job.j,
    };
    let gamma = lmg::susy_gamma(job.chi1, job.chi2)?;
    let psi = lmg::susy_ground_state(&p, job.m)?;
    let residual = lmg::susy_residual(&p, &psi)?;
    let tol = RESIDUAL_RTOL * (job.chi1.abs() + job.chi2) * job.j.value().max(0.5);
    let spec = lmg::spectrum(&lmg::build_hamiltonian(&p)?)?;
    let e0_predicted = -p.xi * p.chi2 * p.chi2 * mu * mu;

    let mut table = Table::new(vec!["level".into(), "energy".into(), "overlap_with_zero_mode".into()]);
    for (k, e) in spec.eigenvalues.iter().enumerate() {
        table.push(vec![k as f64, *e, spec.eigenstate(k).fidelity(&psi)?]);
    }
    let ground = &spec.degeneracy_groups[0];
    let ground_weight: f64 = ground
        .iter()
        .map(|&k| spec.eigenstate(k).fidelity(&psi))
        .sum::<lmg_core::Result<f64>>()?;
    let multiplicities = spec.multiplicities();
    let nondegenerate = multiplicities.iter().filter(|&&k| k == 1).count();
    let paired = nondegenerate == 1 && multiplicities.iter().all(|&k| k <= 2);
    let is_kernel = residual <= tol;

    let mut defaults = base_defaults();
    defaults.insert("mu".into(), json!(if job.mu.is_some() { "given" } else { "kernel weight m sech(gamma)" }));
    defaults.insert("residual_rtol".into(), json!(RESIDUAL_RTOL));
    defaults.insert("gamma_convention".into(), json!("tanh(gamma) = chi1 / chi2"));
    let results = json!({
        "gamma": gamma,
        "mu": mu,
        "kernel_mu": kernel_mu,
        "residual": residual,
        "residual_tolerance": tol,
        "is_zero_mode": is_kernel,
        "ground_energy": spec.eigenvalues[0],
        "predicted_ground_energy": e0_predicted,
        "ground_space_weight": ground_weight,
        "multiplicities": multiplicities,
        "pairing": paired,
    });
    let summary = vec![
        format!("mu = {mu:.12} (zero-mode weight {kernel_mu:.12})"),
        format!("residual {residual:.3e} (tolerance {tol:.3e})"),
        format!(
            "E0 = {:.12}, -xi chi2^2 mu^2 = {:.12}, ground-space weight {:.12}",
            spec.eigenvalues[0], e0_predicted, ground_weight
        ),
    ];
    let failure = (!is_kernel).then(|| {
        CliError::Numerical(format!("seed state is not a zero mode: residual {residual:e} > {tol:e}"))
    });
    Ok(CommandOutput {
        tables: vec![("levels".into(), table)],
        resolved: to_value(job),
        defaults,
        results,
        summary,
        failure,
    })
}
