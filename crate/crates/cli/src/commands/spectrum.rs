//! Eigenvalues along `chi1 / chi2` at fixed `chi2`.

use lmg_core::lmg::{self, LmgParams};
use lmg_core::Spin;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{base_defaults, to_value, CommandOutput};
use crate::output::Table;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumJob {
    pub xi: f64,
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
    pub chi2: f64,
    pub j: Spin,
    #[serde(default = "default_points")]
    pub ratio_points: usize,
    #[serde(default = "default_range")]
    pub ratio_range: [f64; 2],
}

fn default_points() -> usize {
    101
}

fn default_range() -> [f64; 2] {
    [0.0, 1.0]
}

pub fn run(job: &SpectrumJob) -> Result<CommandOutput, CliError> {
    if job.ratio_points < 2 {
        return Err(CliError::Config("ratio_points must be at least 2".into()));
    }
    let [lo, hi] = job.ratio_range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(CliError::Config("ratio_range must be increasing and finite".into()));
    }
    let dim = job.j.dim();
    let mut columns = vec!["chi_ratio".to_string()];
    columns.extend((0..dim).map(|k| format!("E_{k}")));
    columns.push("nondegenerate".into());
    let mut table = Table::new(columns);

    let mut min_gap = (f64::INFINITY, lo);
    let mut nondegenerate_counts = Vec::new();
    for i in 0..job.ratio_points {
        let r = lo + (hi - lo) * i as f64 / (job.ratio_points - 1) as f64;
        let p = LmgParams {
            xi: job.xi,
            lambda: job.lambda,
            mu: job.mu,
            chi1: r * job.chi2,
            chi2: job.chi2,
            spin: job.j,
        };
        let spec = lmg::spectrum(&lmg::build_hamiltonian(&p)?)?;
        let single = spec.multiplicities().iter().filter(|&&k| k == 1).count();
        nondegenerate_counts.push(single);
        if dim > 1 {
            let gap = spec.eigenvalues[1] - spec.eigenvalues[0];
            if gap < min_gap.0 {
                min_gap = (gap, r);
            }
        }
        let mut row = vec![r];
        row.extend(&spec.eigenvalues);
        row.push(single as f64);
        table.push(row);
    }

    let mut defaults = base_defaults();
    defaults.insert("degeneracy_rtol".into(), json!(lmg::DEGENERACY_RTOL));
    let results = json!({
        "rows": job.ratio_points,
        "levels": dim,
        "min_gap": if min_gap.0.is_finite() { json!(min_gap.0) } else { json!(null) },
        "min_gap_ratio": min_gap.1,
        "nondegenerate_levels": nondegenerate_counts,
    });
    let mut summary = vec![format!("spectrum: {} ratios x {} levels", job.ratio_points, dim)];
    if min_gap.0.is_finite() {
        summary.push(format!("min gap {:.6e} at chi1/chi2 = {:.4}", min_gap.0, min_gap.1));
    }
    Ok(CommandOutput {
        tables: vec![("levels".into(), table)],
        resolved: to_value(job),
        defaults,
        results,
        summary,
        failure: None,
    })
}
