//! Transfer efficiency against the adiabaticity product `chi_max sqrt(|xi| T)`.
//!
//! Points run on a worker pool; rows are collected in input order, so the
//! output does not depend on the thread count.

use lmg_core::adiabatic::{self, ScanFamily, ScanPoint, ScanRow};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::evolve::Model;
use super::{base_defaults, to_value, CommandOutput};
use crate::output::Table;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanJob {
    pub model: Model,
    /// `T1 / T2` of the tanh pair.
    pub ramp_ratio: f64,
    #[serde(default)]
    pub points: Vec<ScanPoint>,
    /// Every amplitude at every product value.
    #[serde(default)]
    pub products: Option<ProductGrid>,
    /// Efficiencies at products at or above this value are summarized.
    #[serde(default)]
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductGrid {
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn run(job: &ScanJob, threads: Option<usize>) -> Result<CommandOutput, CliError> {
    let (xi, lambda, mu, spin) = job.model.couplings()?;
    if !(job.ramp_ratio.is_finite() && job.ramp_ratio > 0.0) {
        return Err(CliError::Config("ramp_ratio must be positive".into()));
    }
    let family = ScanFamily {
        xi,
        lambda,
        mu,
        spin,
        ramp_ratio: job.ramp_ratio,
    };
    let mut points = job.points.clone();
    if let Some(g) = &job.products {
        for &x in &g.values {
            for &a in &g.alphas {
                points.push(family.point_for(x, a));
            }
        }
    }
    if points.is_empty() {
        return Err(CliError::Config("scan needs points or products".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.alpha > 0.0 && p.t2 > 0.0 && p.alpha.is_finite() && p.t2.is_finite())) {
        return Err(CliError::Config(format!("scan point {p:?} needs positive alpha and t2")));
    }
    family.driven(points[0]).case_label()?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let rows: Vec<ScanRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&p| adiabatic::scan_point(&family, p))
            .collect::<lmg_core::Result<Vec<_>>>()
    })?;

    let mut table = Table::new(
        ["alpha", "t2", "t1", "adiabaticity", "efficiency"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for r in &rows {
        table.push(vec![r.alpha, r.t2, job.ramp_ratio * r.t2, r.adiabaticity, r.efficiency]);
    }

    // Spread of the efficiency among points that share a product value.
    let mut spreads = Vec::new();
    if let Some(g) = &job.products {
        let base = job.points.len();
        for (i, &x) in g.values.iter().enumerate() {
            let chunk = &rows[base + i * g.alphas.len()..base + (i + 1) * g.alphas.len()];
            let lo = chunk.iter().map(|r| r.efficiency).fold(f64::INFINITY, f64::min);
            let hi = chunk.iter().map(|r| r.efficiency).fold(f64::NEG_INFINITY, f64::max);
            spreads.push(json!({"adiabaticity": x, "spread": hi - lo}));
        }
    }
    let above = job.threshold.map(|x0| {
        rows.iter()
            .filter(|r| r.adiabaticity >= x0)
            .map(|r| r.efficiency)
            .fold(f64::INFINITY, f64::min)
    });

    let mut defaults = base_defaults();
    defaults.insert(
        "per_point".into(),
        json!("tanh pair with alpha and T2, T1 = ramp_ratio T2; default window and dt; separable case start; case target"),
    );
    defaults.insert("adiabaticity".into(), json!("2 alpha sqrt(|xi| T2)"));
    defaults.insert("threads".into(), json!(pool.current_num_threads()));
    let results = json!({
        "xi": xi,
        "lambda": lambda,
        "mu": mu,
        "rows": rows,
        "product_spread": spreads,
        "threshold": job.threshold,
        "min_efficiency_at_or_above_threshold": above.filter(|v| v.is_finite()),
    });
    let mut summary = vec![format!("{} scan points", rows.len())];
    if let (Some(x0), Some(v)) = (job.threshold, above) {
        summary.push(format!("min efficiency for adiabaticity >= {x0}: {v:.6}"));
    }
    Ok(CommandOutput {
        tables: vec![("scan".into(), table)],
        resolved: to_value(job),
        defaults,
        results,
        summary,
        failure: None,
    })
}
