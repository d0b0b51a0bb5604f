use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::km::{kaplan_meier, SurvivalCurve};
use super::{check_curves, MetricError};
use crate::autodiff::Tensor;

/// Subgroups smaller than this are skipped.
pub const MIN_SUBGROUP_SIZE: usize = 5;

/// `Σ_t |a(t) − b(t)| · Δt` with the grid rescaled to `[0, 1]`, so
/// `Δt = 1 / len`.
pub fn wasserstein_to_km(model: &SurvivalCurve, km: &SurvivalCurve) -> Result<f64, MetricError> {
    if model.len() != km.len() || model.is_empty() {
        return Err(MetricError::Shape(format!(
            "curves on different grids ({} and {} points)",
            model.len(),
            km.len()
        )));
    }
    let dt = 1.0 / model.len() as f64;
    Ok(model
        .values
        .iter()
        .zip(&km.values)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * dt)
}

/// Pointwise average of the rows of `survival` selected by `rows`.
pub fn mean_curve(survival: &Tensor, rows: &[usize]) -> SurvivalCurve {
    let mut values = vec![0.0; survival.cols()];
    for &i in rows {
        for (v, s) in values.iter_mut().zip(survival.row(i)) {
            *v += s;
        }
    }
    let n = rows.len().max(1) as f64;
    SurvivalCurve::new(values.into_iter().map(|v| v / n).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupResult {
    pub label: String,
    pub size: usize,
    pub model: SurvivalCurve,
    pub km: SurvivalCurve,
    pub wasserstein: f64,
}

/// Mean predicted curve against the Kaplan–Meier curve for every distinct
/// label, in label order.
pub fn subgroup_analysis(
    survival: &Tensor,
    labels: &[String],
    taus: &[usize],
    deltas: &[bool],
    min_size: usize,
) -> Result<Vec<SubgroupResult>, MetricError> {
    check_curves(survival, taus, deltas)?;
    if labels.len() != taus.len() {
        return Err(MetricError::Shape(format!(
            "{} labels for {} subjects",
            labels.len(),
            taus.len()
        )));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(l.as_str()).or_default().push(i);
    }
    let t_max = survival.cols() - 1;
    let mut out = Vec::new();
    for (label, rows) in groups {
        if rows.len() < min_size {
            log::warn!(
                "subgroup '{label}' has {} subjects (< {min_size}); skipped",
                rows.len()
            );
            continue;
        }
        let g_taus: Vec<usize> = rows.iter().map(|&i| taus[i]).collect();
        let g_deltas: Vec<bool> = rows.iter().map(|&i| deltas[i]).collect();
        let km = kaplan_meier(&g_taus, &g_deltas, t_max)?;
        let model = mean_curve(survival, &rows);
        let wasserstein = wasserstein_to_km(&model, &km)?;
        out.push(SubgroupResult {
            label: label.to_string(),
            size: rows.len(),
            model,
            km,
            wasserstein,
        });
    }
    Ok(out)
}

/// Long-format CSV with one row per subgroup and time point.
pub fn subgroup_curves_csv(results: &[SubgroupResult]) -> String {
    let mut out = String::from("subgroup,t,model,km\n");
    for r in results {
        for (t, (m, k)) in r.model.values.iter().zip(&r.km.values).enumerate() {
            out.push_str(&format!("{},{t},{m},{k}\n", r.label));
        }
    }
    out
}

pub fn subgroup_table_csv(results: &[SubgroupResult]) -> String {
    let mut out = String::from("subgroup,size,wasserstein\n");
    for r in results {
        out.push_str(&format!("{},{},{}\n", r.label, r.size, r.wasserstein));
    }
    out
}
