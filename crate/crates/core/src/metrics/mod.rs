//! Discrimination and calibration metrics for discrete-time survival curves.
//!
//! Predictions are passed as an `n × (t_max + 1)` tensor of survival
//! probabilities `Ŝ(t | x_i)`; risks are `1 − Ŝ`.

mod brier;
mod calibration;
mod concordance;
mod km;
mod subgroup;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Tensor;

pub use brier::{brier_curve, brier_score, ibs, trapezoid_mean, IPCW_FLOOR};
pub use calibration::{
    calibration_plot_data, chi_squared_uniform, d_calibration, ddc, ddc_from_counts,
    default_levels, event_survival, histogram, max_deviation, CalibrationPoint, DCalibration,
    PitConvention, DCAL_LEVEL, N_CALIBRATION_BINS,
};
pub use concordance::{c_index_integrated, c_index_td, CiWeighting};
pub use km::{censoring_km, kaplan_meier, SurvivalCurve};
pub use subgroup::{
    mean_curve, subgroup_analysis, subgroup_curves_csv, subgroup_table_csv, wasserstein_to_km,
    SubgroupResult, MIN_SUBGROUP_SIZE,
};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("no subjects")]
    Empty,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("time {t} outside the grid 0..={t_max}")]
    TimeOutOfRange { t: usize, t_max: usize },
    #[error("needs at least {needed} uncensored subjects, got {got}")]
    TooFewEvents { needed: usize, got: usize },
    #[error("undefined: {0}")]
    Undefined(&'static str),
    #[error("integration interval has zero length")]
    DegenerateInterval,
}

pub(crate) fn check_outcomes(taus: &[usize], deltas: &[bool]) -> Result<(), MetricError> {
    if taus.is_empty() {
        return Err(MetricError::Empty);
    }
    if taus.len() != deltas.len() {
        return Err(MetricError::Shape(format!(
            "{} times but {} event flags",
            taus.len(),
            deltas.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_curves(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
) -> Result<(), MetricError> {
    check_outcomes(taus, deltas)?;
    if survival.rows() != taus.len() {
        return Err(MetricError::Shape(format!(
            "{} curves for {} subjects",
            survival.rows(),
            taus.len()
        )));
    }
    if let Some(&t) = taus.iter().find(|&&t| t >= survival.cols()) {
        return Err(MetricError::TimeOutOfRange {
            t,
            t_max: survival.cols().saturating_sub(1),
        });
    }
    Ok(())
}

/// Nearest-rank `q`-quantile of the observed times.
pub fn time_quantile(taus: &[usize], q: f64) -> usize {
    let mut sorted = taus.to_vec();
    sorted.sort_unstable();
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    /// Quantiles of the observed times at which pointwise CI and Brier
    /// scores are reported.
    pub quantiles: Vec<f64>,
    /// Quantile of the observed times that ends the Brier integral.
    pub ibs_quantile: f64,
    pub ci_weighting: CiWeighting,
    pub pit: PitConvention,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            quantiles: vec![0.25, 0.5, 0.75],
            ibs_quantile: 0.95,
            ci_weighting: CiWeighting::Pairs,
            pit: PitConvention::Midpoint,
        }
    }
}

/// A pointwise metric at a quantile of the observed times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtQuantile {
    pub quantile: f64,
    pub time: usize,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupDistance {
    pub label: String,
    pub size: usize,
    pub wasserstein: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ci_integrated: f64,
    pub ci_at: Vec<AtQuantile>,
    pub ibs: f64,
    pub bs_at: Vec<AtQuantile>,
    pub ddc: f64,
    pub dcal_statistic: f64,
    pub dcal_pvalue: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroups: Option<Vec<SubgroupDistance>>,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "ci,ibs,ddc,dcal";

    pub fn dcal_passed(&self) -> bool {
        self.dcal_pvalue > DCAL_LEVEL
    }

    /// `ci,ibs,ddc,dcal` with the D-calibration column as a 0/1 pass flag.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.ci_integrated,
            self.ibs,
            self.ddc,
            u8::from(self.dcal_passed())
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metric reports serialize")
    }
}

/// Every headline metric of one set of predictions.
pub fn evaluate(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    options: &MetricOptions,
) -> Result<MetricReport, MetricError> {
    check_curves(survival, taus, deltas)?;
    let t_max = survival.cols() - 1;
    let g = censoring_km(taus, deltas, t_max)?;
    let ci_integrated = c_index_integrated(survival, taus, deltas, options.ci_weighting)?;
    let mut ci_at = Vec::with_capacity(options.quantiles.len());
    let mut bs_at = Vec::with_capacity(options.quantiles.len());
    for &q in &options.quantiles {
        let time = time_quantile(taus, q);
        ci_at.push(AtQuantile {
            quantile: q,
            time,
            value: c_index_td(survival, taus, deltas, time)?,
        });
        bs_at.push(AtQuantile {
            quantile: q,
            time,
            value: Some(brier_score(survival, taus, deltas, time, &g)?),
        });
    }
    let ibs = ibs(
        survival,
        taus,
        deltas,
        time_quantile(taus, options.ibs_quantile),
        &g,
    )?;
    let dcal = d_calibration(survival, taus, deltas, options.pit)?;
    Ok(MetricReport {
        ci_integrated,
        ci_at,
        ibs,
        bs_at,
        ddc: ddc(survival, taus, deltas, options.pit)?,
        dcal_statistic: dcal.statistic,
        dcal_pvalue: dcal.p_value,
        subgroups: None,
    })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub ci_mean: f64,
    pub ci_std: f64,
    pub ibs_mean: f64,
    pub ibs_std: f64,
    pub ddc_mean: f64,
    pub ddc_std: f64,
    pub dcal_passes: usize,
}

impl Summary {
    pub const CSV_HEADER: &'static str =
        "n,ci_mean,ci_std,ibs_mean,ibs_std,ddc_mean,ddc_std,dcal_passes";

    pub fn from_reports(reports: &[MetricReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let col =
            |f: fn(&MetricReport) -> f64| mean_std(&reports.iter().map(f).collect::<Vec<_>>());
        let (ci_mean, ci_std) = col(|r| r.ci_integrated);
        let (ibs_mean, ibs_std) = col(|r| r.ibs);
        let (ddc_mean, ddc_std) = col(|r| r.ddc);
        Some(Self {
            n: reports.len(),
            ci_mean,
            ci_std,
            ibs_mean,
            ibs_std,
            ddc_mean,
            ddc_std,
            dcal_passes: reports.iter().filter(|r| r.dcal_passed()).count(),
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.ci_mean,
            self.ci_std,
            self.ibs_mean,
            self.ibs_std,
            self.ddc_mean,
            self.ddc_std,
            self.dcal_passes
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn random_case(n: usize, len: usize, seed: u64) -> (Tensor, Vec<usize>, Vec<bool>) {
        let mut rng = stream(seed, Stream::Probe);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut s = 1.0;
                (0..len)
                    .map(|_| {
                        s *= 1.0 - 0.3 * rng.random::<f64>();
                        s
                    })
                    .collect()
            })
            .collect();
        let taus = (0..n).map(|_| rng.random_range(0..len)).collect();
        let deltas = (0..n).map(|_| rng.random::<f64>() < 0.7).collect();
        (Tensor::from_rows(&rows).unwrap(), taus, deltas)
    }

    #[test]
    fn report_is_in_range_and_serializes() {
        let (s, taus, deltas) = random_case(120, 8, 0);
        let r = evaluate(&s, &taus, &deltas, &MetricOptions::default()).unwrap();
        assert!((0.0..=1.0).contains(&r.ci_integrated));
        assert!(r.ibs >= 0.0);
        assert!((0.0..=1.0).contains(&r.ddc));
        assert!((0.0..=1.0).contains(&r.dcal_pvalue));
        assert_eq!(r.ci_at.len(), 3);
        let back: MetricReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(
            r.csv_row().split(',').count(),
            MetricReport::CSV_HEADER.split(',').count()
        );
    }

    #[test]
    fn report_is_permutation_invariant() {
        let (s, taus, deltas) = random_case(80, 6, 1);
        let perm: Vec<usize> = (0..80).map(|i| (i * 37) % 80).collect();
        let s2 = s.select_rows(&perm);
        let t2: Vec<usize> = perm.iter().map(|&i| taus[i]).collect();
        let d2: Vec<bool> = perm.iter().map(|&i| deltas[i]).collect();
        let a = evaluate(&s, &taus, &deltas, &MetricOptions::default()).unwrap();
        let b = evaluate(&s2, &t2, &d2, &MetricOptions::default()).unwrap();
        assert!((a.ci_integrated - b.ci_integrated).abs() < 1e-12);
        assert!((a.ibs - b.ibs).abs() < 1e-12);
        assert_eq!(a.ddc, b.ddc);
        assert_eq!(a.dcal_statistic, b.dcal_statistic);
    }

    #[test]
    fn quantiles_use_nearest_rank() {
        let taus = [5, 1, 3, 2, 4];
        assert_eq!(time_quantile(&taus, 0.0), 1);
        assert_eq!(time_quantile(&taus, 0.5), 3);
        assert_eq!(time_quantile(&taus, 0.95), 5);
        assert_eq!(time_quantile(&taus, 1.0), 5);
    }

    #[test]
    fn summary_matches_hand_average() {
        let (s, taus, deltas) = random_case(60, 6, 2);
        let r = evaluate(&s, &taus, &deltas, &MetricOptions::default()).unwrap();
        let one = Summary::from_reports(std::slice::from_ref(&r)).unwrap();
        assert_eq!(one.ci_std, 0.0);
        assert_eq!(one.ci_mean, r.ci_integrated);
        let mut r2 = r.clone();
        r2.ci_integrated = r.ci_integrated + 0.1;
        r2.dcal_pvalue = 0.0;
        let two = Summary::from_reports(&[r.clone(), r2]).unwrap();
        assert!((two.ci_mean - (r.ci_integrated + 0.05)).abs() < 1e-12);
        assert!((two.ci_std - 0.1 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(two.dcal_passes, usize::from(r.dcal_passed()));
        assert!(Summary::from_reports(&[]).is_none());
    }

    #[test]
    fn shape_errors() {
        let s = Tensor::filled(2, 3, 0.5);
        assert!(matches!(
            check_curves(&s, &[1], &[true]),
            Err(MetricError::Shape(_))
        ));
        assert!(matches!(
            check_curves(&s, &[1, 3], &[true, true]),
            Err(MetricError::TimeOutOfRange { .. })
        ));
        assert_eq!(check_curves(&s, &[], &[]), Err(MetricError::Empty));
    }
}
