use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{check_curves, MetricError};
use crate::autodiff::Tensor;

pub const N_CALIBRATION_BINS: usize = 10;
pub const DCAL_LEVEL: f64 = 0.05;

/// Which survival value stands in for the probability integral transform of
/// a discrete event time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PitConvention {
    /// `Ŝ(τ_i | x_i)`, the survival at the end of the event bin.
    BinEnd,
    /// `(Ŝ(τ_i − 1 | x_i) + Ŝ(τ_i | x_i)) / 2`, the centre of the mass the
    /// event bin removes.
    #[default]
    Midpoint,
}

/// Predicted survival at the observed event time of every uncensored subject.
pub fn event_survival(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    convention: PitConvention,
) -> Result<Vec<f64>, MetricError> {
    check_curves(survival, taus, deltas)?;
    Ok(taus
        .iter()
        .zip(deltas)
        .enumerate()
        .filter(|(_, (_, &d))| d)
        .map(|(i, (&t, _))| {
            let end = survival.get(i, t);
            match convention {
                PitConvention::BinEnd => end,
                PitConvention::Midpoint => {
                    let start = if t == 0 { 1.0 } else { survival.get(i, t - 1) };
                    0.5 * (start + end)
                }
            }
        })
        .collect())
}

/// Counts of `values` in ten equal-width bins on `[0, 1]`.
pub fn histogram(values: &[f64]) -> [usize; N_CALIBRATION_BINS] {
    let mut counts = [0; N_CALIBRATION_BINS];
    for &v in values {
        let k = (v.clamp(0.0, 1.0) * N_CALIBRATION_BINS as f64) as usize;
        counts[k.min(N_CALIBRATION_BINS - 1)] += 1;
    }
    counts
}

/// `KL(P ‖ uniform) / ln 10` of binned counts, with half a pseudo-count per
/// bin, clipped to `[0, 1]`.
pub fn ddc_from_counts(counts: &[usize; N_CALIBRATION_BINS]) -> f64 {
    let k = N_CALIBRATION_BINS as f64;
    let total = counts.iter().sum::<usize>() as f64 + 0.5 * k;
    let kl: f64 = counts
        .iter()
        .map(|&c| {
            let p = (c as f64 + 0.5) / total;
            p * (p * k).ln()
        })
        .sum();
    (kl / k.ln()).clamp(0.0, 1.0)
}

/// Distributional divergence for calibration.
pub fn ddc(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    convention: PitConvention,
) -> Result<f64, MetricError> {
    let values = event_survival(survival, taus, deltas, convention)?;
    if values.is_empty() {
        return Err(MetricError::TooFewEvents { needed: 1, got: 0 });
    }
    Ok(ddc_from_counts(&histogram(&values)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DCalibration {
    pub statistic: f64,
    pub p_value: f64,
}

impl DCalibration {
    pub fn passed(&self) -> bool {
        self.p_value > DCAL_LEVEL
    }
}

/// Pearson chi-squared statistic against equal expected counts, with its
/// upper-tail p-value on nine degrees of freedom.
pub fn chi_squared_uniform(counts: &[usize; N_CALIBRATION_BINS]) -> DCalibration {
    let n: usize = counts.iter().sum();
    let expected = n as f64 / N_CALIBRATION_BINS as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist =
        ChiSquared::new((N_CALIBRATION_BINS - 1) as f64).expect("positive degrees of freedom");
    DCalibration {
        statistic,
        p_value: dist.sf(statistic).clamp(0.0, 1.0),
    }
}

pub fn d_calibration(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    convention: PitConvention,
) -> Result<DCalibration, MetricError> {
    let values = event_survival(survival, taus, deltas, convention)?;
    if values.len() < N_CALIBRATION_BINS {
        return Err(MetricError::TooFewEvents {
            needed: N_CALIBRATION_BINS,
            got: values.len(),
        });
    }
    Ok(chi_squared_uniform(&histogram(&values)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub predicted: f64,
    pub observed: f64,
}

/// For each level `q`, the fraction of uncensored subjects whose predicted
/// risk at their event time is at most `q`.
pub fn calibration_plot_data(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    quantiles: &[f64],
    convention: PitConvention,
) -> Result<Vec<CalibrationPoint>, MetricError> {
    let mut risks: Vec<f64> = event_survival(survival, taus, deltas, convention)?
        .into_iter()
        .map(|s| 1.0 - s)
        .collect();
    if risks.is_empty() {
        return Err(MetricError::TooFewEvents { needed: 1, got: 0 });
    }
    risks.sort_by(f64::total_cmp);
    let n = risks.len() as f64;
    Ok(quantiles
        .iter()
        .map(|&q| CalibrationPoint {
            predicted: q,
            observed: risks.partition_point(|&r| r <= q) as f64 / n,
        })
        .collect())
}

/// `k` evenly spaced levels strictly inside `(0, 1)`.
pub fn default_levels(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / (k + 1) as f64).collect()
}

pub fn max_deviation(points: &[CalibrationPoint]) -> f64 {
    points
        .iter()
        .map(|p| (p.predicted - p.observed).abs())
        .fold(0.0, f64::max)
}
