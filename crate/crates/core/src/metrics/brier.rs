use super::{check_curves, km::SurvivalCurve, MetricError};
use crate::autodiff::Tensor;

/// Lower bound on the censoring survival used as an inverse weight.
pub const IPCW_FLOOR: f64 = 1e-3;

/// Censoring-weighted Brier score at `t`.
///
/// `censor_km` is the Kaplan–Meier curve of the censoring times. Subjects
/// with an event by `t` are weighted by `1 / Ĝ(τ_i⁻)`, subjects still at risk
/// after `t` by `1 / Ĝ(t)`, and subjects censored by `t` contribute nothing.
pub fn brier_score(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    t: usize,
    censor_km: &SurvivalCurve,
) -> Result<f64, MetricError> {
    check_curves(survival, taus, deltas)?;
    if t >= survival.cols() {
        return Err(MetricError::TimeOutOfRange {
            t,
            t_max: survival.cols() - 1,
        });
    }
    let g_t = censor_km.at(t as isize).max(IPCW_FLOOR);
    let mut total = 0.0;
    for i in 0..taus.len() {
        let s = survival.get(i, t);
        if taus[i] <= t && deltas[i] {
            let g = censor_km.at(taus[i] as isize - 1).max(IPCW_FLOOR);
            total += s * s / g;
        } else if taus[i] > t {
            total += (1.0 - s) * (1.0 - s) / g_t;
        }
    }
    Ok(total / taus.len() as f64)
}

/// Brier score at every grid point `0..=t_end`.
pub fn brier_curve(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    t_end: usize,
    censor_km: &SurvivalCurve,
) -> Result<Vec<f64>, MetricError> {
    (0..=t_end)
        .map(|t| brier_score(survival, taus, deltas, t, censor_km))
        .collect()
}

/// Trapezoidal integral of `values` over unit-spaced points, divided by the
/// interval length.
pub fn trapezoid_mean(values: &[f64]) -> Result<f64, MetricError> {
    if values.len() < 2 {
        return Err(MetricError::DegenerateInterval);
    }
    let area: f64 = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    Ok(area / (values.len() - 1) as f64)
}

/// Integrated Brier score over `[0, t_end]`.
pub fn ibs(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    t_end: usize,
    censor_km: &SurvivalCurve,
) -> Result<f64, MetricError> {
    if t_end == 0 {
        return Err(MetricError::DegenerateInterval);
    }
    trapezoid_mean(&brier_curve(survival, taus, deltas, t_end, censor_km)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::km::censoring_km;

    fn step_predictions(taus: &[usize], len: usize) -> Tensor {
        let rows: Vec<Vec<f64>> = taus
            .iter()
            .map(|&tau| (0..len).map(|t| if t < tau { 1.0 } else { 0.0 }).collect())
            .collect();
        Tensor::from_rows(&rows).unwrap()
    }

    #[test]
    fn perfect_step_predictions_score_zero() {
        let taus = [1, 3, 4, 2, 5];
        let deltas = [true; 5];
        let s = step_predictions(&taus, 6);
        let g = censoring_km(&taus, &deltas, 5).unwrap();
        for t in 0..6 {
            assert_eq!(brier_score(&s, &taus, &deltas, t, &g).unwrap(), 0.0);
        }
        assert_eq!(ibs(&s, &taus, &deltas, 5, &g).unwrap(), 0.0);
    }

    #[test]
    fn constant_half_scores_quarter() {
        let taus = [0, 1, 3, 4, 2];
        let deltas = [true; 5];
        let s = Tensor::filled(5, 5, 0.5);
        let g = censoring_km(&taus, &deltas, 4).unwrap();
        for t in 0..5 {
            assert!((brier_score(&s, &taus, &deltas, t, &g).unwrap() - 0.25).abs() < 1e-15);
        }
        assert!((ibs(&s, &taus, &deltas, 4, &g).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn uncensored_reduces_to_squared_error() {
        let taus = [0, 2, 3, 1];
        let deltas = [true; 4];
        let rows = [
            [0.9, 0.7, 0.4, 0.1],
            [0.8, 0.8, 0.5, 0.5],
            [0.6, 0.3, 0.2, 0.0],
            [1.0, 0.5, 0.5, 0.5],
        ];
        let s = Tensor::from_rows(&rows).unwrap();
        let g = censoring_km(&taus, &deltas, 3).unwrap();
        for t in 0..4 {
            let want: f64 = (0..4)
                .map(|i| {
                    let alive = if taus[i] > t { 1.0 } else { 0.0 };
                    (rows[i][t] - alive).powi(2)
                })
                .sum::<f64>()
                / 4.0;
            assert!((brier_score(&s, &taus, &deltas, t, &g).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn censored_subjects_are_reweighted() {
        // one of three subjects censored at 1: G = 1 on 0, then 2/3
        let taus = [1, 1, 3];
        let deltas = [true, false, true];
        let s = Tensor::filled(3, 4, 0.5);
        let g = censoring_km(&taus, &deltas, 3).unwrap();
        assert!(g
            .values
            .iter()
            .zip([1.0, 2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0])
            .all(|(a, b)| (a - b).abs() < 1e-15));
        // t = 2: subject 0 had its event (weight 1/G(0) = 1), subject 1 drops
        // out, subject 2 is at risk (weight 1/G(2) = 3/2)
        let want = (0.25 * 1.0 + 0.25 * 1.5) / 3.0;
        assert!((brier_score(&s, &taus, &deltas, 2, &g).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn weight_floor_applies() {
        let g = SurvivalCurve::new(vec![1.0, 0.0, 0.0]);
        let s = Tensor::filled(1, 3, 0.0);
        assert_eq!(
            brier_score(&s, &[2], &[true], 1, &g).unwrap(),
            1.0 / IPCW_FLOOR
        );
    }

    #[test]
    fn trapezoid_hand_case() {
        // points 0.1, 0.3, 0.2: area 0.2 + 0.25 = 0.45 over length 2
        assert!((trapezoid_mean(&[0.1, 0.3, 0.2]).unwrap() - 0.225).abs() < 1e-15);
        assert!(trapezoid_mean(&[0.4]).is_err());
    }
}
