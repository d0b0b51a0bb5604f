use serde::{Deserialize, Serialize};

use super::MetricError;

/// A survival curve on the integer grid `0..=t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub values: Vec<f64>,
}

impl SurvivalCurve {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn t_max(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `S(t)`, with `S(t) = 1` for negative `t` and the last value carried
    /// past the end of the grid.
    pub fn at(&self, t: isize) -> f64 {
        if t < 0 {
            1.0
        } else {
            self.values[(t as usize).min(self.t_max())]
        }
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.first().is_none_or(|&v| v <= 1.0)
            && self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Product-limit estimate `Ŝ(t) = ∏_{k ≤ t} (1 − d_k / n_k)` on `0..=t_max`.
pub fn kaplan_meier(
    taus: &[usize],
    deltas: &[bool],
    t_max: usize,
) -> Result<SurvivalCurve, MetricError> {
    super::check_outcomes(taus, deltas)?;
    let len = t_max.max(taus.iter().copied().max().unwrap_or(0)) + 1;
    let mut events = vec![0usize; len];
    let mut exits = vec![0usize; len];
    for (&t, &d) in taus.iter().zip(deltas) {
        exits[t] += 1;
        if d {
            events[t] += 1;
        }
    }
    let mut at_risk = taus.len();
    let mut s = 1.0;
    let mut values = Vec::with_capacity(t_max + 1);
    for t in 0..len {
        if events[t] > 0 {
            s *= 1.0 - events[t] as f64 / at_risk as f64;
        }
        at_risk -= exits[t];
        if t <= t_max {
            values.push(s);
        }
    }
    Ok(SurvivalCurve::new(values))
}

/// Kaplan–Meier estimate of the censoring distribution (event flags flipped).
pub fn censoring_km(
    taus: &[usize],
    deltas: &[bool],
    t_max: usize,
) -> Result<SurvivalCurve, MetricError> {
    let flipped: Vec<bool> = deltas.iter().map(|d| !d).collect();
    kaplan_meier(taus, &flipped, t_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Product-limit estimate recomputed from scratch at every time.
    fn brute_km(taus: &[usize], deltas: &[bool], t: usize) -> f64 {
        let mut s = 1.0;
        for k in 0..=t {
            let n: usize = taus.iter().filter(|&&x| x >= k).count();
            let d: usize = taus
                .iter()
                .zip(deltas)
                .filter(|(&x, &e)| x == k && e)
                .count();
            if d > 0 {
                s *= (n - d) as f64 / n as f64;
            }
        }
        s
    }

    #[test]
    fn hand_example() {
        let km = kaplan_meier(&[1, 2, 3], &[true, false, true], 4).unwrap();
        let want = [1.0, 2.0 / 3.0, 2.0 / 3.0, 0.0, 0.0];
        assert!(
            km.values
                .iter()
                .zip(want)
                .all(|(a, b)| (a - b).abs() < 1e-15),
            "{:?}",
            km.values
        );
    }

    #[test]
    fn all_censored_is_flat() {
        let km = kaplan_meier(&[0, 3, 5], &[false; 3], 6).unwrap();
        assert_eq!(km.values, vec![1.0; 7]);
    }

    #[test]
    fn no_censoring_is_empirical_survival() {
        let taus = [0, 1, 1, 4, 2, 2, 2, 5];
        let km = kaplan_meier(&taus, &[true; 8], 6).unwrap();
        for t in 0..=6 {
            let frac = taus.iter().filter(|&&x| x > t).count() as f64 / 8.0;
            assert!((km.values[t] - frac).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_brute_force_on_every_censoring_pattern() {
        let taus = [0, 1, 2, 1, 0, 2, 2, 1];
        for mask in 0u32..256 {
            let deltas: Vec<bool> = (0..8).map(|b| mask >> b & 1 == 1).collect();
            let km = kaplan_meier(&taus, &deltas, 2).unwrap();
            for t in 0..=2 {
                assert!((km.values[t] - brute_km(&taus, &deltas, t)).abs() < 1e-12);
            }
            assert!(km.is_non_increasing());
        }
    }

    #[test]
    fn curve_lookup_extends_both_ends() {
        let c = SurvivalCurve::new(vec![0.9, 0.5]);
        assert_eq!(c.at(-1), 1.0);
        assert_eq!(c.at(1), 0.5);
        assert_eq!(c.at(7), 0.5);
    }

    #[test]
    fn rejects_empty() {
        assert!(kaplan_meier(&[], &[], 3).is_err());
    }
}
