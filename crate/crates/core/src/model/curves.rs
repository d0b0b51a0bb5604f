use super::ModelError;

/// `S(t) = ∏_{t' ≤ t} (1 − λ(t'))`.
pub fn survival_from_hazard(hazard: &[f64]) -> Vec<f64> {
    let mut s = 1.0;
    hazard
        .iter()
        .map(|&l| {
            s *= 1.0 - l;
            s
        })
        .collect()
}

/// `p(τ) = λ(τ) · S(τ − 1)` with `S(−1) = 1`.
pub fn pmf_from_hazard(hazard: &[f64], tau: usize) -> Result<f64, ModelError> {
    if tau >= hazard.len() {
        return Err(ModelError::TimeOutOfRange {
            tau,
            t_max: hazard.len().saturating_sub(1),
        });
    }
    let before: f64 = hazard[..tau].iter().map(|l| 1.0 - l).product();
    Ok(hazard[tau] * before)
}

/// The event-time mass function at every grid point.
pub fn pmf_curve(hazard: &[f64]) -> Vec<f64> {
    let mut s = 1.0;
    hazard
        .iter()
        .map(|&l| {
            let p = l * s;
            s *= 1.0 - l;
            p
        })
        .collect()
}

/// `R(t) = 1 − S(t)`.
pub fn risk(hazard: &[f64], t: usize) -> f64 {
    1.0 - survival_from_hazard(&hazard[..=t])[t]
}

pub fn risk_curve(hazard: &[f64]) -> Vec<f64> {
    survival_from_hazard(hazard)
        .into_iter()
        .map(|s| 1.0 - s)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_hazard_never_fails() {
        assert_eq!(survival_from_hazard(&[0.0; 6]), vec![1.0; 6]);
        assert_eq!(risk_curve(&[0.0; 6]), vec![0.0; 6]);
    }

    #[test]
    fn half_hazard_hand_values() {
        let h = [0.5; 5];
        assert_eq!(survival_from_hazard(&h)[2], 0.125);
        assert_eq!(pmf_from_hazard(&h, 2).unwrap(), 0.125);
        assert_eq!(risk(&h, 2), 0.875);
        assert_eq!(pmf_from_hazard(&h, 0).unwrap(), 0.5);
    }

    #[test]
    fn out_of_range_tau() {
        assert!(matches!(
            pmf_from_hazard(&[0.1, 0.2], 2),
            Err(ModelError::TimeOutOfRange { tau: 2, t_max: 1 })
        ));
    }

    #[test]
    fn matches_loop_oracle() {
        let mut rng = stream(0, Stream::Probe);
        for _ in 0..200 {
            let h: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            let s = survival_from_hazard(&h);
            for t in 0..h.len() {
                let mut oracle = 1.0;
                for k in 0..=t {
                    oracle *= 1.0 - h[k];
                }
                assert!((s[t] - oracle).abs() <= 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn mass_and_tail_sum_to_one(h in proptest::collection::vec(1e-7f64..1.0 - 1e-7, 1..120)) {
            let total: f64 = pmf_curve(&h).iter().sum::<f64>() + *survival_from_hazard(&h).last().unwrap();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }

        #[test]
        fn survival_monotone(h in proptest::collection::vec(0.0f64..1.0, 1..80)) {
            let s = survival_from_hazard(&h);
            prop_assert!(s.windows(2).all(|w| w[1] <= w[0]));
            let r = risk_curve(&h);
            for t in 0..h.len() {
                prop_assert!((r[t] + s[t] - 1.0).abs() <= f64::EPSILON);
            }
        }

        #[test]
        fn pmf_curve_agrees_with_pointwise(h in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let c = pmf_curve(&h);
            for t in 0..h.len() {
                prop_assert!((c[t] - pmf_from_hazard(&h, t).unwrap()).abs() <= 1e-15);
            }
        }
    }
}
