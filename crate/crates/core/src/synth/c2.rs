use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::autodiff::Tensor;
use crate::data::{ColumnKind, FeatureColumn, RawDataset, SurvivalDataset, TimeGrid};
use crate::rng::{stream, Stream};

/// Smallest exponential parameter used when the linear form vanishes.
pub const PARAM_FLOOR: f64 = 1e-6;

/// How `(10 x_a)² + 5 x_b` parameterizes the exponential distribution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpParam {
    /// The expression is the mean.
    #[default]
    Mean,
    /// The expression is the rate.
    Rate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct C2Config {
    pub n_samples: usize,
    pub feature_dim: usize,
    pub seed: u64,
    pub parameterization: ExpParam,
}

impl Default for C2Config {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            feature_dim: 4,
            seed: 0,
            parameterization: ExpParam::Mean,
        }
    }
}

/// Exponential event and censoring times with the event time kept for every
/// row, censored or not.
#[derive(Clone, Debug, PartialEq)]
pub struct C2Data {
    /// Features `x ~ U[0, 1]^d`.
    pub x: Tensor,
    pub event_times: Vec<f64>,
    pub censor_times: Vec<f64>,
}

fn exp_draw<R: Rng + ?Sized>(expr: f64, param: ExpParam, rng: &mut R) -> f64 {
    let rate = match param {
        ExpParam::Mean => 1.0 / expr.max(PARAM_FLOOR),
        ExpParam::Rate => expr.max(PARAM_FLOOR),
    };
    Exp::new(rate).expect("positive finite rate").sample(rng)
}

/// `(10 x_a)² + 5 x_b`.
pub fn c2_expression(xa: f64, xb: f64) -> f64 {
    (10.0 * xa).powi(2) + 5.0 * xb
}

pub fn generate_c2(config: &C2Config) -> Result<C2Data, SynthError> {
    if config.n_samples == 0 {
        return Err(SynthError::Config("n_samples must be at least 1".into()));
    }
    if config.feature_dim < 4 {
        return Err(SynthError::Config(format!(
            "feature_dim must be at least 4, got {}",
            config.feature_dim
        )));
    }
    let (n, d) = (config.n_samples, config.feature_dim);
    let mut rng = stream(config.seed, Stream::Synthetic);
    let mut censor_rng = stream(config.seed, Stream::SyntheticCensoring);
    let x: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let mut event_times = Vec::with_capacity(n);
    let mut censor_times = Vec::with_capacity(n);
    for row in x.chunks(d) {
        event_times.push(exp_draw(
            c2_expression(row[0], row[2]),
            config.parameterization,
            &mut rng,
        ));
        censor_times.push(exp_draw(
            c2_expression(row[1], row[3]),
            config.parameterization,
            &mut censor_rng,
        ));
    }
    Ok(C2Data {
        x: Tensor::new(n, d, x).expect("n × d values"),
        event_times,
        censor_times,
    })
}

impl C2Data {
    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    /// `min(T, C)`.
    pub fn observed_times(&self) -> Vec<f64> {
        self.event_times
            .iter()
            .zip(&self.censor_times)
            .map(|(t, c)| t.min(*c))
            .collect()
    }

    /// `T ≤ C`.
    pub fn events(&self) -> Vec<bool> {
        self.event_times
            .iter()
            .zip(&self.censor_times)
            .map(|(t, c)| t <= c)
            .collect()
    }

    pub fn censoring_fraction(&self) -> f64 {
        self.events().iter().filter(|&&e| !e).count() as f64 / self.len() as f64
    }

    /// The observed table with features `x1..xd`, ready for the data pipeline.
    pub fn to_raw(&self) -> RawDataset {
        let d = self.x.cols();
        RawDataset {
            features: (0..d)
                .map(|j| FeatureColumn::Numeric {
                    name: format!("x{}", j + 1),
                    kind: ColumnKind::Real,
                    values: (0..self.len()).map(|i| Some(self.x.get(i, j))).collect(),
                })
                .collect(),
            times: self.observed_times(),
            events: self.events(),
        }
    }

    /// Observed times on `grid`, with the hidden event time of every row
    /// mapped onto the same grid.
    pub fn discretize(&self, grid: &TimeGrid) -> (SurvivalDataset, Vec<usize>) {
        let data = SurvivalDataset::new(
            self.x.clone(),
            grid.discretize(&self.observed_times()),
            self.events(),
            grid.t_max(),
        );
        (data, grid.discretize(&self.event_times))
    }

    /// CSV of the hidden times, one row per sample in dataset order.
    pub fn sidecar_csv(&self) -> String {
        let mut out = String::from("row,event_time,censor_time\n");
        for (i, (t, c)) in self.event_times.iter().zip(&self.censor_times).enumerate() {
            out.push_str(&format!("{i},{t},{c}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BinningScheme;

    #[test]
    fn deterministic_and_plausibly_censored() {
        let cfg = C2Config::default();
        let a = generate_c2(&cfg).unwrap();
        assert_eq!(a, generate_c2(&cfg).unwrap());
        let frac = a.censoring_fraction();
        assert!(frac > 0.2 && frac < 0.8, "{frac}");
        let other = generate_c2(&C2Config { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.x, other.x);
    }

    #[test]
    fn hidden_time_exceeds_censoring_for_censored_rows() {
        for param in [ExpParam::Mean, ExpParam::Rate] {
            let d = generate_c2(&C2Config {
                parameterization: param,
                ..C2Config::default()
            })
            .unwrap();
            for ((t, c), e) in d.event_times.iter().zip(&d.censor_times).zip(d.events()) {
                assert!(t.is_finite() && c.is_finite() && *t >= 0.0);
                assert_eq!(e, t <= c);
            }
        }
    }

    #[test]
    fn symmetric_rows_censor_half_the_time() {
        // x1 = x2 and x3 = x4 makes T and C identically distributed
        let mut rng = stream(3, Stream::Probe);
        let trials = 20_000;
        let mut censored = 0;
        for _ in 0..trials {
            let e = c2_expression(0.3, 0.7);
            let t = exp_draw(e, ExpParam::Mean, &mut rng);
            let c = exp_draw(e, ExpParam::Mean, &mut rng);
            censored += usize::from(t > c);
        }
        let frac = censored as f64 / trials as f64;
        // binomial standard error at p = 1/2 is 0.0035
        assert!((frac - 0.5).abs() < 0.0106, "{frac}");
    }

    #[test]
    fn zero_expression_stays_finite() {
        let mut rng = stream(0, Stream::Probe);
        for param in [ExpParam::Mean, ExpParam::Rate] {
            let t = exp_draw(c2_expression(0.0, 0.0), param, &mut rng);
            assert!(t.is_finite() && t >= 0.0);
        }
    }

    #[test]
    fn rejects_small_feature_dim() {
        assert!(generate_c2(&C2Config {
            feature_dim: 3,
            ..C2Config::default()
        })
        .is_err());
    }

    #[test]
    fn raw_table_and_grid() {
        let d = generate_c2(&C2Config {
            n_samples: 50,
            feature_dim: 6,
            ..C2Config::default()
        })
        .unwrap();
        let raw = d.to_raw();
        assert_eq!(raw.features.len(), 6);
        assert_eq!(raw.features[0].name(), "x1");
        let grid = TimeGrid::fit(&raw.times, 20, BinningScheme::EqualWidth).unwrap();
        let (data, truth) = d.discretize(&grid);
        assert_eq!(data.len(), 50);
        assert_eq!(truth.len(), 50);
        assert_eq!(d.sidecar_csv().lines().count(), 51);
    }
}
