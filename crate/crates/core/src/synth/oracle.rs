use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::autodiff::{sigmoid, Tensor};
use crate::data::{ColumnKind, FeatureColumn, RawDataset, SurvivalDataset};
use crate::model::survival_from_hazard;
use crate::rng::{stream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n_samples: usize,
    pub feature_dim: usize,
    pub t_max: usize,
    pub seed: u64,
    /// Independent uniform censoring on `0..=t_max` when set.
    pub censoring: bool,
    /// The first this many features are 0/1 coin flips instead of `U[0, 1]`.
    pub binary_features: usize,
    /// Standard deviation of the hazard weights.
    pub weight_scale: f64,
    /// Range of the per-time hazard logit offsets.
    pub offset_range: (f64, f64),
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_samples: 5000,
            feature_dim: 6,
            t_max: 100,
            seed: 0,
            censoring: true,
            binary_features: 0,
            weight_scale: 0.5,
            offset_range: (-4.0, 0.0),
        }
    }
}

/// `λ(t | x) = sigmoid(a · x + b_t)` for `t < t_max` and `λ(t_max | x) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleHazard {
    pub weights: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl OracleHazard {
    /// Weights drawn from `N(0, scale²)`, offsets evenly spaced over `range`.
    pub fn random<R: Rng + ?Sized>(
        feature_dim: usize,
        t_max: usize,
        scale: f64,
        range: (f64, f64),
        rng: &mut R,
    ) -> Self {
        let weights = (0..feature_dim)
            .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect();
        let steps = t_max.max(2) - 1;
        let offsets = (0..t_max)
            .map(|t| range.0 + (range.1 - range.0) * t as f64 / steps as f64)
            .collect();
        Self { weights, offsets }
    }

    pub fn t_max(&self) -> usize {
        self.offsets.len()
    }

    pub fn hazard(&self, x: &[f64]) -> Vec<f64> {
        let score: f64 = self.weights.iter().zip(x).map(|(a, v)| a * v).sum();
        let mut h: Vec<f64> = self.offsets.iter().map(|b| sigmoid(score + b)).collect();
        h.push(1.0);
        h
    }

    pub fn hazards(&self, x: &Tensor) -> Tensor {
        let rows: Vec<Vec<f64>> = (0..x.rows()).map(|i| self.hazard(x.row(i))).collect();
        Tensor::from_rows(&rows).expect("equal-length rows")
    }

    pub fn survival(&self, x: &Tensor) -> Tensor {
        let rows: Vec<Vec<f64>> = (0..x.rows())
            .map(|i| survival_from_hazard(&self.hazard(x.row(i))))
            .collect();
        Tensor::from_rows(&rows).expect("equal-length rows")
    }

    /// Walks the hazard from time 0 until the first event.
    pub fn sample_time<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> usize {
        let h = self.hazard(x);
        h.iter()
            .position(|&l| rng.random::<f64>() < l)
            .unwrap_or(h.len() - 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleData {
    pub data: SurvivalDataset,
    pub hazard: OracleHazard,
    /// Event time of every row, including censored ones.
    pub event_times: Vec<usize>,
}

impl OracleData {
    /// The generating survival curves of every row.
    pub fn true_survival(&self) -> Tensor {
        self.hazard.survival(&self.data.x)
    }

    /// The observed table with features `x1..xd` and integer times.
    pub fn to_raw(&self, binary_features: usize) -> RawDataset {
        let x = &self.data.x;
        RawDataset {
            features: (0..x.cols())
                .map(|j| FeatureColumn::Numeric {
                    name: format!("x{}", j + 1),
                    kind: if j < binary_features {
                        ColumnKind::Binary
                    } else {
                        ColumnKind::Real
                    },
                    values: (0..x.rows()).map(|i| Some(x.get(i, j))).collect(),
                })
                .collect(),
            times: self.data.taus.iter().map(|&t| t as f64).collect(),
            events: self.data.deltas.clone(),
        }
    }

    /// CSV of the hidden event times, one row per sample in dataset order.
    pub fn sidecar_csv(&self) -> String {
        let mut out = String::from("row,event_time\n");
        for (i, t) in self.event_times.iter().enumerate() {
            out.push_str(&format!("{i},{t}\n"));
        }
        out
    }

    /// Feature `j` of every row rendered as a group label.
    pub fn labels(&self, j: usize) -> Vec<String> {
        (0..self.data.len())
            .map(|i| format!("{}", self.data.x.get(i, j)))
            .collect()
    }
}

pub fn generate_oracle(config: &OracleConfig) -> Result<OracleData, SynthError> {
    if config.n_samples == 0 || config.feature_dim == 0 || config.t_max == 0 {
        return Err(SynthError::Config(
            "n_samples, feature_dim and t_max must be positive".into(),
        ));
    }
    if config.binary_features > config.feature_dim {
        return Err(SynthError::Config(format!(
            "binary_features ({}) exceeds feature_dim ({})",
            config.binary_features, config.feature_dim
        )));
    }
    if !(config.weight_scale >= 0.0 && config.weight_scale.is_finite()) {
        return Err(SynthError::Config(format!(
            "weight_scale must be non-negative, got {}",
            config.weight_scale
        )));
    }
    let mut rng = stream(config.seed, Stream::Synthetic);
    let mut censor_rng = stream(config.seed, Stream::SyntheticCensoring);
    let hazard = OracleHazard::random(
        config.feature_dim,
        config.t_max,
        config.weight_scale,
        config.offset_range,
        &mut rng,
    );
    let (n, d) = (config.n_samples, config.feature_dim);
    let mut x = Vec::with_capacity(n * d);
    let mut taus = Vec::with_capacity(n);
    let mut deltas = Vec::with_capacity(n);
    let mut event_times = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d)
            .map(|j| {
                if j < config.binary_features {
                    f64::from(u8::from(rng.random::<bool>()))
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let t = hazard.sample_time(&row, &mut rng);
        let c = if config.censoring {
            censor_rng.random_range(0..=config.t_max)
        } else {
            config.t_max
        };
        taus.push(t.min(c));
        deltas.push(t <= c);
        event_times.push(t);
        x.extend(row);
    }
    let data = SurvivalDataset::new(
        Tensor::new(n, d, x).expect("n × d values"),
        taus,
        deltas,
        config.t_max,
    );
    Ok(OracleData {
        data,
        hazard,
        event_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::pmf_curve;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn forced_final_event() {
        let h = OracleHazard {
            weights: vec![0.0; 3],
            offsets: vec![f64::NEG_INFINITY; 7],
        };
        let mut rng = stream(0, Stream::Probe);
        for _ in 0..100 {
            assert_eq!(h.sample_time(&[0.2, 0.4, 0.6], &mut rng), 7);
        }
    }

    #[test]
    fn event_times_follow_the_mass_function() {
        let mut rng = stream(1, Stream::Probe);
        let h = OracleHazard::random(3, 12, 1.0, (-3.0, 0.0), &mut rng);
        let x = [0.3, 0.8, 0.1];
        let p = pmf_curve(&h.hazard(&x));
        let draws = 100_000;
        let mut counts = vec![0usize; p.len()];
        for _ in 0..draws {
            counts[h.sample_time(&x, &mut rng)] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(&p)
            .map(|(&c, &pt)| (c as f64 - draws as f64 * pt).powi(2) / (draws as f64 * pt))
            .sum();
        let pval = ChiSquared::new((p.len() - 1) as f64).unwrap().sf(stat);
        assert!(pval > 0.01, "stat {stat}, p {pval}");
    }

    #[test]
    fn empirical_survival_within_binomial_band() {
        let cfg = OracleConfig {
            n_samples: 4000,
            feature_dim: 2,
            t_max: 10,
            censoring: false,
            weight_scale: 0.0,
            offset_range: (-2.0, 0.0),
            ..OracleConfig::default()
        };
        let o = generate_oracle(&cfg).unwrap();
        let s = o.true_survival();
        for t in 0..=cfg.t_max {
            let emp =
                o.event_times.iter().filter(|&&e| e > t).count() as f64 / cfg.n_samples as f64;
            let p = s.get(0, t);
            let band = 3.0 * (p * (1.0 - p) / cfg.n_samples as f64).sqrt() + 1e-12;
            assert!((emp - p).abs() <= band, "t={t}: {emp} vs {p}");
        }
    }

    #[test]
    fn censoring_switch_and_binary_features() {
        let cfg = OracleConfig {
            n_samples: 500,
            binary_features: 2,
            ..OracleConfig::default()
        };
        let o = generate_oracle(&cfg).unwrap();
        assert!(o.data.deltas.iter().any(|d| !d));
        for i in 0..o.data.len() {
            assert!(matches!(o.data.x.get(i, 0), 0.0 | 1.0));
            assert!(o.data.taus[i] <= o.event_times[i]);
        }
        let mut labels = o.labels(1);
        labels.sort();
        labels.dedup();
        assert_eq!(labels, vec!["0", "1"]);
        let none = generate_oracle(&OracleConfig {
            censoring: false,
            ..cfg
        })
        .unwrap();
        assert!(none.data.deltas.iter().all(|&d| d));
        assert_eq!(none.data.taus, none.event_times);
        let raw = o.to_raw(2);
        assert_eq!(raw.features[0].kind(), ColumnKind::Binary);
        assert_eq!(raw.features[2].kind(), ColumnKind::Real);
        assert_eq!(raw.times[7], o.data.taus[7] as f64);
        assert_eq!(o.sidecar_csv().lines().count(), 501);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(generate_oracle(&OracleConfig {
            n_samples: 0,
            ..OracleConfig::default()
        })
        .is_err());
        assert!(generate_oracle(&OracleConfig {
            binary_features: 9,
            ..OracleConfig::default()
        })
        .is_err());
    }
}
