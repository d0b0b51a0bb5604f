use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{OptimizerKind, OptimizerState, TrainError};
use crate::data::SurvivalDataset;
use crate::model::{Activation, ModelConfig};

/// Which auxiliary objective accompanies the likelihood.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "nll")]
    Nll,
    #[serde(rename = "nll+nce")]
    NllNce,
    #[serde(rename = "nll+rank")]
    NllRank,
    #[serde(rename = "consurv")]
    ConSurv,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Nll,
        Variant::NllNce,
        Variant::NllRank,
        Variant::ConSurv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Nll => "nll",
            Variant::NllNce => "nll+nce",
            Variant::NllRank => "nll+rank",
            Variant::ConSurv => "consurv",
        }
    }

    /// Whether the auxiliary step is contrastive (as opposed to ranking or
    /// absent).
    pub fn is_contrastive(self) -> bool {
        matches!(self, Variant::NllNce | Variant::ConSurv)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                TrainError::config(
                    "variant",
                    format!("unknown variant '{s}' (expected nll, nll+nce, nll+rank or consurv)"),
                )
            })
    }
}

/// How `alpha` is interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    /// `alpha` is a margin in time bins.
    #[default]
    Bins,
    /// `alpha` is a percentile in `[0, 100]` of the event-to-censoring gaps
    /// of comparable uncensored/censored training pairs.
    Percentile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Step size of the auxiliary (contrastive or ranking) phase.
    pub lr_contrastive: f64,
    /// Step size of the likelihood phase.
    pub lr_nll: f64,
    pub optimizer: OptimizerKind,
    pub optimizer_state: OptimizerState,
    pub beta: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub alpha_mode: AlphaMode,
    pub nu: f64,
    pub corruption_rate: f64,
    pub patience: usize,
    pub seed: u64,
    pub kappa: f64,
    pub hidden_dim: usize,
    pub depth: usize,
    pub embedding_dim: usize,
    pub projection_depth: usize,
    pub hazard_depth: usize,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 64,
            lr_contrastive: 1e-3,
            lr_nll: 1e-3,
            optimizer: OptimizerKind::Adam,
            optimizer_state: OptimizerState::PerPhase,
            beta: 1.0,
            sigma: 0.75,
            alpha: 7.0,
            alpha_mode: AlphaMode::Bins,
            nu: 0.05,
            corruption_rate: 0.6,
            patience: 10,
            seed: 0,
            kappa: crate::losses::DEFAULT_KAPPA,
            hidden_dim: 32,
            depth: 3,
            embedding_dim: 32,
            projection_depth: 2,
            hazard_depth: 2,
            activation: Activation::Relu,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("lr_contrastive", self.lr_contrastive),
            ("lr_nll", self.lr_nll),
            ("sigma", self.sigma),
            ("nu", self.nu),
            ("kappa", self.kappa),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TrainError::config(
                    field,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(TrainError::config(
                "beta",
                format!("must be non-negative, got {}", self.beta),
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(TrainError::config(
                "alpha",
                format!("must be non-negative, got {}", self.alpha),
            ));
        }
        if self.alpha_mode == AlphaMode::Percentile && self.alpha > 100.0 {
            return Err(TrainError::config(
                "alpha",
                format!("percentile must lie in [0, 100], got {}", self.alpha),
            ));
        }
        if !(0.0..=1.0).contains(&self.corruption_rate) {
            return Err(TrainError::config(
                "corruption_rate",
                format!("must lie in [0, 1], got {}", self.corruption_rate),
            ));
        }
        let at_least = [
            ("epochs", self.epochs, 1),
            ("batch_size", self.batch_size, 2),
            ("patience", self.patience, 1),
            ("hidden_dim", self.hidden_dim, 1),
            ("depth", self.depth, 1),
            ("embedding_dim", self.embedding_dim, 1),
            ("projection_depth", self.projection_depth, 1),
            ("hazard_depth", self.hazard_depth, 1),
        ];
        for (field, v, min) in at_least {
            if v < min {
                return Err(TrainError::config(
                    field,
                    format!("must be at least {min}, got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub fn model_config(&self, input_dim: usize, t_max: usize) -> ModelConfig {
        ModelConfig {
            input_dim,
            hidden_dim: self.hidden_dim,
            depth: self.depth,
            embedding_dim: self.embedding_dim,
            projection_depth: self.projection_depth,
            hazard_depth: self.hazard_depth,
            t_max,
            activation: self.activation,
        }
    }

    /// The margin in bins, resolving a percentile against `train`.
    pub fn resolve_alpha(&self, train: &SurvivalDataset) -> f64 {
        match self.alpha_mode {
            AlphaMode::Bins => self.alpha,
            AlphaMode::Percentile => {
                censoring_gap_percentile(&train.taus, &train.deltas, self.alpha).unwrap_or(0.0)
            }
        }
    }
}

/// The `p`-th percentile (nearest rank) of `τ_j − τ_i` over pairs with
/// `δ_i = 1`, `δ_j = 0` and `τ_i < τ_j`. `None` when there are no such
/// pairs.
pub fn censoring_gap_percentile(taus: &[usize], deltas: &[bool], p: f64) -> Option<f64> {
    let t_len = taus.iter().copied().max()? + 1;
    let mut events = vec![0u64; t_len];
    let mut censored = vec![0u64; t_len];
    for (&t, &d) in taus.iter().zip(deltas) {
        if d {
            events[t] += 1;
        } else {
            censored[t] += 1;
        }
    }
    let mut gaps = vec![0u64; t_len];
    for (a, &ne) in events.iter().enumerate() {
        if ne == 0 {
            continue;
        }
        for (b, &nc) in censored.iter().enumerate().skip(a + 1) {
            gaps[b - a] += ne * nc;
        }
    }
    let total: u64 = gaps.iter().sum();
    if total == 0 {
        return None;
    }
    let rank = ((p / 100.0) * total as f64).ceil().max(1.0) as u64;
    let mut seen = 0;
    for (g, &c) in gaps.iter().enumerate() {
        seen += c;
        if seen >= rank {
            return Some(g as f64);
        }
    }
    Some((t_len - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("bogus".parse::<Variant>().is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let bad = TrainConfig {
            sigma: 0.0,
            ..TrainConfig::default()
        };
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("sigma"), "{err}");
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            batch_size: 1,
            ..TrainConfig::default()
        };
        assert!(bad
            .validate()
            .unwrap_err()
            .to_string()
            .contains("batch_size"));
    }

    #[test]
    fn gap_percentile_matches_sorted_oracle() {
        let taus = [0, 2, 3, 5, 7, 8, 9, 1];
        let deltas = [true, false, true, false, false, true, false, true];
        let mut gaps = Vec::new();
        for i in 0..taus.len() {
            for j in 0..taus.len() {
                if deltas[i] && !deltas[j] && taus[i] < taus[j] {
                    gaps.push(taus[j] - taus[i]);
                }
            }
        }
        gaps.sort_unstable();
        for p in [0.0, 10.0, 25.0, 50.0, 90.0, 100.0] {
            let rank = ((p / 100.0) * gaps.len() as f64).ceil().max(1.0) as usize;
            assert_eq!(
                censoring_gap_percentile(&taus, &deltas, p),
                Some(gaps[rank - 1] as f64),
                "p={p}"
            );
        }
        assert_eq!(
            censoring_gap_percentile(&[1, 2], &[false, false], 50.0),
            None
        );
    }

    #[test]
    fn toml_and_json_keys() {
        let cfg: TrainConfig =
            toml::from_str("beta = 0.5\nalpha_mode = \"percentile\"\nalpha = 20.0\noptimizer = \"sgd\"\noptimizer_state = \"shared\"").unwrap();
        assert_eq!(cfg.optimizer_state, OptimizerState::Shared);
        assert_eq!(cfg.beta, 0.5);
        assert_eq!(cfg.alpha_mode, AlphaMode::Percentile);
        assert_eq!(cfg.optimizer, OptimizerKind::Sgd);
        let cfg: TrainConfig = serde_json::from_str(r#"{"batch_size": 16}"#).unwrap();
        assert_eq!(cfg.batch_size, 16);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
