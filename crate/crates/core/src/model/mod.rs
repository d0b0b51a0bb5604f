//! The encoder, projection head and hazard head, plus the conversion from
//! discrete hazards to survival, risk and event-probability curves.
//!
//! The hazard head maps a latent vector to `t_max + 1` logits at once, so a
//! single forward pass yields the whole hazard curve.

mod curves;
mod mlp;

pub use curves::{pmf_curve, pmf_from_hazard, risk, risk_curve, survival_from_hazard};
pub use mlp::{Activation, BoundMlp, Mlp, MlpConfig};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::rng::{stream, Stream};

/// Hazards are clamped to `[HAZARD_FLOOR, 1 − HAZARD_FLOOR]`.
pub const HAZARD_FLOOR: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("expected {expected} input features, got {got}")]
    InputDim { expected: usize, got: usize },
    #[error("time index {tau} outside 0..={t_max}")]
    TimeOutOfRange { tau: usize, t_max: usize },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    /// Width of every hidden layer and of the latent representation.
    pub hidden_dim: usize,
    /// Encoder depth.
    pub depth: usize,
    pub embedding_dim: usize,
    pub projection_depth: usize,
    pub hazard_depth: usize,
    pub t_max: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl ModelConfig {
    pub fn new(input_dim: usize, t_max: usize) -> Self {
        Self {
            input_dim,
            hidden_dim: 32,
            depth: 3,
            embedding_dim: 32,
            projection_depth: 2,
            hazard_depth: 2,
            t_max,
            activation: Activation::Relu,
        }
    }

    pub fn encoder(&self) -> MlpConfig {
        MlpConfig {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            depth: self.depth,
            output_dim: self.hidden_dim,
            activation: self.activation,
        }
    }

    pub fn projection(&self) -> MlpConfig {
        MlpConfig {
            input_dim: self.hidden_dim,
            hidden_dim: self.hidden_dim,
            depth: self.projection_depth,
            output_dim: self.embedding_dim,
            activation: self.activation,
        }
    }

    pub fn hazard(&self) -> MlpConfig {
        MlpConfig {
            input_dim: self.hidden_dim,
            hidden_dim: self.hidden_dim,
            depth: self.hazard_depth,
            output_dim: self.t_max + 1,
            activation: self.activation,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.encoder().validate()?;
        self.projection().validate()?;
        self.hazard().validate()
    }
}

/// Parameter groups updated by different training phases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    Encoder,
    Projection,
    Hazard,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Encoder, Group::Projection, Group::Hazard];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HazardModel {
    config: ModelConfig,
    seed: u64,
    encoder: Mlp,
    projection: Mlp,
    hazard: Mlp,
}

/// A [`HazardModel`] bound to a tape.
#[derive(Clone, Debug)]
pub struct BoundModel {
    pub encoder: BoundMlp,
    pub projection: BoundMlp,
    pub hazard: BoundMlp,
}

impl BoundModel {
    pub fn encode(&self, tape: &mut Tape, x: Var) -> Result<Var, AutodiffError> {
        self.encoder.forward(tape, x)
    }

    pub fn project(&self, tape: &mut Tape, h: Var) -> Result<Var, AutodiffError> {
        self.projection.forward(tape, h)
    }

    /// Clamped hazards, one row per latent row.
    pub fn hazard(&self, tape: &mut Tape, h: Var) -> Result<Var, AutodiffError> {
        let logits = self.hazard.forward(tape, h)?;
        let p = tape.sigmoid(logits);
        Ok(tape.clamp(p, HAZARD_FLOOR, 1.0 - HAZARD_FLOOR))
    }

    pub fn vars(&self, group: Group) -> Vec<Var> {
        match group {
            Group::Encoder => self.encoder.vars(),
            Group::Projection => self.projection.vars(),
            Group::Hazard => self.hazard.vars(),
        }
    }
}

impl HazardModel {
    /// Seeded He initialization of all three networks.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = stream(seed, Stream::Init);
        Ok(Self {
            encoder: Mlp::init(config.encoder(), &mut rng)?,
            projection: Mlp::init(config.projection(), &mut rng)?,
            hazard: Mlp::init(config.hazard(), &mut rng)?,
            config,
            seed,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn t_max(&self) -> usize {
        self.config.t_max
    }

    pub fn network(&self, group: Group) -> &Mlp {
        match group {
            Group::Encoder => &self.encoder,
            Group::Projection => &self.projection,
            Group::Hazard => &self.hazard,
        }
    }

    pub fn network_mut(&mut self, group: Group) -> &mut Mlp {
        match group {
            Group::Encoder => &mut self.encoder,
            Group::Projection => &mut self.projection,
            Group::Hazard => &mut self.hazard,
        }
    }

    pub fn n_params(&self) -> usize {
        Group::ALL.iter().map(|&g| self.network(g).n_params()).sum()
    }

    /// Parameters of `groups`, in the order of [`BoundModel::vars`] over the
    /// same groups.
    pub fn params_mut(&mut self, groups: &[Group]) -> Vec<&mut Tensor> {
        let mut encoder = Some(&mut self.encoder);
        let mut projection = Some(&mut self.projection);
        let mut hazard = Some(&mut self.hazard);
        let mut out = Vec::new();
        for g in groups {
            let net = match g {
                Group::Encoder => encoder.take(),
                Group::Projection => projection.take(),
                Group::Hazard => hazard.take(),
            };
            out.extend(net.expect("each group listed once").params_mut());
        }
        out
    }

    /// All parameters flattened in encoder, projection, hazard order.
    pub fn flat_params(&self) -> Vec<f64> {
        Group::ALL
            .iter()
            .flat_map(|&g| {
                self.network(g)
                    .params()
                    .flat_map(|t| t.data().iter().copied())
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// Binds every network; only groups in `trainable` receive gradients.
    pub fn bind(&self, tape: &mut Tape, trainable: &[Group]) -> BoundModel {
        let is = |g| trainable.contains(&g);
        BoundModel {
            encoder: self.encoder.bind(tape, is(Group::Encoder)),
            projection: self.projection.bind(tape, is(Group::Projection)),
            hazard: self.hazard.bind(tape, is(Group::Hazard)),
        }
    }

    pub fn encode(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        self.encoder.forward(x)
    }

    pub fn project(&self, h: &Tensor) -> Result<Tensor, ModelError> {
        self.projection.forward(h)
    }

    /// Clamped hazards from latents, `n × (t_max + 1)`.
    pub fn hazard_from_latent(&self, h: &Tensor) -> Result<Tensor, ModelError> {
        let logits = self.hazard.forward(h)?;
        Ok(logits.map(|v| crate::autodiff::sigmoid(v).clamp(HAZARD_FLOOR, 1.0 - HAZARD_FLOOR)))
    }

    pub fn embed(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        self.project(&self.encode(x)?)
    }

    pub fn hazards(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        self.hazard_from_latent(&self.encode(x)?)
    }

    /// Survival curves, one row per sample.
    pub fn survival(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        Ok(map_rows(&self.hazards(x)?, survival_from_hazard))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let m: Self = serde_json::from_str(s).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        m.check_shapes()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&s)
    }

    fn check_shapes(&self) -> Result<(), ModelError> {
        self.config.validate()?;
        let expected = [
            (&self.encoder, self.config.encoder()),
            (&self.projection, self.config.projection()),
            (&self.hazard, self.config.hazard()),
        ];
        for (net, cfg) in expected {
            let dims = cfg.layer_dims();
            let ok = *net.config() == cfg
                && net.weights().len() == dims.len()
                && net.biases().len() == dims.len()
                && net
                    .weights()
                    .iter()
                    .zip(net.biases())
                    .zip(&dims)
                    .all(|((w, b), &(i, o))| w.shape() == (i, o) && b.shape() == (1, o));
            if !ok {
                return Err(ModelError::Checkpoint(
                    "parameter shapes do not match config".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Applies `f` to every row of `t`.
pub fn map_rows(t: &Tensor, f: impl Fn(&[f64]) -> Vec<f64>) -> Tensor {
    let data: Vec<f64> = (0..t.rows()).flat_map(|r| f(t.row(r))).collect();
    let cols = if t.rows() == 0 {
        t.cols()
    } else {
        data.len() / t.rows()
    };
    Tensor::new(t.rows(), cols, data).expect("row map preserves row count")
}
