use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::autodiff::{AutodiffError, Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::Sigmoid => tape.sigmoid(x),
        }
    }
}

/// Fully connected network: `depth` affine layers with the activation
/// between consecutive layers and none after the last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub depth: usize,
    pub output_dim: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.depth == 0 {
            return Err(ModelError::Config("depth must be at least 1".into()));
        }
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(ModelError::Config("layer widths must be at least 1".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        (0..self.depth)
            .map(|k| {
                let fan_in = if k == 0 {
                    self.input_dim
                } else {
                    self.hidden_dim
                };
                let fan_out = if k + 1 == self.depth {
                    self.output_dim
                } else {
                    self.hidden_dim
                };
                (fan_in, fan_out)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    config: MlpConfig,
    /// `fan_in × fan_out` per layer.
    weights: Vec<Tensor>,
    /// `1 × fan_out` per layer.
    biases: Vec<Tensor>,
}

/// An [`Mlp`] whose parameters live on a tape.
#[derive(Clone, Debug)]
pub struct BoundMlp {
    weights: Vec<Var>,
    biases: Vec<Var>,
    activation: Activation,
}

impl Mlp {
    /// He initialization: weights `N(0, 2 / fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(config: MlpConfig, rng: &mut R) -> Result<Self, ModelError> {
        config.validate()?;
        let mut weights = Vec::with_capacity(config.depth);
        let mut biases = Vec::with_capacity(config.depth);
        for (fan_in, fan_out) in config.layer_dims() {
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let data = (0..fan_in * fan_out).map(|_| normal.sample(rng)).collect();
            weights.push(Tensor::new(fan_in, fan_out, data)?);
            biases.push(Tensor::zeros(1, fan_out));
        }
        Ok(Self {
            config,
            weights,
            biases,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn weights(&self) -> &[Tensor] {
        &self.weights
    }

    pub fn biases(&self) -> &[Tensor] {
        &self.biases
    }

    pub fn n_params(&self) -> usize {
        self.params().map(Tensor::len).sum()
    }

    /// Parameters in binding order: `w0, b0, w1, b1, ...`.
    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w, b])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundMlp {
        let mut leaf = |t: &Tensor| tape.leaf(t.clone(), trainable);
        let (weights, biases) = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| (leaf(w), leaf(b)))
            .unzip();
        BoundMlp {
            weights,
            biases,
            activation: self.config.activation,
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        if x.cols() != self.config.input_dim {
            return Err(ModelError::InputDim {
                expected: self.config.input_dim,
                got: x.cols(),
            });
        }
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let xv = tape.constant(x.clone());
        let out = bound.forward(&mut tape, xv)?;
        Ok(tape.value(out).clone())
    }
}

impl BoundMlp {
    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var, AutodiffError> {
        let mut h = x;
        let last = self.weights.len() - 1;
        for (k, (&w, &b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = tape.matmul(h, w)?;
            h = tape.add(z, b)?;
            if k < last {
                h = self.activation.apply(tape, h);
            }
        }
        Ok(h)
    }

    /// Tape variables in the order of [`Mlp::params`].
    pub fn vars(&self) -> Vec<Var> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(&w, &b)| [w, b])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn cfg(depth: usize) -> MlpConfig {
        MlpConfig {
            input_dim: 5,
            hidden_dim: 8,
            depth,
            output_dim: 3,
            activation: Activation::Relu,
        }
    }

    #[test]
    fn depth_counts_weight_matrices() {
        let m = Mlp::init(cfg(3), &mut stream(0, Stream::Init)).unwrap();
        assert_eq!(m.weights().len(), 3);
        assert_eq!(m.config().layer_dims(), vec![(5, 8), (8, 8), (8, 3)]);
    }

    #[test]
    fn zero_final_layer_outputs_bias() {
        let mut m = Mlp::init(cfg(2), &mut stream(0, Stream::Init)).unwrap();
        let bias = Tensor::new(1, 3, vec![0.3, -1.0, 2.0]).unwrap();
        m.weights[1] = Tensor::zeros(8, 3);
        m.biases[1] = bias.clone();
        let x = Tensor::filled(4, 5, 0.7);
        let out = m.forward(&x).unwrap();
        for r in 0..4 {
            assert_eq!(out.row(r), bias.row(0));
        }
    }

    #[test]
    fn rejects_wrong_width() {
        let m = Mlp::init(cfg(2), &mut stream(0, Stream::Init)).unwrap();
        assert!(matches!(
            m.forward(&Tensor::zeros(2, 4)),
            Err(ModelError::InputDim {
                expected: 5,
                got: 4
            })
        ));
    }

    #[test]
    fn he_init_scale() {
        let config = MlpConfig {
            input_dim: 64,
            hidden_dim: 128,
            depth: 3,
            output_dim: 32,
            activation: Activation::Relu,
        };
        let m = Mlp::init(config, &mut stream(11, Stream::Init)).unwrap();
        for (w, (fan_in, _)) in m.weights().iter().zip(config.layer_dims()) {
            assert!(w.len() >= 256);
            let n = w.len() as f64;
            let mean = w.data().iter().sum::<f64>() / n;
            let sd = (w.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let target = (2.0 / fan_in as f64).sqrt();
            assert!((sd / target - 1.0).abs() < 0.1, "{sd} vs {target}");
        }
        assert!(m
            .biases()
            .iter()
            .all(|b| b.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn rejects_zero_depth() {
        assert!(Mlp::init(cfg(0), &mut stream(0, Stream::Init)).is_err());
    }
}
