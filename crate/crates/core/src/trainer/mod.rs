//! Two-phase training: per batch, an auxiliary step updates the encoder and
//! projection head on the weighted contrastive loss (or the encoder and
//! hazard head on the ranking loss), then a likelihood step updates the
//! encoder and hazard head on the NLL. By default each phase keeps its own
//! optimizer state; with [`OptimizerState::Shared`] the phases share one
//! state per network. Training stops early on the validation total loss and returns the
//! best snapshot.

mod config;
mod optim;

pub use config::{censoring_gap_percentile, AlphaMode, TrainConfig, Variant};
pub use optim::{
    adam_step, sgd_step, AdamState, Optimizer, OptimizerKind, OptimizerState, ADAM_BETA1,
    ADAM_BETA2, ADAM_EPS,
};

use std::fmt;
use std::time::Instant;

use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::data::{iterate_batches, Batch, Corruption, Marginals, SurvivalDataset};
use crate::losses::{nll_loss, ranking_loss, snce_loss, LossError, PairWeightMatrix};
use crate::model::{Group, HazardModel, ModelError};
use crate::rng::{stream, Rng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Auxiliary,
    Likelihood,
    Validation,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Auxiliary => "auxiliary",
            Phase::Likelihood => "likelihood",
            Phase::Validation => "validation",
        })
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid config field '{field}': {message}")]
    Config { field: String, message: String },
    #[error("non-finite {phase} loss at epoch {epoch}, step {step}")]
    Diverged {
        epoch: usize,
        step: usize,
        phase: Phase,
    },
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

impl TrainError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        TrainError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Losses after one epoch. `aux` is the unscaled auxiliary loss and
/// `total = nll + β · aux`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nll: f64,
    pub train_aux: f64,
    pub train_total: f64,
    pub val_nll: f64,
    pub val_aux: f64,
    pub val_total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub variant: Variant,
    /// Losses of the untrained model, recorded as epoch 0.
    pub initial: EpochRecord,
    pub epochs: Vec<EpochRecord>,
    /// Epoch of the returned snapshot; 0 means the initial model.
    pub best_epoch: usize,
    pub wall_time_secs: f64,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str =
        "epoch,train_nll,train_aux,train_total,val_nll,val_aux,val_total";

    pub fn best_val_total(&self) -> f64 {
        std::iter::once(&self.initial)
            .chain(&self.epochs)
            .find(|r| r.epoch == self.best_epoch)
            .map_or(f64::NAN, |r| r.val_total)
    }

    /// One row per epoch including epoch 0; wall time is omitted so the
    /// file is reproducible.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in std::iter::once(&self.initial).chain(&self.epochs) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.epoch, r.train_nll, r.train_aux, r.train_total, r.val_nll, r.val_aux, r.val_total
            ));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: HazardModel,
    pub log: TrainLog,
    /// Margin in bins actually used.
    pub alpha: f64,
}

/// Optimizer states and random streams for one training run.
pub struct Trainer {
    model: HazardModel,
    config: TrainConfig,
    variant: Variant,
    alpha: f64,
    marginals: Marginals,
    /// Per-network optimizers for the auxiliary and likelihood slots.
    optimizers: [Vec<Optimizer>; 2],
    order_rng: Rng,
    corrupt_rng: Rng,
}

const LIKELIHOOD_GROUPS: [Group; 2] = [Group::Encoder, Group::Hazard];

fn grads_of(tape: &Tape, vars: &[Var]) -> Vec<Tensor> {
    vars.iter().map(|&v| tape.grad(v)).collect()
}

impl Trainer {
    pub fn new(
        model: HazardModel,
        config: &TrainConfig,
        variant: Variant,
        train: &SurvivalDataset,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        check_dataset(&model, train)?;
        let per_group = || -> Vec<Optimizer> {
            Group::ALL
                .iter()
                .map(|&g| Optimizer::new(config.optimizer, model.network(g).params()))
                .collect()
        };
        let optimizers = [per_group(), per_group()];
        Ok(Self {
            alpha: config.resolve_alpha(train),
            marginals: Marginals::from_features(&train.x),
            optimizers,
            order_rng: stream(config.seed, Stream::BatchOrder),
            corrupt_rng: stream(config.seed, Stream::Corruption),
            model,
            config: config.clone(),
            variant,
        })
    }

    fn groups_for(variant: Variant) -> &'static [Group] {
        match variant {
            Variant::Nll => &[],
            Variant::NllNce | Variant::ConSurv => &[Group::Encoder, Group::Projection],
            Variant::NllRank => &LIKELIHOOD_GROUPS,
        }
    }

    /// Parameter groups touched by the auxiliary step.
    pub fn aux_groups(&self) -> &'static [Group] {
        Self::groups_for(self.variant)
    }

    pub fn model(&self) -> &HazardModel {
        &self.model
    }

    pub fn into_model(self) -> HazardModel {
        self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn pair_weights(&self, batch: &Batch) -> Result<PairWeightMatrix, LossError> {
        match self.variant {
            Variant::ConSurv => {
                PairWeightMatrix::build(&batch.taus, &batch.deltas, self.config.sigma, self.alpha)
            }
            _ => Ok(PairWeightMatrix::uniform(batch.len())),
        }
    }

    /// Auxiliary loss of `batch` on a tape with the auxiliary groups
    /// trainable.
    fn aux_loss(
        &self,
        tape: &mut Tape,
        batch: &Batch,
    ) -> Result<Option<(Var, Vec<Var>)>, TrainError> {
        let groups = self.aux_groups();
        if groups.is_empty() {
            return Ok(None);
        }
        let bound = self.model.bind(tape, groups);
        let loss = if self.variant.is_contrastive() {
            let both = tape.constant(batch.x.vstack(&batch.views)?);
            let h = bound.encode(tape, both)?;
            let z = bound.project(tape, h)?;
            snce_loss(tape, z, &self.pair_weights(batch)?, self.config.nu)?
        } else {
            let x = tape.constant(batch.x.clone());
            let h = bound.encode(tape, x)?;
            let lam = bound.hazard(tape, h)?;
            ranking_loss(tape, lam, &batch.taus, &batch.deltas, self.config.kappa)?
        };
        let vars = groups.iter().flat_map(|&g| bound.vars(g)).collect();
        Ok(Some((loss, vars)))
    }

    /// One auxiliary update on `β · aux`; returns the unscaled loss.
    pub fn auxiliary_step(&mut self, batch: &Batch) -> Result<f64, TrainError> {
        let mut tape = Tape::new();
        let Some((loss, vars)) = self.aux_loss(&mut tape, batch)? else {
            return Ok(0.0);
        };
        let value = tape.item(loss);
        if !value.is_finite() {
            return Err(TrainError::Diverged {
                epoch: 0,
                step: 0,
                phase: Phase::Auxiliary,
            });
        }
        let scaled = tape.scale(loss, self.config.beta);
        tape.backward(scaled)?;
        let grads = grads_of(&tape, &vars);
        self.apply(
            Phase::Auxiliary,
            self.aux_groups(),
            &grads,
            self.config.lr_contrastive,
        );
        Ok(value)
    }

    /// Steps each network in `groups`; `grads` follows the same order.
    fn apply(&mut self, phase: Phase, groups: &[Group], grads: &[Tensor], lr: f64) {
        let slot = match (phase, self.config.optimizer_state) {
            (Phase::Likelihood, OptimizerState::PerPhase) => 1,
            _ => 0,
        };
        let mut offset = 0;
        for &g in groups {
            let mut params = self.model.params_mut(&[g]);
            let n = params.len();
            let idx = Group::ALL
                .iter()
                .position(|&x| x == g)
                .expect("known group");
            self.optimizers[slot][idx].step(&mut params, &grads[offset..offset + n], lr);
            offset += n;
        }
        assert_eq!(offset, grads.len());
    }

    /// One likelihood update; returns the batch NLL before the update.
    pub fn likelihood_step(&mut self, batch: &Batch) -> Result<f64, TrainError> {
        let mut tape = Tape::new();
        let bound = self.model.bind(&mut tape, &LIKELIHOOD_GROUPS);
        let x = tape.constant(batch.x.clone());
        let h = bound.encode(&mut tape, x)?;
        let lam = bound.hazard(&mut tape, h)?;
        let loss = nll_loss(&mut tape, lam, &batch.taus, &batch.deltas)?;
        let value = tape.item(loss);
        if !value.is_finite() {
            return Err(TrainError::Diverged {
                epoch: 0,
                step: 0,
                phase: Phase::Likelihood,
            });
        }
        tape.backward(loss)?;
        let vars: Vec<Var> = LIKELIHOOD_GROUPS
            .iter()
            .flat_map(|&g| bound.vars(g))
            .collect();
        let grads = grads_of(&tape, &vars);
        self.apply(
            Phase::Likelihood,
            &LIKELIHOOD_GROUPS,
            &grads,
            self.config.lr_nll,
        );
        Ok(value)
    }

    /// One pass over `train`; returns mean batch (nll, aux).
    pub fn run_epoch(
        &mut self,
        train: &SurvivalDataset,
        epoch: usize,
    ) -> Result<(f64, f64), TrainError> {
        let indices: Vec<usize> = (0..train.len()).collect();
        let corruption = Corruption {
            rate: self.config.corruption_rate,
            marginals: &self.marginals,
        };
        let batches = if self.variant.is_contrastive() {
            iterate_batches(
                train,
                &indices,
                self.config.batch_size,
                &mut self.order_rng,
                Some((corruption, &mut self.corrupt_rng)),
            )
        } else {
            iterate_batches::<_, Rng>(
                train,
                &indices,
                self.config.batch_size,
                &mut self.order_rng,
                None,
            )
        };
        if batches.is_empty() {
            return Err(TrainError::Data(
                "training split has fewer than 2 samples".into(),
            ));
        }
        let (mut nll_sum, mut aux_sum) = (0.0, 0.0);
        for (step, batch) in batches.iter().enumerate() {
            let tag = |e: TrainError| match e {
                TrainError::Diverged { phase, .. } => TrainError::Diverged { epoch, step, phase },
                other => other,
            };
            aux_sum += self.auxiliary_step(batch).map_err(tag)?;
            nll_sum += self.likelihood_step(batch).map_err(tag)?;
        }
        let n = batches.len() as f64;
        Ok((nll_sum / n, aux_sum / n))
    }

    /// `(nll, aux)` of the current model on `data`. The auxiliary loss is
    /// averaged over consecutive batches whose views come from a fixed
    /// stream, so repeated evaluations agree.
    pub fn evaluate(&self, data: &SurvivalDataset) -> Result<(f64, f64), TrainError> {
        let mut tape = Tape::new();
        let lam = tape.constant(self.model.hazards(&data.x)?);
        let nll_var = nll_loss(&mut tape, lam, &data.taus, &data.deltas)?;
        let nll = tape.item(nll_var);
        if self.aux_groups().is_empty() {
            return Ok((nll, 0.0));
        }
        let mut rng = stream(self.config.seed, Stream::ValidationCorruption);
        let corruption = Corruption {
            rate: self.config.corruption_rate,
            marginals: &self.marginals,
        };
        let indices: Vec<usize> = (0..data.len()).collect();
        let (mut sum, mut count) = (0.0, 0usize);
        for chunk in indices
            .chunks(self.config.batch_size)
            .filter(|c| c.len() >= 2)
        {
            let c = self
                .variant
                .is_contrastive()
                .then_some((corruption, &mut rng));
            let batch = Batch::build(data, chunk.to_vec(), c);
            let mut tape = Tape::new();
            if let Some((loss, _)) = self.aux_loss(&mut tape, &batch)? {
                sum += tape.item(loss);
                count += 1;
            }
        }
        Ok((nll, if count == 0 { 0.0 } else { sum / count as f64 }))
    }

    fn record(
        &self,
        epoch: usize,
        train: (f64, f64),
        validation: &SurvivalDataset,
    ) -> Result<EpochRecord, TrainError> {
        let (val_nll, val_aux) = self.evaluate(validation)?;
        let beta = self.beta();
        let rec = EpochRecord {
            epoch,
            train_nll: train.0,
            train_aux: train.1,
            train_total: train.0 + beta * train.1,
            val_nll,
            val_aux,
            val_total: val_nll + beta * val_aux,
        };
        if !rec.val_total.is_finite() {
            return Err(TrainError::Diverged {
                epoch,
                step: 0,
                phase: Phase::Validation,
            });
        }
        Ok(rec)
    }

    fn beta(&self) -> f64 {
        if self.aux_groups().is_empty() {
            0.0
        } else {
            self.config.beta
        }
    }

    /// Trains until `epochs` or until the validation total has not improved
    /// for `patience` epochs, and returns the best snapshot.
    pub fn fit(
        mut self,
        train: &SurvivalDataset,
        validation: &SurvivalDataset,
    ) -> Result<Trained, TrainError> {
        check_dataset(&self.model, validation)?;
        let start = Instant::now();
        let initial_train = self.evaluate(train)?;
        let initial = self.record(0, initial_train, validation)?;
        let mut best = (initial.val_total, 0usize, self.model.clone());
        let mut epochs = Vec::new();
        for epoch in 1..=self.config.epochs {
            let losses = self.run_epoch(train, epoch)?;
            let rec = self.record(epoch, losses, validation)?;
            log::debug!(
                "{} epoch {epoch}: train {:.5} val {:.5}",
                self.variant,
                rec.train_total,
                rec.val_total
            );
            epochs.push(rec);
            if rec.val_total < best.0 {
                best = (rec.val_total, epoch, self.model.clone());
            } else if epoch - best.1 >= self.config.patience {
                break;
            }
        }
        Ok(Trained {
            alpha: self.alpha,
            log: TrainLog {
                variant: self.variant,
                initial,
                epochs,
                best_epoch: best.1,
                wall_time_secs: start.elapsed().as_secs_f64(),
            },
            model: best.2,
        })
    }
}

fn check_dataset(model: &HazardModel, data: &SurvivalDataset) -> Result<(), TrainError> {
    let cfg = model.config();
    if data.n_features() != cfg.input_dim {
        return Err(TrainError::Data(format!(
            "model expects {} features, dataset has {}",
            cfg.input_dim,
            data.n_features()
        )));
    }
    if data.t_max > cfg.t_max {
        return Err(TrainError::Data(format!(
            "dataset horizon {} exceeds model horizon {}",
            data.t_max, cfg.t_max
        )));
    }
    if data.is_empty() {
        return Err(TrainError::Data("empty split".into()));
    }
    Ok(())
}

/// Trains `model` with the given auxiliary objective.
pub fn train_variant(
    variant: Variant,
    train: &SurvivalDataset,
    validation: &SurvivalDataset,
    model: HazardModel,
    config: &TrainConfig,
) -> Result<Trained, TrainError> {
    Trainer::new(model, config, variant, train)?.fit(train, validation)
}

/// Trains with the outcome-aware contrastive objective.
pub fn train(
    train: &SurvivalDataset,
    validation: &SurvivalDataset,
    model: HazardModel,
    config: &TrainConfig,
) -> Result<Trained, TrainError> {
    train_variant(Variant::ConSurv, train, validation, model, config)
}

/// Initializes a model for `train` from `config` and trains it.
pub fn fit_new(
    variant: Variant,
    train: &SurvivalDataset,
    validation: &SurvivalDataset,
    config: &TrainConfig,
) -> Result<Trained, TrainError> {
    config.validate()?;
    let model = HazardModel::init(
        config.model_config(train.n_features(), train.t_max),
        config.seed,
    )?;
    train_variant(variant, train, validation, model, config)
}
