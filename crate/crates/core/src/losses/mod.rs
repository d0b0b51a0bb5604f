//! Training objectives on the tape: discrete-time negative log-likelihood,
//! the pairwise ranking loss, InfoNCE, and the outcome-aware contrastive
//! loss with censoring-aware negative weights.
//!
//! All reductions are means, so balancing coefficients do not depend on the
//! batch size.

mod pairs;

pub use pairs::{comparable, masked, weight, PairWeightMatrix};

use thiserror::Error;

use crate::autodiff::{AutodiffError, Axis, Tape, Tensor, Var};
use pairs::check_batch;

/// Ranking-loss temperature used when none is configured.
pub const DEFAULT_KAPPA: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("{name} out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch shape: {0}")]
    BatchShape(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

fn check_hazards(
    tape: &Tape,
    hazards: Var,
    taus: &[usize],
    deltas: &[bool],
) -> Result<(), LossError> {
    check_batch(taus, deltas)?;
    let (n, t) = tape.shape(hazards);
    if n != taus.len() {
        return Err(LossError::BatchShape(format!(
            "{n} hazard rows for {} samples",
            taus.len()
        )));
    }
    if let Some(&bad) = taus.iter().find(|&&tau| tau >= t) {
        return Err(LossError::BatchShape(format!(
            "time index {bad} beyond {} hazard columns",
            t
        )));
    }
    Ok(())
}

/// Mean of `−[δ log p(τ|x) + (1 − δ) log S(τ|x)]` from per-sample hazard
/// rows (`n × (t_max + 1)`).
pub fn nll_loss(
    tape: &mut Tape,
    hazards: Var,
    taus: &[usize],
    deltas: &[bool],
) -> Result<Var, LossError> {
    check_hazards(tape, hazards, taus, deltas)?;
    let (n, t) = tape.shape(hazards);
    // survive[i, t] selects log(1 − λ) terms, event[i, t] the log λ term
    let mut survive = Tensor::zeros(n, t);
    let mut event = Tensor::zeros(n, t);
    for (i, (&tau, &delta)) in taus.iter().zip(deltas).enumerate() {
        let upto = if delta { tau } else { tau + 1 };
        survive.row_mut(i)[..upto].fill(1.0);
        if delta {
            event.set(i, tau, 1.0);
        }
    }
    let one_minus = tape.one_minus(hazards);
    let log_surv = tape.log(one_minus);
    let log_haz = tape.log(hazards);
    let survive = tape.constant(survive);
    let event = tape.constant(event);
    let a = tape.mul(log_surv, survive)?;
    let b = tape.mul(log_haz, event)?;
    let ll = tape.add(a, b)?;
    let ll = tape.sum(ll, None)?;
    Ok(tape.scale(ll, -1.0 / n as f64))
}

/// Row-wise L2 normalization.
fn normalize_rows(tape: &mut Tape, z: Var) -> Result<Var, AutodiffError> {
    let sq = tape.mul(z, z)?;
    let sq = tape.sum(sq, Some(Axis::Cols))?;
    let sq = tape.clamp(sq, 1e-24, f64::INFINITY);
    let norm = tape.sqrt(sq);
    tape.div(z, norm)
}

/// Outcome-aware contrastive loss over `2M` embeddings laid out as
/// `[originals; views]`.
///
/// For anchor `i` with positive `i⁺ = (i + M) mod 2M` and cosine
/// similarities `s` scaled by `1 / nu`, the per-anchor term is
///
/// ```text
/// −s(i, i⁺) + log Σ_j W_ij e^{s(i, j)} − log Σ_j W_ij + log |neg_i|
/// ```
///
/// where `neg_i` is the unmasked negative set. Anchors with no positive
/// weight are skipped; if every anchor is skipped the loss is zero.
pub fn snce_loss(
    tape: &mut Tape,
    embeddings: Var,
    weights: &PairWeightMatrix,
    nu: f64,
) -> Result<Var, LossError> {
    if !(nu > 0.0) {
        return Err(LossError::InvalidParameter {
            name: "nu",
            value: nu,
        });
    }
    let (n, _) = tape.shape(embeddings);
    if n < 4 || n % 2 != 0 {
        return Err(LossError::BatchShape(format!(
            "contrastive loss needs 2M rows with M >= 2, got {n}"
        )));
    }
    if weights.weights.shape() != (n, n) {
        return Err(LossError::BatchShape(format!(
            "weight matrix {:?} for {n} embeddings",
            weights.weights.shape()
        )));
    }
    let m = n / 2;

    let mut positive = Tensor::zeros(n, n);
    let mut offset = Tensor::zeros(n, 1);
    let mut contributing = Tensor::zeros(n, 1);
    let mut count = 0usize;
    for i in 0..n {
        positive.set(i, (i + m) % n, 1.0);
        let row = weights.weights.row(i);
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            let negatives = (0..n).filter(|&j| !masked(i, j, m)).count();
            offset.set(i, 0, (negatives as f64).ln() - total.ln());
            contributing.set(i, 0, 1.0);
            count += 1;
        }
    }
    if count == 0 {
        log::warn!("contrastive loss: no anchor has a comparable negative; returning 0");
        return Ok(tape.scalar(0.0));
    }

    let zn = normalize_rows(tape, embeddings)?;
    let znt = tape.transpose(zn);
    let sim = tape.matmul(zn, znt)?;
    let sim = tape.scale(sim, 1.0 / nu);

    let positive = tape.constant(positive);
    let pos = tape.mul(sim, positive)?;
    let pos = tape.sum(pos, Some(Axis::Cols))?;
    let lse = tape.weighted_logsumexp(sim, weights.weights.clone())?;
    let offset = tape.constant(offset);
    let per = tape.sub(lse, pos)?;
    let per = tape.add(per, offset)?;
    let contributing = tape.constant(contributing);
    let per = tape.mul(per, contributing)?;
    let total = tape.sum(per, None)?;
    Ok(tape.scale(total, 1.0 / count as f64))
}

/// InfoNCE: [`snce_loss`] with unit weight on every unmasked negative.
pub fn infonce_loss(tape: &mut Tape, embeddings: Var, nu: f64) -> Result<Var, LossError> {
    let (n, _) = tape.shape(embeddings);
    if n < 4 || n % 2 != 0 {
        return Err(LossError::BatchShape(format!(
            "contrastive loss needs 2M rows with M >= 2, got {n}"
        )));
    }
    snce_loss(tape, embeddings, &PairWeightMatrix::uniform(n / 2), nu)
}

/// Mean of `exp(−(R(τ_i|x_i) − R(τ_i|x_j)) / κ)` over acceptable pairs
/// `δ_i = 1, τ_i < τ_j`, with risks derived from hazard rows.
pub fn ranking_loss(
    tape: &mut Tape,
    hazards: Var,
    taus: &[usize],
    deltas: &[bool],
    kappa: f64,
) -> Result<Var, LossError> {
    if !(kappa > 0.0) {
        return Err(LossError::InvalidParameter {
            name: "kappa",
            value: kappa,
        });
    }
    check_hazards(tape, hazards, taus, deltas)?;
    let (n, t) = tape.shape(hazards);

    let mut acceptable = Tensor::zeros(n, n);
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if deltas[i] && taus[i] < taus[j] {
                acceptable.set(i, j, 1.0);
                count += 1;
            }
        }
    }
    if count == 0 {
        log::warn!("ranking loss: no acceptable pairs in batch; returning 0");
        return Ok(tape.scalar(0.0));
    }

    let mut cumulative = Tensor::zeros(t, t);
    for a in 0..t {
        for b in a..t {
            cumulative.set(a, b, 1.0);
        }
    }
    let mut at_time = Tensor::zeros(t, n);
    for (i, &tau) in taus.iter().enumerate() {
        at_time.set(tau, i, 1.0);
    }

    let one_minus = tape.one_minus(hazards);
    let log_step = tape.log(one_minus);
    let cumulative = tape.constant(cumulative);
    let log_surv = tape.matmul(log_step, cumulative)?;
    let surv = tape.exp(log_surv);
    let risk = tape.one_minus(surv);
    let at_time = tape.constant(at_time);
    // q[j, i] = R(τ_i | x_j)
    let q = tape.matmul(risk, at_time)?;
    let qt = tape.transpose(q);
    let eye = tape.constant(Tensor::identity(n));
    let own = tape.mul(qt, eye)?;
    let own = tape.sum(own, Some(Axis::Cols))?;
    let diff = tape.sub(own, qt)?;
    let scaled = tape.scale(diff, -1.0 / kappa);
    let term = tape.exp(scaled);
    let acceptable = tape.constant(acceptable);
    let kept = tape.mul(term, acceptable)?;
    let total = tape.sum(kept, None)?;
    Ok(tape.scale(total, 1.0 / count as f64))
}

/// `nll + β · aux`.
pub fn total_loss(tape: &mut Tape, nll: Var, aux: Var, beta: f64) -> Result<Var, LossError> {
    if !(beta >= 0.0) {
        return Err(LossError::InvalidParameter {
            name: "beta",
            value: beta,
        });
    }
    let scaled = tape.scale(aux, beta);
    Ok(tape.add(nll, scaled)?)
}
