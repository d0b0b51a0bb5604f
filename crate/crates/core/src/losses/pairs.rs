use crate::autodiff::Tensor;

use super::LossError;

/// Outcome-aware negative weight `1 − exp(−|τ_i − τ_j| / σ)`.
pub fn weight(tau_i: usize, tau_j: usize, sigma: f64) -> Result<f64, LossError> {
    if !(sigma > 0.0) {
        return Err(LossError::InvalidParameter {
            name: "sigma",
            value: sigma,
        });
    }
    Ok(weight_unchecked(tau_i, tau_j, sigma))
}

fn weight_unchecked(tau_i: usize, tau_j: usize, sigma: f64) -> f64 {
    -(-(tau_i.abs_diff(tau_j) as f64) / sigma).exp_m1()
}

/// Whether `j` may serve as a negative for anchor `i`: both uncensored, or
/// `i` uncensored with an event at least `alpha` bins before `j`'s censoring.
pub fn comparable(delta_i: bool, delta_j: bool, tau_i: usize, tau_j: usize, alpha: f64) -> bool {
    match (delta_i, delta_j) {
        (true, true) => true,
        (true, false) => tau_i < tau_j && (tau_j - tau_i) as f64 >= alpha,
        _ => false,
    }
}

/// Comparability indicators and negative weights over the `2M` rows of a
/// batch laid out as `[originals; views]`.
///
/// Row `i` is the anchor. The diagonal and the anchor's own counterpart
/// (row `(i + M) mod 2M`) are masked out of the negative set.
#[derive(Clone, Debug, PartialEq)]
pub struct PairWeightMatrix {
    pub indicator: Vec<bool>,
    pub weights: Tensor,
    pub sigma: f64,
    pub alpha: f64,
}

impl PairWeightMatrix {
    pub fn build(
        taus: &[usize],
        deltas: &[bool],
        sigma: f64,
        alpha: f64,
    ) -> Result<Self, LossError> {
        check_batch(taus, deltas)?;
        if !(sigma > 0.0) {
            return Err(LossError::InvalidParameter {
                name: "sigma",
                value: sigma,
            });
        }
        if !(alpha >= 0.0) {
            return Err(LossError::InvalidParameter {
                name: "alpha",
                value: alpha,
            });
        }
        let m = taus.len();
        let n = 2 * m;
        let mut indicator = vec![false; n * n];
        let mut weights = Tensor::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if masked(i, j, m) {
                    continue;
                }
                let (a, b) = (i % m, j % m);
                if comparable(deltas[a], deltas[b], taus[a], taus[b], alpha) {
                    indicator[i * n + j] = true;
                    weights.set(i, j, weight_unchecked(taus[a], taus[b], sigma));
                }
            }
        }
        Ok(Self {
            indicator,
            weights,
            sigma,
            alpha,
        })
    }

    /// Every unmasked pair with weight 1.
    pub fn uniform(m: usize) -> Self {
        let n = 2 * m;
        let mut indicator = vec![false; n * n];
        let mut weights = Tensor::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if !masked(i, j, m) {
                    indicator[i * n + j] = true;
                    weights.set(i, j, 1.0);
                }
            }
        }
        Self {
            indicator,
            weights,
            sigma: f64::INFINITY,
            alpha: 0.0,
        }
    }

    /// Number of originals `M`.
    pub fn batch_size(&self) -> usize {
        self.weights.rows() / 2
    }

    pub fn is_comparable(&self, i: usize, j: usize) -> bool {
        self.indicator[i * self.weights.cols() + j]
    }
}

/// The anchor itself and its own counterpart are never negatives.
pub fn masked(i: usize, j: usize, m: usize) -> bool {
    i == j || j == (i + m) % (2 * m)
}

pub(crate) fn check_batch(taus: &[usize], deltas: &[bool]) -> Result<(), LossError> {
    if taus.len() != deltas.len() {
        return Err(LossError::BatchShape(format!(
            "{} times but {} event indicators",
            taus.len(),
            deltas.len()
        )));
    }
    if taus.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    Ok(())
}
