use serde::{Deserialize, Serialize};

use super::{check_curves, MetricError};
use crate::autodiff::Tensor;

/// How the pointwise C-indices are averaged over time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CiWeighting {
    /// Each time point is weighted by the pairs that become comparable there.
    #[default]
    Pairs,
    /// Every time point with at least one new comparable pair counts once.
    Uniform,
}

/// Concordant and comparable pair counts split by the anchor's event time.
///
/// Pair `(i, j)` is comparable at `t = τ_i` when `δ_i = 1` and `τ_i < τ_j`; it
/// is concordant when `R̂(τ_i | x_i) > R̂(τ_i | x_j)`, which for survival
/// curves is `Ŝ(τ_i | x_i) < Ŝ(τ_i | x_j)`. Ties score ½.
fn pair_counts(survival: &Tensor, taus: &[usize], deltas: &[bool]) -> (Vec<f64>, Vec<u64>) {
    let len = survival.cols();
    let mut concordant = vec![0.0; len];
    let mut pairs = vec![0u64; len];
    for i in 0..taus.len() {
        if !deltas[i] {
            continue;
        }
        let t = taus[i];
        let si = survival.get(i, t);
        for j in 0..taus.len() {
            if taus[j] <= t {
                continue;
            }
            let sj = survival.get(j, t);
            pairs[t] += 1;
            if si < sj {
                concordant[t] += 1.0;
            } else if si == sj {
                concordant[t] += 0.5;
            }
        }
    }
    (concordant, pairs)
}

/// Time-dependent C-index at `t`, over anchors with `τ_i ≤ t`. `None` when no
/// pair is comparable.
pub fn c_index_td(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    t: usize,
) -> Result<Option<f64>, MetricError> {
    check_curves(survival, taus, deltas)?;
    if t >= survival.cols() {
        return Err(MetricError::TimeOutOfRange {
            t,
            t_max: survival.cols() - 1,
        });
    }
    let (concordant, pairs) = pair_counts(survival, taus, deltas);
    let c: f64 = concordant[..=t].iter().sum();
    let p: u64 = pairs[..=t].iter().sum();
    Ok((p > 0).then(|| c / p as f64))
}

/// Average of the time-dependent C-index over the grid.
pub fn c_index_integrated(
    survival: &Tensor,
    taus: &[usize],
    deltas: &[bool],
    weighting: CiWeighting,
) -> Result<f64, MetricError> {
    check_curves(survival, taus, deltas)?;
    let (concordant, pairs) = pair_counts(survival, taus, deltas);
    let (mut cum_c, mut cum_p) = (0.0, 0u64);
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..survival.cols() {
        cum_c += concordant[t];
        cum_p += pairs[t];
        if pairs[t] == 0 {
            continue;
        }
        let w = match weighting {
            CiWeighting::Pairs => pairs[t] as f64,
            CiWeighting::Uniform => 1.0,
        };
        num += w * cum_c / cum_p as f64;
        den += w;
    }
    if den == 0.0 {
        return Err(MetricError::Undefined("no comparable pairs"));
    }
    Ok(num / den)
}
