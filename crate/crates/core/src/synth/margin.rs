use serde::{Deserialize, Serialize};

/// One uncensored anchor and a censored partner observed after it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginPair {
    pub anchor: usize,
    pub partner: usize,
    pub anchor_time: usize,
    /// `|τ_anchor − τ_partner|`, using the partner's censoring time.
    pub censoring_delta: usize,
    /// `|τ_anchor − T_partner|`, using the partner's hidden event time.
    pub truth_delta: usize,
}

/// Time gaps between every uncensored anchor and each censored partner with
/// a later censoring time, measured against both the censoring time and the
/// hidden event time. Sorted by the anchor's event time, then by partner.
pub fn margin_study(taus: &[usize], deltas: &[bool], true_taus: &[usize]) -> Vec<MarginPair> {
    assert_eq!(taus.len(), deltas.len());
    assert_eq!(taus.len(), true_taus.len());
    let mut out = Vec::new();
    for a in 0..taus.len() {
        if !deltas[a] {
            continue;
        }
        for c in 0..taus.len() {
            if deltas[c] || taus[c] <= taus[a] {
                continue;
            }
            out.push(MarginPair {
                anchor: a,
                partner: c,
                anchor_time: taus[a],
                censoring_delta: taus[c].abs_diff(taus[a]),
                truth_delta: true_taus[c].abs_diff(taus[a]),
            });
        }
    }
    out.sort_by_key(|p| (p.anchor_time, p.anchor, p.partner));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginSummary {
    pub pairs: usize,
    pub mean_censoring_delta: f64,
    pub mean_truth_delta: f64,
    /// Fraction of pairs with `truth_delta ≥ censoring_delta`.
    pub ordered_fraction: f64,
}

pub fn summarize(pairs: &[MarginPair]) -> Option<MarginSummary> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    Some(MarginSummary {
        pairs: pairs.len(),
        mean_censoring_delta: pairs.iter().map(|p| p.censoring_delta as f64).sum::<f64>() / n,
        mean_truth_delta: pairs.iter().map(|p| p.truth_delta as f64).sum::<f64>() / n,
        ordered_fraction: pairs
            .iter()
            .filter(|p| p.truth_delta >= p.censoring_delta)
            .count() as f64
            / n,
    })
}

pub fn margin_csv(pairs: &[MarginPair]) -> String {
    let mut out = String::from("anchor,partner,anchor_time,censoring_delta,truth_delta\n");
    for p in pairs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.anchor, p.partner, p.anchor_time, p.censoring_delta, p.truth_delta
        ));
    }
    out
}
