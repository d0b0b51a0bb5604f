//! Survival tables: CSV ingestion, time discretization, stratified
//! splitting, feature preprocessing, marginal corruption and batching.

mod batch;
mod preprocess;
mod raw;
mod schema;
mod split;
mod time;

pub use batch::{corrupt, epoch_order, iterate_batches, Batch, Corruption, Marginals};
pub use preprocess::Preprocessor;
pub use raw::{load_csv, read_csv, write_csv, FeatureColumn, RawDataset};
pub use schema::{ColumnKind, ColumnRole, ColumnSpec, Schema};
pub use split::{split, Split, SPLIT_RATIOS};
pub use time::{default_bins, discretize, BinningScheme, TimeGrid, DEFAULT_BINS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Tensor;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("row {row}: event indicator must be 0 or 1, got '{value}'")]
    NonBinaryEvent { row: usize, value: String },
    #[error("row {row}: negative time {value}")]
    NegativeTime { row: usize, value: f64 },
    #[error("row {row}: column '{column}' has invalid value '{value}'")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("no records")]
    NoRecords,
    #[error("degenerate time grid: {0}")]
    DegenerateGrid(String),
    #[error("need at least 2 time bins, got {0}")]
    InvalidBins(usize),
}

/// Discretized, normalized survival records.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalDataset {
    /// n × p features.
    pub x: Tensor,
    pub taus: Vec<usize>,
    pub deltas: Vec<bool>,
    pub feature_names: Vec<String>,
    pub t_max: usize,
}

impl SurvivalDataset {
    pub fn new(x: Tensor, taus: Vec<usize>, deltas: Vec<bool>, t_max: usize) -> Self {
        assert_eq!(x.rows(), taus.len());
        assert_eq!(taus.len(), deltas.len());
        assert!(taus.iter().all(|&t| t <= t_max), "tau beyond t_max");
        let feature_names = (0..x.cols()).map(|j| format!("x{}", j + 1)).collect();
        Self {
            x,
            taus,
            deltas,
            feature_names,
            t_max,
        }
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_times(&self) -> usize {
        self.t_max + 1
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            taus: idx.iter().map(|&i| self.taus[i]).collect(),
            deltas: idx.iter().map(|&i| self.deltas[i]).collect(),
            feature_names: self.feature_names.clone(),
            t_max: self.t_max,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepareOptions {
    /// Number of time bins; `None` picks [`default_bins`].
    pub n_bins: Option<usize>,
    pub binning: BinningScheme,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            n_bins: None,
            binning: BinningScheme::EqualWidth,
        }
    }
}

/// A raw table turned into train / validation / test survival datasets for
/// one seed.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub train: SurvivalDataset,
    pub validation: SurvivalDataset,
    pub test: SurvivalDataset,
    pub split: Split,
    pub grid: TimeGrid,
    pub preprocessor: Preprocessor,
}

impl PreparedData {
    pub fn marginals(&self) -> Marginals {
        Marginals::from_features(&self.train.x)
    }
}

/// Split by `seed`, fit preprocessing on the training rows, and discretize
/// all times on a common grid.
pub fn prepare(
    raw: &RawDataset,
    options: &PrepareOptions,
    seed: u64,
) -> Result<PreparedData, DataError> {
    if raw.is_empty() {
        return Err(DataError::NoRecords);
    }
    let n_bins = options.n_bins.unwrap_or_else(|| default_bins(&raw.times));
    let (grid, taus) = discretize(&raw.times, n_bins, options.binning)?;
    let split = split(&raw.events, seed);
    let preprocessor = Preprocessor::fit(raw, &split.train);
    let make = |idx: &[usize]| SurvivalDataset {
        x: preprocessor.transform(raw, idx),
        taus: idx.iter().map(|&i| taus[i]).collect(),
        deltas: idx.iter().map(|&i| raw.events[i]).collect(),
        feature_names: preprocessor.feature_names().to_vec(),
        t_max: grid.t_max(),
    };
    Ok(PreparedData {
        train: make(&split.train),
        validation: make(&split.validation),
        test: make(&split.test),
        split,
        grid,
        preprocessor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn raw(n: usize) -> RawDataset {
        let mut rng = stream(4, Stream::Probe);
        RawDataset {
            features: vec![
                FeatureColumn::Numeric {
                    name: "a".into(),
                    kind: ColumnKind::Real,
                    values: (0..n)
                        .map(|_| Some(rng.random::<f64>() * 50.0 - 10.0))
                        .collect(),
                },
                FeatureColumn::Categorical {
                    name: "c".into(),
                    values: (0..n)
                        .map(|i| Some(["x", "y", "z"][i % 3].to_string()))
                        .collect(),
                },
            ],
            times: (0..n).map(|_| rng.random::<f64>() * 30.0).collect(),
            events: (0..n).map(|_| rng.random::<f64>() < 0.6).collect(),
        }
    }

    #[test]
    fn train_features_are_unit_scaled() {
        let p = prepare(&raw(300), &PrepareOptions::default(), 2).unwrap();
        assert!(p.train.x.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(p.train.n_features(), 4);
        assert_eq!(p.grid.n_bins(), DEFAULT_BINS);
        assert_eq!(p.train.len() + p.validation.len() + p.test.len(), 300);
    }

    #[test]
    fn preparation_is_seeded() {
        let r = raw(120);
        let a = prepare(&r, &PrepareOptions::default(), 5).unwrap();
        let b = prepare(&r, &PrepareOptions::default(), 5).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
    }
}
