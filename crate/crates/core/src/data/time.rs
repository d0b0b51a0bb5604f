use serde::{Deserialize, Serialize};

use super::DataError;

/// Default number of discrete time bins.
pub const DEFAULT_BINS: usize = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningScheme {
    /// Equal-width bins over `[0, max time]`.
    #[default]
    EqualWidth,
    /// Bin edges at empirical quantiles of the observed times.
    Quantile,
}

/// Partition of continuous time into discrete bins `0..=t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    edges: Vec<f64>,
}

impl TimeGrid {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self, DataError> {
        if edges.len() < 2
            || edges
                .windows(2)
                .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(DataError::DegenerateGrid(
                "edges must be strictly increasing with at least one bin".into(),
            ));
        }
        Ok(Self { edges })
    }

    pub fn equal_width(max_time: f64, n_bins: usize) -> Result<Self, DataError> {
        if n_bins < 2 {
            return Err(DataError::InvalidBins(n_bins));
        }
        if !(max_time > 0.0) || !max_time.is_finite() {
            return Err(DataError::DegenerateGrid(format!(
                "maximum time {max_time}"
            )));
        }
        let width = max_time / n_bins as f64;
        Self::from_edges((0..=n_bins).map(|k| k as f64 * width).collect())
    }

    /// Quantile edges; duplicate quantiles collapse, so the grid may have
    /// fewer than `n_bins` bins.
    pub fn quantile(times: &[f64], n_bins: usize) -> Result<Self, DataError> {
        if n_bins < 2 {
            return Err(DataError::InvalidBins(n_bins));
        }
        let mut sorted = times.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut edges = vec![0.0f64.min(sorted[0])];
        for k in 1..n_bins {
            let q = sorted[(k * n / n_bins).min(n - 1)];
            if q > *edges.last().unwrap() {
                edges.push(q);
            }
        }
        let last = sorted[n - 1];
        if last > *edges.last().unwrap() {
            edges.push(last);
        }
        if edges.len() < 3 {
            return Err(DataError::DegenerateGrid(
                "fewer than two distinct quantiles".into(),
            ));
        }
        Self::from_edges(edges)
    }

    pub fn fit(times: &[f64], n_bins: usize, scheme: BinningScheme) -> Result<Self, DataError> {
        check_times(times)?;
        match scheme {
            BinningScheme::EqualWidth => {
                Self::equal_width(times.iter().copied().fold(0.0, f64::max), n_bins)
            }
            BinningScheme::Quantile => Self::quantile(times, n_bins),
        }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn t_max(&self) -> usize {
        self.n_bins() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Bin index of a raw time. Times past the last edge fall into the last
    /// bin and times before the first into bin 0.
    pub fn bin(&self, t: f64) -> usize {
        let inner = &self.edges[1..self.edges.len() - 1];
        inner.partition_point(|&e| e <= t)
    }

    pub fn bin_width(&self, tau: usize) -> f64 {
        self.edges[tau + 1] - self.edges[tau]
    }

    /// Raw-time midpoint of bin `tau`.
    pub fn midpoint(&self, tau: usize) -> f64 {
        0.5 * (self.edges[tau] + self.edges[tau + 1])
    }

    pub fn discretize(&self, times: &[f64]) -> Vec<usize> {
        times.iter().map(|&t| self.bin(t)).collect()
    }
}

fn check_times(times: &[f64]) -> Result<(), DataError> {
    if times.is_empty() {
        return Err(DataError::NoRecords);
    }
    if let Some((row, &value)) = times.iter().enumerate().find(|(_, t)| !(**t >= 0.0)) {
        return Err(DataError::NegativeTime {
            row: row + 1,
            value,
        });
    }
    let (lo, hi) = times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        });
    if lo == hi {
        return Err(DataError::DegenerateGrid(format!("all times equal {lo}")));
    }
    Ok(())
}

/// 100 bins, or the number of distinct times when there are fewer.
pub fn default_bins(times: &[f64]) -> usize {
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.len().clamp(2, DEFAULT_BINS)
}

/// Fits a grid and maps every time onto it.
pub fn discretize(
    times: &[f64],
    n_bins: usize,
    scheme: BinningScheme,
) -> Result<(TimeGrid, Vec<usize>), DataError> {
    let grid = TimeGrid::fit(times, n_bins, scheme)?;
    let taus = grid.discretize(times);
    Ok((grid, taus))
}
