use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::SurvivalDataset;
use crate::autodiff::Tensor;

/// Per-feature empirical marginals of the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    columns: Vec<Vec<f64>>,
}

impl Marginals {
    pub fn from_features(x: &Tensor) -> Self {
        let columns = (0..x.cols())
            .map(|j| (0..x.rows()).map(|r| x.get(r, j)).collect())
            .collect();
        Self { columns }
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    fn draw<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> f64 {
        let col = &self.columns[j];
        col[rng.random_range(0..col.len())]
    }
}

/// Marginal corruption: in every row, `round(rate * d)` coordinates chosen
/// uniformly without replacement are overwritten with draws from the
/// matching feature marginal.
pub fn corrupt<R: Rng + ?Sized>(
    x: &Tensor,
    rate: f64,
    marginals: &Marginals,
    rng: &mut R,
) -> Tensor {
    assert!(
        (0.0..=1.0).contains(&rate),
        "corruption rate must lie in [0, 1]"
    );
    assert_eq!(x.cols(), marginals.n_features());
    let d = x.cols();
    let k = (rate * d as f64).round() as usize;
    let mut out = x.clone();
    if k == 0 {
        return out;
    }
    for r in 0..x.rows() {
        for j in index::sample(rng, d, k) {
            let v = marginals.draw(j, rng);
            out.set(r, j, v);
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct Corruption<'a> {
    pub rate: f64,
    pub marginals: &'a Marginals,
}

/// `M` records with their corrupted views. Views inherit the outcome of
/// the record they were made from.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub x: Tensor,
    pub views: Tensor,
    pub taus: Vec<usize>,
    pub deltas: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn build<R: Rng + ?Sized>(
        data: &SurvivalDataset,
        indices: Vec<usize>,
        corruption: Option<(Corruption<'_>, &mut R)>,
    ) -> Self {
        let x = data.x.select_rows(&indices);
        let views = match corruption {
            Some((c, rng)) => corrupt(&x, c.rate, c.marginals, rng),
            None => x.clone(),
        };
        Self {
            taus: indices.iter().map(|&i| data.taus[i]).collect(),
            deltas: indices.iter().map(|&i| data.deltas[i]).collect(),
            indices,
            x,
            views,
        }
    }
}

/// Shuffles `indices` and cuts them into chunks of `batch_size`; a trailing
/// chunk with fewer than two records is dropped.
pub fn epoch_order<R: Rng + ?Sized>(
    indices: &[usize],
    batch_size: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    assert!(batch_size >= 2, "batch size must be at least 2");
    let mut order = indices.to_vec();
    order.shuffle(rng);
    order
        .chunks(batch_size)
        .filter(|c| c.len() >= 2)
        .map(<[usize]>::to_vec)
        .collect()
}

/// One epoch of batches over `indices`.
pub fn iterate_batches<R: Rng + ?Sized, C: Rng + ?Sized>(
    data: &SurvivalDataset,
    indices: &[usize],
    batch_size: usize,
    order_rng: &mut R,
    mut corruption: Option<(Corruption<'_>, &mut C)>,
) -> Vec<Batch> {
    epoch_order(indices, batch_size, order_rng)
        .into_iter()
        .map(|idx| {
            let c = corruption.as_mut().map(|(c, rng)| (*c, &mut **rng));
            Batch::build(data, idx, c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn dataset(n: usize, d: usize) -> SurvivalDataset {
        let mut rng = stream(1, Stream::Probe);
        let data = (0..n * d).map(|_| rng.random::<f64>()).collect();
        SurvivalDataset {
            x: Tensor::new(n, d, data).unwrap(),
            taus: (0..n).map(|i| i % 7).collect(),
            deltas: (0..n).map(|i| i % 3 != 0).collect(),
            feature_names: (0..d).map(|j| format!("x{j}")).collect(),
            t_max: 6,
        }
    }

    #[test]
    fn batch_sizes() {
        let mut rng = stream(0, Stream::BatchOrder);
        let idx: Vec<usize> = (0..10).collect();
        let sizes: Vec<usize> = epoch_order(&idx, 4, &mut rng)
            .iter()
            .map(Vec::len)
            .collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        let sizes: Vec<usize> = epoch_order(&idx, 64, &mut rng)
            .iter()
            .map(Vec::len)
            .collect();
        assert_eq!(sizes, vec![10]);
        let idx9: Vec<usize> = (0..9).collect();
        let sizes: Vec<usize> = epoch_order(&idx9, 4, &mut rng)
            .iter()
            .map(Vec::len)
            .collect();
        assert_eq!(sizes, vec![4, 4]);
    }

    #[test]
    fn epoch_covers_split() {
        let mut rng = stream(3, Stream::BatchOrder);
        let idx: Vec<usize> = (0..100).filter(|i| i % 3 != 1).collect();
        let mut seen: Vec<usize> = epoch_order(&idx, 8, &mut rng).concat();
        seen.sort_unstable();
        assert_eq!(seen, idx);
    }

    #[test]
    fn zero_rate_is_identity() {
        let d = dataset(20, 5);
        let m = Marginals::from_features(&d.x);
        let mut rng = stream(0, Stream::Corruption);
        assert_eq!(corrupt(&d.x, 0.0, &m, &mut rng), d.x);
    }

    #[test]
    fn corruption_is_seeded() {
        let d = dataset(20, 5);
        let m = Marginals::from_features(&d.x);
        let a = corrupt(&d.x, 0.6, &m, &mut stream(9, Stream::Corruption));
        let b = corrupt(&d.x, 0.6, &m, &mut stream(9, Stream::Corruption));
        assert_eq!(a, b);
        assert_ne!(a, d.x);
    }

    #[test]
    fn corrupts_exact_fraction_of_coordinates() {
        // distinct values per column make replaced cells detectable unless the
        // draw hits the original row, so count "changed or self-drawn" via marginals
        let n = 50;
        let x = Tensor::new(n, 10, (0..n * 10).map(|v| v as f64).collect()).unwrap();
        let other = Tensor::new(n, 10, (0..n * 10).map(|v| -(v as f64) - 1.0).collect()).unwrap();
        let m = Marginals::from_features(&other);
        let out = corrupt(&x, 0.3, &m, &mut stream(2, Stream::Corruption));
        for r in 0..n {
            let changed = (0..10).filter(|&j| out.get(r, j) != x.get(r, j)).count();
            assert_eq!(changed, 3);
        }
    }

    /// Two-sample Kolmogorov–Smirnov statistic.
    fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let v = a[i].min(b[j]);
            while i < a.len() && a[i] <= v {
                i += 1;
            }
            while j < b.len() && b[j] <= v {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    #[test]
    fn full_corruption_reproduces_marginals() {
        let n = 5000;
        let mut rng = stream(4, Stream::Probe);
        // skewed training columns; the rows being corrupted come from elsewhere
        let train = Tensor::new(
            n,
            3,
            (0..n * 3)
                .map(|k| rng.random::<f64>().powi(1 + k as i32 % 3))
                .collect(),
        )
        .unwrap();
        let x = Tensor::filled(n, 3, 0.5);
        let m = Marginals::from_features(&train);
        let out = corrupt(&x, 1.0, &m, &mut stream(5, Stream::Corruption));
        // critical value of the two-sample test at α = 0.01
        let critical = 1.628 * ((2 * n) as f64 / (n * n) as f64).sqrt();
        for j in 0..3 {
            let column: Vec<f64> = (0..n).map(|r| out.get(r, j)).collect();
            let d = ks_statistic(&column, m.column(j));
            assert!(d < critical, "feature {j}: D = {d}, critical {critical}");
        }
    }

    #[test]
    fn views_keep_outcomes() {
        let d = dataset(30, 4);
        let m = Marginals::from_features(&d.x);
        let mut order = stream(0, Stream::BatchOrder);
        let mut crng = stream(0, Stream::Corruption);
        let c = Corruption {
            rate: 0.5,
            marginals: &m,
        };
        let idx: Vec<usize> = (0..30).collect();
        for b in iterate_batches(&d, &idx, 8, &mut order, Some((c, &mut crng))) {
            assert_eq!(b.views.rows(), b.x.rows());
            for (k, &i) in b.indices.iter().enumerate() {
                assert_eq!(b.taus[k], d.taus[i]);
                assert_eq!(b.deltas[k], d.deltas[i]);
            }
        }
    }
}
