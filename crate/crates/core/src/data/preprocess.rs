use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::raw::{FeatureColumn, RawDataset};
use crate::autodiff::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum ColumnTransform {
    /// Real or binary column; missing cells take `fill`.
    Numeric { fill: f64 },
    /// One indicator per training category; missing cells take `fill`,
    /// unseen categories encode as all zeros.
    OneHot {
        categories: Vec<String>,
        fill: String,
    },
}

/// Imputation, one-hot encoding and min-max scaling fitted on training rows
/// and frozen afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    transforms: Vec<ColumnTransform>,
    names: Vec<String>,
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mode<'a>(values: impl Iterator<Item = &'a String>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v.as_str()).or_default() += 1;
    }
    // ties resolve to the lexicographically smallest category
    counts
        .into_iter()
        .fold(None::<(&str, usize)>, |best, (k, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((k, c)),
        })
        .map(|(k, _)| k.to_string())
}

impl Preprocessor {
    pub fn fit(raw: &RawDataset, train: &[usize]) -> Self {
        let mut transforms = Vec::new();
        let mut names = Vec::new();
        for col in &raw.features {
            match col {
                FeatureColumn::Numeric { name, kind, values } => {
                    let observed: Vec<f64> = train.iter().filter_map(|&i| values[i]).collect();
                    let fill = if *kind == super::ColumnKind::Binary {
                        // mode of a 0/1 column
                        let ones = observed.iter().filter(|&&v| v == 1.0).count();
                        if 2 * ones > observed.len() {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        median(observed)
                    };
                    transforms.push(ColumnTransform::Numeric { fill });
                    names.push(name.clone());
                }
                FeatureColumn::Categorical { name, values } => {
                    let seen: Vec<&String> =
                        train.iter().filter_map(|&i| values[i].as_ref()).collect();
                    let mut categories: Vec<String> = seen.iter().map(|s| s.to_string()).collect();
                    categories.sort();
                    categories.dedup();
                    let fill = mode(seen.into_iter()).unwrap_or_default();
                    for c in &categories {
                        names.push(format!("{name}={c}"));
                    }
                    transforms.push(ColumnTransform::OneHot { categories, fill });
                }
            }
        }
        let mut pre = Self {
            transforms,
            mins: vec![0.0; names.len()],
            maxs: vec![1.0; names.len()],
            names,
        };
        let encoded = pre.encode(raw, train);
        for j in 0..pre.names.len() {
            let (lo, hi) = (0..encoded.rows())
                .map(|r| encoded.get(r, j))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if lo.is_finite() {
                pre.mins[j] = lo;
                pre.maxs[j] = hi;
            }
        }
        pre
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    fn encode(&self, raw: &RawDataset, rows: &[usize]) -> Tensor {
        let mut out = Tensor::zeros(rows.len(), self.names.len());
        for (r, &i) in rows.iter().enumerate() {
            let mut j = 0;
            for (col, tf) in raw.features.iter().zip(&self.transforms) {
                match (col, tf) {
                    (FeatureColumn::Numeric { values, .. }, ColumnTransform::Numeric { fill }) => {
                        out.set(r, j, values[i].unwrap_or(*fill));
                        j += 1;
                    }
                    (
                        FeatureColumn::Categorical { values, .. },
                        ColumnTransform::OneHot { categories, fill },
                    ) => {
                        let v = values[i].as_ref().unwrap_or(fill);
                        if let Ok(k) = categories.binary_search(v) {
                            out.set(r, j + k, 1.0);
                        }
                        j += categories.len();
                    }
                    _ => panic!("preprocessor fitted on a different schema"),
                }
            }
        }
        out
    }

    /// Encoded and min-max scaled features for `rows`. Scaling uses the
    /// training extremes, so non-training rows may leave `[0, 1]`.
    pub fn transform(&self, raw: &RawDataset, rows: &[usize]) -> Tensor {
        let mut out = self.encode(raw, rows);
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                let range = self.maxs[j] - self.mins[j];
                *v = if range > 0.0 {
                    (*v - self.mins[j]) / range
                } else {
                    0.0
                };
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnKind;

    fn raw() -> RawDataset {
        RawDataset {
            features: vec![
                FeatureColumn::Numeric {
                    name: "age".into(),
                    kind: ColumnKind::Real,
                    values: vec![Some(40.0), None, Some(60.0), Some(50.0), Some(90.0)],
                },
                FeatureColumn::Categorical {
                    name: "grade".into(),
                    values: vec![
                        Some("b".into()),
                        Some("a".into()),
                        None,
                        Some("b".into()),
                        Some("c".into()),
                    ],
                },
            ],
            times: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            events: vec![true, false, true, true, false],
        }
    }

    #[test]
    fn imputes_with_training_statistics() {
        let r = raw();
        let train = [0, 1, 2, 3];
        let p = Preprocessor::fit(&r, &train);
        assert_eq!(p.feature_names(), &["age", "grade=a", "grade=b"]);
        let x = p.transform(&r, &train);
        // age median over {40, 60, 50} = 50 -> (50-40)/20
        assert_eq!(x.get(1, 0), 0.5);
        // missing grade -> mode "b"
        assert_eq!(x.row(2)[1..], [0.0, 1.0]);
        for v in x.data() {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn test_rows_use_train_extremes() {
        let r = raw();
        let p = Preprocessor::fit(&r, &[0, 1, 2, 3]);
        let x = p.transform(&r, &[4]);
        // age 90 with train range [40, 60]
        assert_eq!(x.get(0, 0), 2.5);
        // unseen category "c" encodes as zeros
        assert_eq!(x.row(0)[1..], [0.0, 0.0]);
    }
}
