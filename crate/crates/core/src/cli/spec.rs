use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::data::{load_csv, PrepareOptions, RawDataset, Schema};
use crate::metrics::MetricOptions;
use crate::synth::{generate_c2, generate_oracle, C2Config, OracleConfig};
use crate::trainer::{TrainConfig, Variant};

/// Where the survival table comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: PathBuf, schema: PathBuf },
    SyntheticC2(C2Config),
    SyntheticOracle(OracleConfig),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::SyntheticC2(C2Config::default())
    }
}

impl DataSource {
    pub fn load(&self) -> Result<RawDataset, CliError> {
        match self {
            DataSource::Csv { path, schema } => {
                let schema = Schema::from_file(schema)?;
                Ok(load_csv(path, &schema)?)
            }
            DataSource::SyntheticC2(cfg) => Ok(generate_c2(cfg)?.to_raw()),
            DataSource::SyntheticOracle(cfg) => {
                Ok(generate_oracle(cfg)?.to_raw(cfg.binary_features))
            }
        }
    }
}

pub fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

/// Everything that defines an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub data: DataSource,
    pub prepare: PrepareOptions,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    pub metrics: MetricOptions,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            prepare: PrepareOptions::default(),
            variants: default_variants(),
            seeds: default_seeds(),
            train: TrainConfig::default(),
            metrics: MetricOptions::default(),
            out: None,
        }
    }
}

impl ExperimentSpec {
    /// Reads TOML when the extension is `.toml`, JSON otherwise.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let spec = if is_toml {
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config(
                "seeds: at least one seed is required".into(),
            ));
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return Err(CliError::Config("seeds: values must be distinct".into()));
        }
        if self.variants.is_empty() {
            return Err(CliError::Config(
                "variants: at least one variant is required".into(),
            ));
        }
        self.train.validate()?;
        if let Some(&q) = self
            .metrics
            .quantiles
            .iter()
            .chain(std::iter::once(&self.metrics.ibs_quantile))
            .find(|q| !(**q > 0.0 && **q <= 1.0))
        {
            return Err(CliError::Config(format!(
                "metrics: quantile {q} outside (0, 1]"
            )));
        }
        if let DataSource::Csv { path, schema } = &self.data {
            for p in [path, schema] {
                if !p.is_file() {
                    return Err(CliError::Config(format!(
                        "data: no such file {}",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }
}
