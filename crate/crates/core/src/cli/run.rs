use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::spec::ExperimentSpec;
use super::CliError;
use crate::data::{prepare, PreparedData, RawDataset, SurvivalDataset};
use crate::metrics::{
    calibration_plot_data, default_levels, evaluate, MetricOptions, MetricReport, Summary,
};
use crate::model::HazardModel;
use crate::trainer::{fit_new, TrainConfig, Trained, Variant};

/// Deterministic file locations under an output root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn per_run(&self, dir: &str, variant: Variant, seed: u64, ext: &str) -> PathBuf {
        self.root
            .join(dir)
            .join(variant.name())
            .join(format!("seed_{seed}.{ext}"))
    }

    pub fn checkpoint(&self, variant: Variant, seed: u64) -> PathBuf {
        self.per_run("checkpoints", variant, seed, "json")
    }

    pub fn log(&self, variant: Variant, seed: u64) -> PathBuf {
        self.per_run("logs", variant, seed, "csv")
    }

    pub fn report(&self, variant: Variant, seed: u64) -> PathBuf {
        self.per_run("reports", variant, seed, "json")
    }

    pub fn calibration(&self, variant: Variant, seed: u64) -> PathBuf {
        self.per_run("calibration", variant, seed, "csv")
    }

    pub fn per_seed_metrics(&self) -> PathBuf {
        self.root.join("metrics").join("per_seed.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("metrics").join("summary.csv")
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Splits and preprocessing for every seed, keyed by seed.
pub fn prepare_seeds(
    raw: &RawDataset,
    spec: &ExperimentSpec,
) -> Result<BTreeMap<u64, PreparedData>, CliError> {
    let prepared: Vec<(u64, PreparedData)> = spec
        .seeds
        .par_iter()
        .map(|&s| prepare(raw, &spec.prepare, s).map(|p| (s, p)))
        .collect::<Result<_, _>>()?;
    Ok(prepared.into_iter().collect())
}

/// One training run.
#[derive(Clone, Debug)]
pub struct Job {
    pub variant: Variant,
    pub seed: u64,
    pub config: TrainConfig,
}

pub fn jobs(spec: &ExperimentSpec, config: &TrainConfig) -> Vec<Job> {
    spec.variants
        .iter()
        .flat_map(|&variant| {
            spec.seeds.iter().map(move |&seed| Job {
                variant,
                seed,
                config: TrainConfig {
                    seed,
                    ..config.clone()
                },
            })
        })
        .collect()
}

/// Trains every job in parallel; results come back in job order.
pub fn train_all(
    jobs: &[Job],
    data: &BTreeMap<u64, PreparedData>,
) -> Result<Vec<Trained>, CliError> {
    jobs.par_iter()
        .map(|job| {
            let p = &data[&job.seed];
            log::info!("training {} seed {}", job.variant, job.seed);
            Ok(fit_new(job.variant, &p.train, &p.validation, &job.config)?)
        })
        .collect()
}

pub fn evaluate_model(
    model: &HazardModel,
    data: &SurvivalDataset,
    options: &MetricOptions,
) -> Result<MetricReport, CliError> {
    let survival = model.survival(&data.x)?;
    Ok(evaluate(&survival, &data.taus, &data.deltas, options)?)
}

pub fn calibration_csv(
    model: &HazardModel,
    data: &SurvivalDataset,
    options: &MetricOptions,
) -> Result<String, CliError> {
    let survival = model.survival(&data.x)?;
    let pts = calibration_plot_data(
        &survival,
        &data.taus,
        &data.deltas,
        &default_levels(10),
        options.pit,
    )?;
    let mut out = String::from("predicted,observed\n");
    for p in pts {
        out.push_str(&format!("{},{}\n", p.predicted, p.observed));
    }
    Ok(out)
}

/// A metric report tagged with the run that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluated {
    pub variant: Variant,
    pub seed: u64,
    pub report: MetricReport,
}

pub const PER_SEED_HEADER: &str = "variant,seed,ci,ibs,ddc,dcal";

pub fn per_seed_csv(rows: &[Evaluated]) -> String {
    let mut out = format!("{PER_SEED_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.variant,
            r.seed,
            r.report.csv_row()
        ));
    }
    out
}

/// One summary row per variant, in the order variants first appear.
pub fn summary_csv(rows: &[Evaluated]) -> String {
    let mut out = format!("variant,{}\n", Summary::CSV_HEADER);
    let mut order: Vec<Variant> = Vec::new();
    for r in rows {
        if !order.contains(&r.variant) {
            order.push(r.variant);
        }
    }
    for v in order {
        let reports: Vec<MetricReport> = rows
            .iter()
            .filter(|r| r.variant == v)
            .map(|r| r.report.clone())
            .collect();
        if let Some(s) = Summary::from_reports(&reports) {
            out.push_str(&format!("{v},{}\n", s.csv_row()));
        }
    }
    out
}

pub fn load_checkpoint(path: &Path) -> Result<HazardModel, CliError> {
    if !path.is_file() {
        return Err(CliError::MissingCheckpoint(path.to_path_buf()));
    }
    Ok(HazardModel::load(path)?)
}
