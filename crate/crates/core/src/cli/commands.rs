use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{
    calibration_csv, evaluate_model, jobs, load_checkpoint, per_seed_csv, prepare_seeds,
    summary_csv, train_all, write_file, Evaluated, OutputLayout, PER_SEED_HEADER,
};
use super::spec::ExperimentSpec;
use super::CliError;
use crate::data::{write_csv, BinningScheme, TimeGrid};
use crate::metrics::{
    subgroup_analysis, subgroup_curves_csv, subgroup_table_csv, MetricReport, Summary,
    MIN_SUBGROUP_SIZE,
};
use crate::synth::{
    generate_c2, generate_oracle, margin_csv, margin_study, summarize, C2Config, MarginSummary,
    OracleConfig,
};
use crate::trainer::{TrainConfig, Trained, Variant};

/// Trains every (variant, seed) pair and writes checkpoints and logs.
pub fn cmd_train(spec: &ExperimentSpec, out: &OutputLayout) -> Result<Vec<Trained>, CliError> {
    spec.validate()?;
    let raw = spec.data.load()?;
    let data = prepare_seeds(&raw, spec)?;
    let jobs = jobs(spec, &spec.train);
    let trained = train_all(&jobs, &data)?;
    for (job, t) in jobs.iter().zip(&trained) {
        write_file(&out.checkpoint(job.variant, job.seed), &t.model.to_json())?;
        write_file(&out.log(job.variant, job.seed), &t.log.to_csv())?;
    }
    Ok(trained)
}

/// Scores saved checkpoints on their seed's test split and writes per-seed
/// reports, calibration data and the aggregate table.
pub fn cmd_evaluate(spec: &ExperimentSpec, out: &OutputLayout) -> Result<Vec<Evaluated>, CliError> {
    spec.validate()?;
    let raw = spec.data.load()?;
    let data = prepare_seeds(&raw, spec)?;
    let runs: Vec<(Variant, u64)> = spec
        .variants
        .iter()
        .flat_map(|&v| spec.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let results: Vec<(Evaluated, String)> = runs
        .par_iter()
        .map(|&(variant, seed)| {
            let model = load_checkpoint(&out.checkpoint(variant, seed))?;
            let test = &data[&seed].test;
            let report = evaluate_model(&model, test, &spec.metrics)?;
            let calibration = calibration_csv(&model, test, &spec.metrics)?;
            Ok((
                Evaluated {
                    variant,
                    seed,
                    report,
                },
                calibration,
            ))
        })
        .collect::<Result<_, CliError>>()?;
    for (e, calibration) in &results {
        write_file(&out.report(e.variant, e.seed), &e.report.to_json())?;
        write_file(&out.calibration(e.variant, e.seed), calibration)?;
    }
    let rows: Vec<Evaluated> = results.into_iter().map(|(e, _)| e).collect();
    write_file(&out.per_seed_metrics(), &per_seed_csv(&rows))?;
    write_file(&out.summary(), &summary_csv(&rows))?;
    Ok(rows)
}

/// Train and evaluate all four variants.
pub fn cmd_ablate(spec: &ExperimentSpec, out: &OutputLayout) -> Result<Vec<Evaluated>, CliError> {
    let spec = ExperimentSpec {
        variants: Variant::ALL.to_vec(),
        ..spec.clone()
    };
    cmd_train(&spec, out)?;
    cmd_evaluate(&spec, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

/// Mean predicted curves against Kaplan–Meier per level of a feature.
pub fn cmd_subgroup(
    spec: &ExperimentSpec,
    out: &OutputLayout,
    feature: &str,
    split: SplitName,
) -> Result<Vec<crate::metrics::SubgroupResult>, CliError> {
    spec.validate()?;
    let (variant, seed) = (spec.variants[0], spec.seeds[0]);
    let raw = spec.data.load()?;
    let column = raw
        .feature(feature)
        .ok_or_else(|| CliError::Config(format!("feature: no column named '{feature}'")))?;
    let prepared = crate::data::prepare(&raw, &spec.prepare, seed)?;
    let (rows, data) = match split {
        SplitName::Train => (&prepared.split.train, &prepared.train),
        SplitName::Validation => (&prepared.split.validation, &prepared.validation),
        SplitName::Test => (&prepared.split.test, &prepared.test),
    };
    let labels: Vec<String> = rows
        .iter()
        .map(|&i| column.label(i).unwrap_or_else(|| "missing".into()))
        .collect();
    let model = load_checkpoint(&out.checkpoint(variant, seed))?;
    let survival = model.survival(&data.x)?;
    let results = subgroup_analysis(
        &survival,
        &labels,
        &data.taus,
        &data.deltas,
        MIN_SUBGROUP_SIZE,
    )?;
    let dir = out
        .root
        .join("subgroup")
        .join(variant.name())
        .join(format!("seed_{seed}"));
    write_file(
        &dir.join(format!("{feature}_curves.csv")),
        &subgroup_curves_csv(&results),
    )?;
    write_file(
        &dir.join(format!("{feature}_table.csv")),
        &subgroup_table_csv(&results),
    )?;
    Ok(results)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Alpha,
    Beta,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
        }
    }

    fn apply(self, config: &TrainConfig, value: f64) -> TrainConfig {
        match self {
            SweepParam::Alpha => TrainConfig {
                alpha: value,
                ..config.clone()
            },
            SweepParam::Beta => TrainConfig {
                beta: value,
                ..config.clone()
            },
        }
    }
}

/// One aggregate row per swept value.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub variant: Variant,
    pub per_seed: Vec<Evaluated>,
    pub summary: Summary,
}

pub fn cmd_sweep(
    spec: &ExperimentSpec,
    out: &OutputLayout,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no sweep values given",
            param.name()
        )));
    }
    spec.validate()?;
    for &v in values {
        param.apply(&spec.train, v).validate()?;
    }
    let raw = spec.data.load()?;
    let data = prepare_seeds(&raw, spec)?;
    let mut rows = Vec::new();
    for &value in values {
        let config = param.apply(&spec.train, value);
        let jobs = jobs(spec, &config);
        let trained = train_all(&jobs, &data)?;
        let evaluated: Vec<Evaluated> = jobs
            .par_iter()
            .zip(&trained)
            .map(|(job, t)| {
                let report = evaluate_model(&t.model, &data[&job.seed].test, &spec.metrics)?;
                Ok(Evaluated {
                    variant: job.variant,
                    seed: job.seed,
                    report,
                })
            })
            .collect::<Result<_, CliError>>()?;
        for &variant in &spec.variants {
            let reports: Vec<MetricReport> = evaluated
                .iter()
                .filter(|e| e.variant == variant)
                .map(|e| e.report.clone())
                .collect();
            let summary = Summary::from_reports(&reports).expect("at least one seed");
            rows.push(SweepRow {
                value,
                variant,
                per_seed: evaluated
                    .iter()
                    .filter(|e| e.variant == variant)
                    .cloned()
                    .collect(),
                summary,
            });
        }
    }
    let dir = out.root.join("sweep").join(param.name());
    write_file(&dir.join("summary.csv"), &sweep_summary_csv(param, &rows))?;
    write_file(&dir.join("per_seed.csv"), &sweep_per_seed_csv(param, &rows))?;
    Ok(rows)
}

pub fn sweep_summary_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!("{},variant,{}\n", param.name(), Summary::CSV_HEADER);
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.value,
            r.variant,
            r.summary.csv_row()
        ));
    }
    out
}

fn sweep_per_seed_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!("{},{PER_SEED_HEADER}\n", param.name());
    for r in rows {
        for e in &r.per_seed {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.value,
                e.variant,
                e.seed,
                e.report.csv_row()
            ));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthKind {
    C2(C2Config),
    Oracle(OracleConfig),
}

/// Writes `data.csv`, `schema.json` and `hidden.csv` into `dir`.
pub fn cmd_synth(kind: SynthKind, dir: &Path) -> Result<(), CliError> {
    let (raw, hidden) = match kind {
        SynthKind::C2(cfg) => {
            let d = generate_c2(&cfg)?;
            (d.to_raw(), d.sidecar_csv())
        }
        SynthKind::Oracle(cfg) => {
            let d = generate_oracle(&cfg)?;
            (d.to_raw(cfg.binary_features), d.sidecar_csv())
        }
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let schema = write_csv(&raw, dir.join("data.csv"))?;
    write_file(&dir.join("schema.json"), &schema.to_json())?;
    write_file(&dir.join("hidden.csv"), &hidden)?;
    Ok(())
}

/// Censoring-based versus true time gaps on exponential synthetic data,
/// written to `margin.csv` and `summary.json` in `dir`.
pub fn cmd_margin_study(
    config: &C2Config,
    n_bins: usize,
    dir: &Path,
) -> Result<Option<MarginSummary>, CliError> {
    let d = generate_c2(config)?;
    let grid = TimeGrid::fit(&d.observed_times(), n_bins, BinningScheme::EqualWidth)?;
    let (data, truth) = d.discretize(&grid);
    let pairs = margin_study(&data.taus, &data.deltas, &truth);
    let summary = summarize(&pairs);
    write_file(&dir.join("margin.csv"), &margin_csv(&pairs))?;
    write_file(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summaries serialize"),
    )?;
    Ok(summary)
}
