//! Command-line experiment harness.
//!
//! Exit codes: 0 on success, 2 for configuration and input errors, 3 when
//! training diverges, 1 for anything else.

mod commands;
mod run;
mod spec;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    cmd_ablate, cmd_evaluate, cmd_margin_study, cmd_subgroup, cmd_sweep, cmd_synth, cmd_train,
    sweep_summary_csv, SplitName, SweepParam, SweepRow, SynthKind,
};
pub use run::{
    evaluate_model, per_seed_csv, summary_csv, write_file, Evaluated, OutputLayout, PER_SEED_HEADER,
};
pub use spec::{default_seeds, DataSource, ExperimentSpec};

use crate::data::DataError;
use crate::metrics::MetricError;
use crate::model::ModelError;
use crate::synth::{C2Config, ExpParam, OracleConfig, SynthError};
use crate::trainer::{TrainError, Variant};

/// Output root when neither `--out`, `CONSURV_OUT` nor the experiment file names one.
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing checkpoint {0}")]
    MissingCheckpoint(PathBuf),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::MissingCheckpoint(_)
            | CliError::Data(_)
            | CliError::Synth(_) => 2,
            CliError::Train(TrainError::Config { .. } | TrainError::Data(_)) => 2,
            CliError::Train(TrainError::Diverged { .. } | TrainError::Autodiff(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "consurv",
    version,
    about = "Discrete-time survival models with outcome-aware contrastive learning"
)]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SpecArgs {
    /// Experiment spec (JSON, or TOML with a .toml extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds to run, comma separated; replaces the experiment's list.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Variants to run (nll, nll+nce, nll+rank, consurv); replaces the experiment's list.
    #[arg(long, value_delimiter = ',')]
    pub variant: Vec<Variant>,
    /// Output root.
    #[arg(long, env = "CONSURV_OUT")]
    pub out: Option<PathBuf>,
    /// Overrides the maximum number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
}

impl SpecArgs {
    pub fn resolve(&self) -> Result<(ExperimentSpec, OutputLayout), CliError> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::default(),
        };
        if !self.seed.is_empty() {
            spec.seeds = self.seed.clone();
        }
        if !self.variant.is_empty() {
            spec.variants = self.variant.clone();
        }
        if let Some(e) = self.epochs {
            spec.train.epochs = e;
        }
        let root = self
            .out
            .clone()
            .or_else(|| spec.out.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok((spec, OutputLayout::new(root)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GeneratorKind {
    C2,
    Oracle,
}

#[derive(Debug, Args, Clone)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "c2")]
    pub kind: GeneratorKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Feature dimension (default 4 for c2, 6 for oracle).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exponential parameterization for c2.
    #[arg(long, value_parser = parse_exp_param, default_value = "mean")]
    pub parameterization: ExpParam,
    /// Number of discrete times for oracle data.
    #[arg(long, default_value_t = 100)]
    pub t_max: usize,
    /// Leading 0/1 features for oracle data.
    #[arg(long, default_value_t = 0)]
    pub binary_features: usize,
    /// Disables censoring for oracle data.
    #[arg(long)]
    pub no_censoring: bool,
    #[arg(long, env = "CONSURV_OUT")]
    pub out: Option<PathBuf>,
}

fn parse_exp_param(s: &str) -> Result<ExpParam, String> {
    match s {
        "mean" => Ok(ExpParam::Mean),
        "rate" => Ok(ExpParam::Rate),
        _ => Err(format!("expected 'mean' or 'rate', got '{s}'")),
    }
}

impl SynthArgs {
    fn kind(&self) -> SynthKind {
        match self.kind {
            GeneratorKind::C2 => SynthKind::C2(C2Config {
                n_samples: self.n,
                feature_dim: self.dim.unwrap_or(4),
                seed: self.seed,
                parameterization: self.parameterization,
            }),
            GeneratorKind::Oracle => SynthKind::Oracle(OracleConfig {
                n_samples: self.n,
                feature_dim: self.dim.unwrap_or(6),
                seed: self.seed,
                t_max: self.t_max,
                binary_features: self.binary_features,
                censoring: !self.no_censoring,
                ..OracleConfig::default()
            }),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train every (variant, seed) pair and save checkpoints and logs.
    Train(SpecArgs),
    /// Score saved checkpoints on their test splits.
    Evaluate(SpecArgs),
    /// Train and evaluate all four variants.
    Ablate(SpecArgs),
    /// Compare mean predicted curves with Kaplan–Meier per feature level.
    Subgroup {
        #[command(flatten)]
        spec: SpecArgs,
        /// Binary or categorical feature column.
        #[arg(long)]
        feature: String,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitName,
    },
    /// Train and evaluate over a list of alpha or beta values.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Generate a synthetic dataset as CSV with schema and hidden truths.
    Synth(SynthArgs),
    /// Compare censoring-based and true time gaps on exponential synthetic data.
    MarginStudy {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[arg(long, value_parser = parse_exp_param, default_value = "mean")]
        parameterization: ExpParam,
        #[arg(long, env = "CONSURV_OUT")]
        out: Option<PathBuf>,
    },
}

fn out_dir(out: &Option<PathBuf>, sub: &str) -> PathBuf {
    out.clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
        .join(sub)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => {
            let (spec, out) = args.resolve()?;
            let trained = cmd_train(&spec, &out)?;
            println!(
                "trained {} models under {}",
                trained.len(),
                out.root.display()
            );
        }
        Command::Evaluate(args) => {
            let (spec, out) = args.resolve()?;
            let rows = cmd_evaluate(&spec, &out)?;
            print!("{}", summary_csv(&rows));
        }
        Command::Ablate(args) => {
            let (spec, out) = args.resolve()?;
            let rows = cmd_ablate(&spec, &out)?;
            print!("{}", summary_csv(&rows));
        }
        Command::Subgroup {
            spec,
            feature,
            split,
        } => {
            let (spec, out) = spec.resolve()?;
            let results = cmd_subgroup(&spec, &out, &feature, split)?;
            print!("{}", crate::metrics::subgroup_table_csv(&results));
        }
        Command::Sweep {
            spec: args,
            param,
            values,
        } => {
            let (mut spec, out) = args.resolve()?;
            if args.variant.is_empty() {
                spec.variants = vec![Variant::ConSurv];
            }
            let rows = cmd_sweep(&spec, &out, param, &values)?;
            print!("{}", sweep_summary_csv(param, &rows));
        }
        Command::Synth(args) => {
            let dir = out_dir(&args.out, "synth");
            cmd_synth(args.kind(), &dir)?;
            println!("wrote {}", dir.display());
        }
        Command::MarginStudy {
            n,
            seed,
            bins,
            parameterization,
            out,
        } => {
            let config = C2Config {
                n_samples: n,
                seed,
                parameterization,
                ..C2Config::default()
            };
            let dir = out_dir(&out, "margin");
            match cmd_margin_study(&config, bins, &dir)? {
                Some(s) => println!(
                    "pairs {}  mean censoring gap {:.3}  mean true gap {:.3}  ordered {:.4}",
                    s.pairs, s.mean_censoring_delta, s.mean_truth_delta, s.ordered_fraction
                ),
                None => println!("no comparable event/censored pairs"),
            }
        }
    }
    Ok(())
}

/// Parses the process arguments, runs the command, and returns the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_overrides() {
        let cli = Cli::try_parse_from([
            "consurv",
            "train",
            "--seed",
            "1,2",
            "--variant",
            "nll,consurv",
            "--out",
            "/tmp/o",
            "--epochs",
            "3",
        ])
        .unwrap();
        let Command::Train(args) = cli.command else {
            panic!()
        };
        let (spec, out) = args.resolve().unwrap();
        assert_eq!(spec.seeds, vec![1, 2]);
        assert_eq!(spec.variants, vec![Variant::Nll, Variant::ConSurv]);
        assert_eq!(spec.train.epochs, 3);
        assert_eq!(out.root, PathBuf::from("/tmp/o"));
    }

    #[test]
    fn every_command_parses() {
        for argv in [
            vec!["consurv", "evaluate"],
            vec!["consurv", "ablate", "--seed", "0"],
            vec!["consurv", "subgroup", "--feature", "x1"],
            vec![
                "consurv",
                "sweep",
                "--param",
                "beta",
                "--values",
                "0.01,0.1,1,10,100",
            ],
            vec![
                "consurv",
                "synth",
                "--kind",
                "oracle",
                "--binary-features",
                "2",
            ],
            vec!["consurv", "margin-study", "--n", "500"],
        ] {
            assert!(Cli::try_parse_from(&argv).is_ok(), "{argv:?}");
        }
        assert!(Cli::try_parse_from(["consurv", "train", "--variant", "bogus"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Train(TrainError::config("sigma", "bad")).exit_code(),
            2
        );
        let diverged = TrainError::Diverged {
            epoch: 1,
            step: 0,
            phase: crate::trainer::Phase::Likelihood,
        };
        assert_eq!(CliError::Train(diverged).exit_code(), 3);
        assert_eq!(CliError::MissingCheckpoint("a".into()).exit_code(), 2);
    }
}
