//! Synthetic survival data: exponential event and censoring times with
//! hidden ground truth, and a discrete-time generator with known hazards.

mod c2;
mod margin;
mod oracle;

use thiserror::Error;

pub use c2::{c2_expression, generate_c2, C2Config, C2Data, ExpParam, PARAM_FLOOR};
pub use margin::{margin_csv, margin_study, summarize, MarginPair, MarginSummary};
pub use oracle::{generate_oracle, OracleConfig, OracleData, OracleHazard};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
}
