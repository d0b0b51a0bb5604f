//! Compares mean predicted survival with Kaplan–Meier within the levels of a
//! binary feature.

use consurv::data::{prepare, PrepareOptions};
use consurv::metrics::{subgroup_analysis, subgroup_table_csv, MIN_SUBGROUP_SIZE};
use consurv::synth::{generate_oracle, OracleConfig};
use consurv::trainer::{fit_new, TrainConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let oracle = generate_oracle(&OracleConfig {
        n_samples: 1500,
        binary_features: 1,
        t_max: 30,
        weight_scale: 1.0,
        ..OracleConfig::default()
    })?;
    let raw = oracle.to_raw(1);
    let data = prepare(&raw, &PrepareOptions::default(), 0)?;
    let config = TrainConfig {
        epochs: 40,
        ..TrainConfig::default()
    };
    let trained = fit_new(Variant::ConSurv, &data.train, &data.validation, &config)?;

    let column = raw.feature("x1").expect("first feature is binary");
    let labels: Vec<String> = data
        .split
        .test
        .iter()
        .map(|&i| column.label(i).unwrap_or_else(|| "missing".into()))
        .collect();
    let survival = trained.model.survival(&data.test.x)?;
    let results = subgroup_analysis(
        &survival,
        &labels,
        &data.test.taus,
        &data.test.deltas,
        MIN_SUBGROUP_SIZE,
    )?;
    print!("{}", subgroup_table_csv(&results));
    Ok(())
}
