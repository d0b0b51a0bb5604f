//! Writes a synthetic table to CSV, reads it back through its schema, and
//! prepares discretized, normalized splits.

use consurv::data::{load_csv, prepare, write_csv, BinningScheme, PrepareOptions, Schema};
use consurv::synth::{generate_oracle, OracleConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("consurv_csv_pipeline");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("data.csv");

    let raw = generate_oracle(&OracleConfig {
        n_samples: 500,
        binary_features: 2,
        ..OracleConfig::default()
    })?
    .to_raw(2);
    let schema = write_csv(&raw, &path)?;
    std::fs::write(dir.join("schema.json"), schema.to_json())?;
    println!("schema:\n{}", schema.to_json());

    let schema = Schema::from_file(dir.join("schema.json"))?;
    let loaded = load_csv(&path, &schema)?;
    println!("{} rows, {} events", loaded.len(), loaded.n_events());

    for binning in [BinningScheme::EqualWidth, BinningScheme::Quantile] {
        let options = PrepareOptions {
            n_bins: Some(20),
            binning,
        };
        let data = prepare(&loaded, &options, 0)?;
        println!(
            "{binning:?}: t_max {}, first edges {:?}, features {:?}",
            data.grid.t_max(),
            &data.grid.edges()[..4],
            data.preprocessor.feature_names()
        );
    }
    Ok(())
}
