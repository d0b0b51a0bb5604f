//! Trains the four objectives on the same splits and prints a summary table
//! over a few seeds.

use consurv::data::{prepare, PrepareOptions};
use consurv::metrics::{evaluate, MetricOptions, Summary};
use consurv::synth::{generate_c2, C2Config};
use consurv::trainer::{fit_new, TrainConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = generate_c2(&C2Config {
        n_samples: 800,
        ..C2Config::default()
    })?
    .to_raw();
    let seeds = [0, 1, 2];
    let options = MetricOptions::default();

    println!("variant,{}", Summary::CSV_HEADER);
    for variant in Variant::ALL {
        let mut reports = Vec::new();
        for seed in seeds {
            let data = prepare(&raw, &PrepareOptions::default(), seed)?;
            let config = TrainConfig {
                seed,
                epochs: 40,
                ..TrainConfig::default()
            };
            let trained = fit_new(variant, &data.train, &data.validation, &config)?;
            let survival = trained.model.survival(&data.test.x)?;
            reports.push(evaluate(
                &survival,
                &data.test.taus,
                &data.test.deltas,
                &options,
            )?);
        }
        let summary = Summary::from_reports(&reports).expect("seeds are nonempty");
        println!("{variant},{}", summary.csv_row());
    }
    Ok(())
}
