//! Trains a hazard network with the contrastive objective on synthetic data
//! and scores it on the held-out split.

use consurv::data::{prepare, PrepareOptions};
use consurv::metrics::{evaluate, MetricOptions};
use consurv::synth::{generate_c2, C2Config};
use consurv::trainer::{fit_new, TrainConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = generate_c2(&C2Config {
        n_samples: 1000,
        ..C2Config::default()
    })?
    .to_raw();
    let data = prepare(&raw, &PrepareOptions::default(), 0)?;
    println!(
        "train {} / validation {} / test {} rows, {} time bins",
        data.train.len(),
        data.validation.len(),
        data.test.len(),
        data.grid.n_bins()
    );

    let config = TrainConfig {
        epochs: 60,
        ..TrainConfig::default()
    };
    let trained = fit_new(Variant::ConSurv, &data.train, &data.validation, &config)?;
    println!(
        "best epoch {} of {}, validation loss {:.4}",
        trained.log.best_epoch,
        trained.log.epochs.len(),
        trained.log.best_val_total()
    );

    let survival = trained.model.survival(&data.test.x)?;
    let report = evaluate(
        &survival,
        &data.test.taus,
        &data.test.deltas,
        &MetricOptions::default(),
    )?;
    println!("{}", report.to_json());
    Ok(())
}
