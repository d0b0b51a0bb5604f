use std::collections::BTreeSet;

use consurv::data::{load_csv, prepare, write_csv, PrepareOptions};
use consurv::metrics::{evaluate, kaplan_meier, MetricOptions};
use consurv::model::HazardModel;
use consurv::synth::{generate_c2, generate_oracle, C2Config, OracleConfig};
use consurv::trainer::{fit_new, TrainConfig, Variant};

fn small_config() -> TrainConfig {
    TrainConfig {
        epochs: 15,
        batch_size: 32,
        hidden_dim: 16,
        depth: 2,
        embedding_dim: 8,
        alpha: 3.0,
        ..TrainConfig::default()
    }
}

#[test]
fn csv_export_reloads_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generate_oracle(&OracleConfig {
        n_samples: 300,
        binary_features: 2,
        t_max: 30,
        ..OracleConfig::default()
    })
    .unwrap();
    let raw = data.to_raw(2);
    let path = tmp.path().join("d.csv");
    let schema = write_csv(&raw, &path).unwrap();
    let back = load_csv(&path, &schema).unwrap();
    assert_eq!(back.times, raw.times);
    assert_eq!(back.events, raw.events);
    assert_eq!(back.features.len(), raw.features.len());
    assert_eq!(
        back.n_events(),
        data.data.deltas.iter().filter(|&&d| d).count()
    );
}

#[test]
fn prepared_splits_partition_the_rows() {
    let raw = generate_c2(&C2Config {
        n_samples: 500,
        ..C2Config::default()
    })
    .unwrap()
    .to_raw();
    let p = prepare(&raw, &PrepareOptions::default(), 11).unwrap();
    let all: BTreeSet<usize> = p
        .split
        .train
        .iter()
        .chain(&p.split.validation)
        .chain(&p.split.test)
        .copied()
        .collect();
    assert_eq!(all.len(), 500);
    assert_eq!(
        (
            p.split.train.len(),
            p.split.test.len(),
            p.split.validation.len()
        ),
        (320, 100, 80)
    );
    assert!(p.train.x.data().iter().all(|v| (0.0..=1.0).contains(v)));
    for d in [&p.train, &p.validation, &p.test] {
        assert!(d.taus.iter().all(|&t| t <= d.t_max));
    }
    let frac = |d: &[bool]| d.iter().filter(|&&e| e).count() as f64 / d.len() as f64;
    assert!((frac(&p.train.deltas) - frac(&raw.events)).abs() < 0.02);
}

#[test]
fn trained_model_ranks_and_round_trips() {
    let raw = generate_c2(&C2Config {
        n_samples: 800,
        seed: 5,
        ..C2Config::default()
    })
    .unwrap()
    .to_raw();
    let p = prepare(&raw, &PrepareOptions::default(), 0).unwrap();
    let trained = fit_new(Variant::ConSurv, &p.train, &p.validation, &small_config()).unwrap();
    assert!(trained.log.best_val_total() <= trained.log.initial.val_total);

    let surv = trained.model.survival(&p.test.x).unwrap();
    for r in 0..surv.rows() {
        assert!(surv.row(r).windows(2).all(|w| w[1] <= w[0]));
    }
    let report = evaluate(
        &surv,
        &p.test.taus,
        &p.test.deltas,
        &MetricOptions::default(),
    )
    .unwrap();
    assert!(report.ci_integrated > 0.6, "{}", report.ci_integrated);

    // a model that ignores x predicts the training Kaplan–Meier curve
    let km = kaplan_meier(&p.train.taus, &p.train.deltas, p.train.t_max).unwrap();
    let mut flat = surv.clone();
    for r in 0..flat.rows() {
        for t in 0..flat.cols() {
            flat.set(r, t, km.at(t as isize));
        }
    }
    let baseline = evaluate(
        &flat,
        &p.test.taus,
        &p.test.deltas,
        &MetricOptions::default(),
    )
    .unwrap();
    assert_eq!(baseline.ci_integrated, 0.5);
    assert!(
        report.ibs < baseline.ibs,
        "{} vs {}",
        report.ibs,
        baseline.ibs
    );

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("model.json");
    trained.model.save(&path).unwrap();
    let back = HazardModel::load(&path).unwrap();
    assert_eq!(back, trained.model);
    assert_eq!(back.survival(&p.test.x).unwrap(), surv);
}
