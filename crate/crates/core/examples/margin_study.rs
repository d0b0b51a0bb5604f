//! How far censoring-based time gaps understate the true gaps, under both
//! readings of the exponential parameter.

use consurv::data::{BinningScheme, TimeGrid};
use consurv::synth::{generate_c2, margin_study, summarize, C2Config, ExpParam};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for parameterization in [ExpParam::Mean, ExpParam::Rate] {
        let data = generate_c2(&C2Config {
            n_samples: 1000,
            parameterization,
            ..C2Config::default()
        })?;
        let grid = TimeGrid::fit(&data.observed_times(), 100, BinningScheme::EqualWidth)?;
        let (observed, truth) = data.discretize(&grid);
        let pairs = margin_study(&observed.taus, &observed.deltas, &truth);
        match summarize(&pairs) {
            Some(s) => println!(
                "{parameterization:?}: censored {:.1}%, {} pairs, mean gap censoring {:.2} vs truth {:.2}, ordered {:.3}",
                100.0 * data.censoring_fraction(),
                s.pairs,
                s.mean_censoring_delta,
                s.mean_truth_delta,
                s.ordered_fraction
            ),
            None => println!("{parameterization:?}: no event/censored pairs"),
        }
        for p in pairs.iter().step_by(pairs.len().max(10) / 10).take(10) {
            println!(
                "  anchor t={:3}  censoring Δ {:3}  true Δ {:3}",
                p.anchor_time, p.censoring_delta, p.truth_delta
            );
        }
    }
    Ok(())
}
