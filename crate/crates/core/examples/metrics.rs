//! Every evaluation metric on data whose true survival curves are known.

use consurv::metrics::{
    brier_score, c_index_integrated, c_index_td, censoring_km, d_calibration, ddc, ibs,
    kaplan_meier, time_quantile, CiWeighting, PitConvention,
};
use consurv::synth::{generate_oracle, OracleConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_oracle(&OracleConfig {
        n_samples: 3000,
        ..OracleConfig::default()
    })?;
    let (taus, deltas) = (&data.data.taus, &data.data.deltas);
    let surv = data.true_survival();
    let t_max = data.data.t_max;

    let km = kaplan_meier(taus, deltas, t_max)?;
    let g = censoring_km(taus, deltas, t_max)?;
    let median = time_quantile(taus, 0.5);
    println!("Kaplan–Meier S({median}) = {:.4}", km.at(median as isize));
    println!("censoring G({median}) = {:.4}", g.at(median as isize));

    let ci = c_index_integrated(&surv, taus, deltas, CiWeighting::Pairs)?;
    let ci_mid = c_index_td(&surv, taus, deltas, median)?.unwrap_or(f64::NAN);
    println!("C-index: integrated {ci:.4}, at t={median} {ci_mid:.4}");

    let horizon = time_quantile(taus, 0.95);
    println!(
        "Brier at t={median}: {:.4}",
        brier_score(&surv, taus, deltas, median, &g)?
    );
    println!(
        "IBS over 0..={horizon}: {:.4}",
        ibs(&surv, taus, deltas, horizon, &g)?
    );

    // the calibration metrics only see uncensored subjects
    let uncensored = generate_oracle(&OracleConfig {
        n_samples: 3000,
        censoring: false,
        ..OracleConfig::default()
    })?;
    let (taus, deltas) = (&uncensored.data.taus, &uncensored.data.deltas);
    let surv = uncensored.true_survival();
    let pit = PitConvention::default();
    let dcal = d_calibration(&surv, taus, deltas, pit)?;
    println!(
        "DDC {:.4}, D-CAL χ² {:.2} (p = {:.3}, passed: {})",
        ddc(&surv, taus, deltas, pit)?,
        dcal.statistic,
        dcal.p_value,
        dcal.passed()
    );
    Ok(())
}
