//! Calibration-plot data for the true hazard and for a deliberately
//! overconfident one.

use consurv::metrics::{
    calibration_plot_data, d_calibration, default_levels, max_deviation, PitConvention,
};
use consurv::model::survival_from_hazard;
use consurv::synth::{generate_oracle, OracleConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_oracle(&OracleConfig {
        n_samples: 5000,
        censoring: false,
        ..OracleConfig::default()
    })?;
    let (taus, deltas) = (&data.data.taus, &data.data.deltas);
    let truth = data.true_survival();

    // hazards inflated by half make every curve drop too early
    let hazards = data.hazard.hazards(&data.data.x);
    let biased = consurv::model::map_rows(&hazards, |row| {
        let inflated: Vec<f64> = row.iter().map(|&h| (1.5 * h).min(1.0)).collect();
        survival_from_hazard(&inflated)
    });

    let levels = default_levels(9);
    let pit = PitConvention::default();
    for (name, surv) in [("true", &truth), ("inflated", &biased)] {
        let points = calibration_plot_data(surv, taus, deltas, &levels, pit)?;
        let dcal = d_calibration(surv, taus, deltas, pit)?;
        println!(
            "{name}: max deviation {:.4}, D-CAL p = {:.3}",
            max_deviation(&points),
            dcal.p_value
        );
        for p in points {
            println!("  predicted {:.2}  observed {:.3}", p.predicted, p.observed);
        }
    }
    Ok(())
}
