//! Runs a small experiment from a TOML spec the same way the command line
//! does, then prints the aggregate table.

use consurv::cli::{cmd_ablate, summary_csv, ExperimentSpec, OutputLayout};

const SPEC: &str = r#"
seeds = [0, 1]

[data]
kind = "synthetic_c2"
n_samples = 800

[train]
epochs = 30
alpha = 4.0

[metrics]
quantiles = [0.25, 0.5, 0.75]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec: ExperimentSpec = toml::from_str(SPEC)?;
    spec.validate()?;
    let out = OutputLayout::new(std::env::temp_dir().join("consurv_experiment"));
    let rows = cmd_ablate(&spec, &out)?;
    print!("{}", summary_csv(&rows));
    println!("outputs under {}", out.root.display());
    Ok(())
}
