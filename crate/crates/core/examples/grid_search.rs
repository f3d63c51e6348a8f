//! Sweeps channel noise and user initiative and prints the trial table.

use dialoglab::config::parse_config;
use dialoglab::harness::{run_experiment, summarize};

fn main() -> anyhow::Result<()> {
    let config = parse_config(include_str!("configs/grid_search.json"))?;
    for (key, values) in &config.meta.search {
        println!("{key}: {values:?}");
    }
    let report = run_experiment(&config)?;
    print!("{}", summarize(&report));
    if let (Some(best), Some(value)) = (report.best_trial, report.best_value) {
        println!("best trial {best}: {} = {value:.3} with {:?}", report.objective, report.trials[best].params);
    }
    Ok(())
}
