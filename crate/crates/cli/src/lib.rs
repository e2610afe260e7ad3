//! Experiment runner: each subcommand writes `table.csv`, `plot.svg` and a
//! replayable `manifest.conf` into its output directory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod table;

pub use config::{ConfigSources, Experiment, ExperimentConfig};
pub use error::CliError;
pub use experiments::RunOutput;
pub use output::Artifacts;
pub use table::ResultTable;

/// Runs the experiment and writes its artifacts.
pub fn execute(config: &ExperimentConfig) -> Result<(RunOutput, Artifacts), CliError> {
    let out = experiments::run(config)?;
    let svg = plot::plot(&out.table, &out.plot)?;
    let manifest = output::manifest(config, &out.table, &out.summary);
    let artifacts = output::write_artifacts(&config.out, &out.table.to_csv(), &svg, &manifest)?;
    Ok((out, artifacts))
}
