use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shapegeo_cli::{execute, ConfigSources, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "shapegeo",
    version,
    about = "Run a shape-geometry experiment and write table.csv, plot.svg and manifest.conf"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Half great circles on Grossman's ellipsoid.
    Grossman(RunArgs),
    /// Shrinking L² path lengths between a circle and its translate.
    #[command(name = "vanishing-l2")]
    VanishingL2(RunArgs),
    /// Boundary-value geodesics on the sphere against arccos.
    #[command(name = "sphere-bvp")]
    SphereBvp(RunArgs),
    /// Circle flows conjugated to rotations; non-injectivity of exp.
    #[command(name = "exp-circle")]
    ExpCircle(RunArgs),
    /// Finite-time escape of dx/dt = x².
    Blowup(RunArgs),
    /// Kernel-metric geodesics between landmark configurations.
    #[command(name = "landmark-geodesic")]
    LandmarkGeodesic(RunArgs),
    /// Time-dependent flows on the line and their inverses.
    #[command(name = "lddmm-flow")]
    LddmmFlow(RunArgs),
    /// Sobolev embedding and multiplication ratios.
    #[command(name = "sobolev-props")]
    SobolevProps(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; a previous manifest.conf works too.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one parameter; repeatable, later wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory [default: out/<subcommand>].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::Grossman(a) => (Experiment::Grossman, a),
            Command::VanishingL2(a) => (Experiment::VanishingL2, a),
            Command::SphereBvp(a) => (Experiment::SphereBvp, a),
            Command::ExpCircle(a) => (Experiment::ExpCircle, a),
            Command::Blowup(a) => (Experiment::Blowup, a),
            Command::LandmarkGeodesic(a) => (Experiment::LandmarkGeodesic, a),
            Command::LddmmFlow(a) => (Experiment::LddmmFlow, a),
            Command::SobolevProps(a) => (Experiment::SobolevProps, a),
        }
    }
}

fn main() -> ExitCode {
    let (experiment, args) = Cli::parse().command.split();
    let sources = ConfigSources {
        file: args.config,
        overrides: args.set,
        out: args.out,
        seed_env: None,
    }
    .with_env_seed();
    let result = ExperimentConfig::resolve(experiment, &sources).and_then(|cfg| execute(&cfg));
    match result {
        Ok((out, artifacts)) => {
            println!(
                "{experiment}: {} rows -> {}",
                out.table.len(),
                artifacts.table.display()
            );
            for (k, v) in &out.summary {
                println!("  {k} = {v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json(Some(experiment.name())));
            ExitCode::from(e.exit_code())
        }
    }
}
