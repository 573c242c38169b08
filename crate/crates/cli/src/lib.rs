//! Command-line front end for `jumpsde`: configuration loading, subcommand
//! dispatch and SVG plots.

pub mod commands;
pub mod config;
pub mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run, CliError, Command};
pub use config::{ConfigError, Overrides, RunSpec};

#[derive(Debug, Parser)]
#[command(
    name = "jumpsde",
    version,
    about = "Simulate scalar SDEs driven by compound Poisson noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Sample path 0 of the driving noise and write path.csv.
    #[command(after_help = config_help())]
    SampleNoise(RunArgs),
    /// Simulate one path; writes path.csv and trajectory_<interp>.csv.
    #[command(after_help = config_help())]
    Simulate(RunArgs),
    /// Simulate every [harness] compare interpretation on shared noise; writes compare.csv and summary.json.
    #[command(after_help = config_help())]
    Compare(RunArgs),
    /// Sweep [harness] control over values; writes convergence.csv and summary.json.
    #[command(after_help = config_help())]
    Converge(RunArgs),
    /// Run the Monte Carlo ensemble; writes ensemble.csv and summary.json.
    #[command(after_help = config_help())]
    Ensemble(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Run configuration file (key = value with [sections]).
    pub config: PathBuf,
    /// Master seed (noise.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drift time step (sim.dt).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of ensemble paths (harness.n_paths).
    #[arg(long)]
    pub paths: Option<usize>,
    /// Interpretation (sim.interpretation), e.g. ito, df, marcus, df:6, marcus:rk4:0.01, closed:linear(1,0).
    #[arg(long)]
    pub interp: Option<String>,
    /// Output directory (output.directory); the default comes from JUMPSDE_OUT, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write fig1.svg / fig2.svg (output.plot = on).
    #[arg(long)]
    pub plot: bool,
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            dt: self.dt,
            paths: self.paths,
            interpretation: self.interp.clone(),
            out: self.out.clone(),
            plot: self.plot,
        }
    }
}

impl CliCommand {
    pub fn split(&self) -> (Command, &RunArgs) {
        match self {
            CliCommand::SampleNoise(a) => (Command::SampleNoise, a),
            CliCommand::Simulate(a) => (Command::Simulate, a),
            CliCommand::Compare(a) => (Command::Compare, a),
            CliCommand::Converge(a) => (Command::Converge, a),
            CliCommand::Ensemble(a) => (Command::Ensemble, a),
        }
    }
}

/// The configuration key reference appended to every subcommand's help.
pub fn config_help() -> String {
    let mut s = String::from("Configuration keys (default in brackets):\n");
    let mut section = "";
    for (sec, key, default) in config::DEFAULTS {
        if *sec != section {
            s.push_str(&format!("  [{sec}]\n"));
            section = sec;
        }
        let default = match default {
            Some("") => "[none]".to_string(),
            Some(d) => format!("[{d}]"),
            None if *sec == "model" && (*key == "f" || *key == "g") => "(required)".to_string(),
            None => "(optional)".to_string(),
        };
        s.push_str(&format!("    {key:<15} {default}\n"));
    }
    s.push_str(
        "\nExit status: 0 success, 1 configuration/validation/I-O error, 2 numerical failure.\n\
         Environment: JUMPSDE_OUT sets the default output directory.",
    );
    s
}

/// Loads the configuration, runs the command and reports errors on stderr.
/// Returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let (command, args) = cli.command.split();
    let result = RunSpec::load(&args.config, &args.overrides())
        .map_err(CliError::from)
        .and_then(|spec| run(command, &spec));
    match result {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("jumpsde {}: {e}", command.name());
            e.exit_code()
        }
    }
}
