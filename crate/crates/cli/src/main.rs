//! `xmas` command-line front end.

mod commands;
mod config;
mod output;
mod repro;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "xmas", version, about = "Affine multi-wire signaling: channel synthesis, link simulation and matrix search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Overrides the seed of PRBS patterns.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also render eye diagrams as SVG.
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geometry to pulse-response CSV plus an IL/FEXT report.
    SynthChannel,
    /// Symbol stream to wire and decoded waveforms.
    Simulate,
    /// Worst-case eye per decoded output.
    Eye,
    /// Crosstalk-induced jitter per decoded output.
    Cij,
    /// Search encode/decode matrices for one wire count.
    Search,
    /// Sweep geometry and wire count for the best edge density.
    Optimize,
    /// Side-by-side metrics for several schemes.
    Compare,
    /// Named reproduction recipes.
    Repro {
        #[arg(value_enum)]
        recipe: repro::Recipe,
    },
}

/// Raised when the run is valid but no design meets the constraints.
#[derive(Debug)]
pub struct Infeasible(pub String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Infeasible {}

fn exit_code(e: &anyhow::Error) -> u8 {
    let infeasible = e.chain().any(|c| {
        c.downcast_ref::<Infeasible>().is_some() || c.downcast_ref::<xmas::Error>().is_some_and(xmas::Error::is_infeasible)
    });
    if infeasible {
        2
    } else {
        1
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    }
    std::fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::SynthChannel => commands::synth_channel(cli),
        Command::Simulate => commands::simulate(cli),
        Command::Eye => commands::eye_cmd(cli),
        Command::Cij => commands::cij_cmd(cli),
        Command::Search => commands::search(cli),
        Command::Optimize => commands::optimize(cli),
        Command::Compare => commands::compare(cli),
        Command::Repro { recipe } => repro::run(cli, *recipe),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn infeasible_maps_to_two() {
        let e = anyhow::Error::new(xmas::Error::InfeasibleRows("none".into())).context("search");
        assert_eq!(exit_code(&e), 2);
        assert_eq!(exit_code(&anyhow::anyhow!(Infeasible("x".into()))), 2);
        assert_eq!(exit_code(&anyhow::Error::new(xmas::Error::ZeroSeed)), 1);
    }
}
