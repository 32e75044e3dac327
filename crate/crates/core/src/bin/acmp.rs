//! CLI for the Allen-Cahn maximum-principle harness.
//!
//! Subcommands: check-potential, run, sweep, competitor. Exit code 0 means
//! the run completed (pass/fail flags live in the report); nonzero means a
//! config or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ac_maxprin::competitor::verify_competitor;
use ac_maxprin::grid::read_field_csv_path;
use ac_maxprin::harness::{
    build_potential, run_experiment, run_sweep, ExperimentConfig, PotentialConfig,
};
use ac_maxprin::potential::check_hypotheses;

#[derive(Parser)]
#[command(
    name = "acmp",
    about = "Discrete Allen-Cahn maximum-principle experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the hypothesis checkers for the potential named in a config.
    CheckPotential {
        config: PathBuf,
        #[arg(long, default_value_t = 64)]
        n_dirs: usize,
        #[arg(long, default_value_t = 50)]
        n_radii: usize,
        #[arg(long, default_value_t = 2000)]
        n_samples: usize,
    },
    /// Run one experiment from a JSON config and emit the report.
    Run { config: PathBuf },
    /// Run the experiment across a list of grid spacings.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
    },
    /// Verify the cutoff competitor on a field loaded from CSV.
    Competitor {
        field: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        potential: String,
        #[arg(long)]
        r0: Option<f64>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> ac_maxprin::Result<()> {
    match cli.command {
        Command::CheckPotential {
            config,
            n_dirs,
            n_radii,
            n_samples,
        } => {
            let cfg = ExperimentConfig::from_json_path(&config)?;
            let w = build_potential(&cfg.potential)?;
            let report = check_hypotheses(&w, n_dirs, n_radii, n_samples)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_json_path(&config)?;
            let report = run_experiment(&cfg)?;
            match &cfg.report_path {
                Some(path) => eprintln!("report written to {path}"),
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::Sweep { config, h_list } => {
            let cfg = ExperimentConfig::from_json_path(&config)?;
            let reports = run_sweep(&cfg, &h_list)?;
            println!("{}", serde_json::to_string_pretty(&reports)?);
        }
        Command::Competitor {
            field,
            a,
            r,
            potential,
            r0,
        } => {
            let u = read_field_csv_path(&field)?;
            let w = build_potential(&PotentialConfig {
                name: potential,
                a: None,
                r0,
                wells: None,
            })?;
            let report = verify_competitor(&u, &a, r, &w)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}
