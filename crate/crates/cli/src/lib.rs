//! Command-line front end: configuration, subcommands and exit codes.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "homog", version, about = "Effective diffusivity by corrector solves and Monte Carlo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for the parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Override the output directory of the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a chessboard medium and write its randomness and statistics.
    MediumSample {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the corrector equations and write the corrector matrix.
    SolveCorrector {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte Carlo estimate of the effective matrix with diagnostics.
    Estimate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Time averages of an environment observable.
    Ergodic {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare a Monte Carlo matrix with a corrector matrix.
    Compare {
        corrector: PathBuf,
        monte_carlo: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
    },
    /// Every configured stage followed by the comparison.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Run a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let pool = match cli.workers {
        Some(0) => {
            eprintln!("error: --workers must be positive");
            return 2;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let load = |path: &PathBuf| {
        let cfg = RunConfig::load(path)?;
        commands::Run::new(cfg, cli.out.clone(), cli.seed)
    };
    match &cli.command {
        Command::MediumSample { config } => {
            let s = commands::medium_sample(&load(config)?)?;
            for st in &s.stripes {
                println!("{}: {} cells, mean color {:.4} (p = {}, 3 sigma {:.4})", st.name, st.cells, st.mean_color, s.p, st.three_sigma);
            }
            Ok(0)
        }
        Command::SolveCorrector { config } => {
            let r = commands::solve_corrector(&load(config)?)?;
            println!("A = {:?}", r.effective.matrix);
            println!("extrapolation error {:.3e}", r.effective.error_estimate.unwrap_or(f64::NAN));
            Ok(0)
        }
        Command::Estimate { config } => {
            let (r, d) = commands::estimate(&load(config)?)?;
            println!("A_hat = {:?} +/- {:?}", r.effective.matrix, r.effective.ci);
            println!("gaussian: {}", d.flags.gaussian);
            Ok(0)
        }
        Command::Ergodic { config } => {
            let r = commands::ergodic(&load(config)?)?;
            println!(
                "pi(f) = {:.6}, final relative error {:.3e}, slope {:?}",
                r.curve.reference, r.curve.final_relative_error, r.curve.slope
            );
            Ok(0)
        }
        Command::Compare {
            corrector,
            monte_carlo,
            tolerance,
        } => {
            let c = commands::compare(corrector, monte_carlo, *tolerance)?;
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            commands::write_comparison(&out, &c)?;
            println!("relative Frobenius error {:.4e} (tolerance {}): {}", c.relative_frobenius, c.tolerance, if c.pass { "pass" } else { "fail" });
            Ok(if c.pass { 0 } else { 1 })
        }
        Command::Report { config } => {
            let r = commands::report(&load(config)?)?;
            Ok(match r.comparison {
                Some(c) => {
                    println!("relative Frobenius error {:.4e}: {}", c.relative_frobenius, if c.pass { "pass" } else { "fail" });
                    if c.pass { 0 } else { 1 }
                }
                None => 0,
            })
        }
    }
}
