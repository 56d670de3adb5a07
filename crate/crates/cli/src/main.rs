//! `apfp`: command-line front end for the positive factorization laboratory.
//!
//! Every subcommand writes one report (JSON or CSV) to stdout or `--out`.
//! Reports are written before a nonzero exit whenever the command got far
//! enough to produce one.

mod bench;
mod commands;
mod config;
mod demo;
mod error;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use apfp_core::factorization::{OptimizerConfig, DEFAULT_FACTORS};
use apfp_core::quadrature::QuadratureConfig;
use clap::{Parser, Subcommand};

use crate::config::{parse_override, RunConfig};
use crate::demo::DemoName;
use crate::error::CliError;
use crate::report::{OutputFormat, Report};

#[derive(Parser, Debug)]
#[command(name = "apfp", version, about = "Positive factorization, trace determinants and K0 pairings in finite direct sums of matrix algebras")]
struct Cli {
    /// Seed for every random choice (optimizer restarts, density probes, demos).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Initial Simpson panels per smooth piece of a path.
    #[arg(long, global = true, default_value_t = 256)]
    quad_steps: usize,

    /// Absolute agreement required between successive panel doublings.
    #[arg(long, global = true, default_value_t = 1e-9)]
    quad_tol: f64,

    /// Panel count at which quadrature gives up.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    quad_max_steps: usize,

    /// Optimizer restarts for factorization and distance probes.
    #[arg(long, global = true, default_value_t = 16)]
    restarts: usize,

    /// BFGS iterations per restart.
    #[arg(long, global = true, default_value_t = 2000)]
    max_iterations: usize,

    /// BFGS gradient-norm stopping threshold.
    #[arg(long, global = true, default_value_t = 1e-10)]
    gradient_tol: f64,

    /// Relative residual a factorization must reach.
    #[arg(long, global = true, default_value_t = 1e-6)]
    target_residual: f64,

    /// Override a named tolerance, e.g. `--tol membership=1e-6` (repeatable).
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE", value_parser = parse_override)]
    tolerances: Vec<(String, f64)>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    output: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Determinant of a path of invertibles, its class modulo the lattice, and loop pairings.
    DetPath {
        /// Path JSON file, or `-` for stdin.
        path_file: PathBuf,
    },
    /// Factor an element into positive invertibles.
    Factor {
        /// Element JSON file, or `-` for stdin.
        element_file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FACTORS)]
        factors: usize,
    },
    /// Decide membership in the closure of products of positives.
    Membership {
        /// Element JSON file, or `-` for stdin.
        element_file: PathBuf,
    },
    /// Evaluate the four structural conditions for an algebra or an abstract K0 descriptor.
    Check {
        /// Descriptor JSON file, or `-` for stdin.
        descriptor_file: PathBuf,
    },
    /// Run a bundled end-to-end scenario and assert its invariants.
    Demo {
        #[arg(long, value_enum)]
        name: DemoName,
    },
    /// Time the main operations on seeded inputs.
    Bench {
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

impl Cli {
    fn run_config(&self) -> Result<RunConfig, CliError> {
        if self.quad_steps < 2 || self.quad_max_steps < self.quad_steps {
            return Err(CliError::Config("need 2 <= --quad-steps <= --quad-max-steps".into()));
        }
        if !(self.quad_tol > 0.0 && self.target_residual > 0.0 && self.gradient_tol > 0.0) {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(CliError::Config("--restarts and --max-iterations must be positive".into()));
        }
        let quadrature = QuadratureConfig { steps: self.quad_steps, tol: self.quad_tol, max_steps: self.quad_max_steps };
        let optimizer = OptimizerConfig {
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tol,
            target_residual: self.target_residual,
            seed: self.seed,
        };
        RunConfig::new(self.seed, &self.tolerances, quadrature, optimizer, self.output).map_err(CliError::Config)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("APFP_THREADS") else {
        return Ok(());
    };
    let cap: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("APFP_THREADS must be a positive integer, got `{raw}`")))?;
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(cap.min(available))
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<(Report, u8), CliError> {
    match &cli.command {
        Command::DetPath { path_file } => commands::det_path(path_file, cfg),
        Command::Factor { element_file, factors } => commands::factor(element_file, *factors, cfg),
        Command::Membership { element_file } => commands::membership(element_file, cfg),
        Command::Check { descriptor_file } => commands::check(descriptor_file, cfg),
        Command::Demo { name } => demo::run(*name, cfg),
        Command::Bench { repeats } => bench::run(*repeats, cfg),
    }
}

fn emit(report: &Report, cli: &Cli) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(cli.output, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            report.write(cli.output, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    configure_threads()?;
    let cfg = cli.run_config()?;
    let (report, code) = dispatch(cli, &cfg)?;
    emit(&report, cli)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
