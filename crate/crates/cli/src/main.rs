//! `twistop` command-line driver.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;
use output::{CommandOutput, Format, Meta};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

const DEFAULT_OUT_DIR: &str = "twistop-out";

#[derive(Parser)]
#[command(name = "twistop", version, about = "Twisted transfer operators for compact group extensions")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved; recorded in report metadata.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Pressure of φ and 2φ by the eigenvalue, determinant and orbit routes.
    Pressure,
    /// Twisted spectra for every irrep with κ ≤ kappa_max.
    Spectrum,
    /// Periodic-orbit, matrix and contour traces.
    Traces,
    /// Eigen-observable correlations and decay estimates.
    Correlations,
    /// Heat-averaged orbit sums, diagonal bound, β fit and threshold.
    Heataverage,
    /// β and γ for every supported group.
    GammaTable,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Spectrum => "spectrum",
            Command::Traces => "traces",
            Command::Correlations => "correlations",
            Command::Heataverage => "heataverage",
            Command::GammaTable => "gamma-table",
        }
    }
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(EXIT_CONFIG, "--threads must be positive");
        }
        pool = pool.num_threads(n);
    }
    if let Err(e) = pool.build_global() {
        return fail(EXIT_IO, format!("cannot start thread pool: {e}"));
    }
    let threads = rayon::current_num_threads();

    let loaded = match &cli.config {
        Some(path) => match config::load(path) {
            Ok(l) => Some(l),
            Err(e) => return fail(EXIT_CONFIG, e),
        },
        None if matches!(cli.command, Command::GammaTable) => None,
        None => return fail(EXIT_CONFIG, format!("{} requires --config", cli.command.name())),
    };

    let ctx = match loaded.as_ref().map(|l| Context::new(&l.config)).transpose() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_NUMERICAL, e),
    };
    let result = match (cli.command, &ctx) {
        (Command::GammaTable, c) => commands::gamma_table(c.as_ref()),
        (cmd, Some(c)) => match cmd {
            Command::Pressure => commands::pressure(c),
            Command::Spectrum => commands::spectrum(c),
            Command::Traces => commands::traces(c),
            Command::Correlations => commands::correlations(c),
            Command::Heataverage => commands::heataverage(c),
            Command::GammaTable => unreachable!(),
        },
        (_, None) => unreachable!(),
    };
    let out: CommandOutput = match result {
        Ok(o) => o,
        Err(e) => return fail(EXIT_NUMERICAL, e),
    };

    let dir = cli
        .out
        .clone()
        .or_else(|| loaded.as_ref().and_then(|l| l.config.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let meta = Meta::new(cli.command.name(), loaded.map(|l| l.sha256), threads, cli.seed);
    let paths = match output::write(&dir, cli.format, &meta, &out) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_IO, format!("cannot write to {}: {e}", dir.display())),
    };

    for line in &out.summary {
        println!("{line}");
    }
    for c in &out.checks {
        println!(
            "[{}] {}: {:.3e} (tolerance {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    for p in &paths {
        println!("wrote {}", p.display());
    }
    if out.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}
