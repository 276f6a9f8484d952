use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gaugeforge_cli::commands::{self, Command, Context};
use gaugeforge_cli::config::ExperimentConfig;

/// Gauge-fixing verification suites for nonrelativistic QED on a periodic lattice.
#[derive(Debug, Parser)]
#[command(name = "gaugeforge", version)]
struct Cli {
    /// Experiment configuration (`[section]` / `key = value`); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random fields, states and the custom gauge.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print the JSON report instead of the text summary.
    #[arg(long, global = true)]
    json: bool,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Helmholtz decomposition of a random field.
    Decompose,
    /// Polarization fields and Gauss's law per gauge.
    Polarization,
    /// Vector potentials of a random transverse field per gauge.
    Potential,
    /// Gauss law and gauge conditions.
    VerifyGauge,
    /// Dirac brackets against closed forms.
    VerifyBrackets,
    /// Coulomb trajectory against every other gauge.
    DynamicsCompare,
    /// Lowest eigenvalues of the quantized Hamiltonians.
    Spectrum,
    /// Unitary equivalence over the Fock cutoff sweep.
    Equivalence,
    /// Every subcommand.
    All,
}

impl Sub {
    fn command(&self) -> Command {
        match self {
            Sub::Decompose => Command::Decompose,
            Sub::Polarization => Command::Polarization,
            Sub::Potential => Command::Potential,
            Sub::VerifyGauge => Command::VerifyGauge,
            Sub::VerifyBrackets => Command::VerifyBrackets,
            Sub::DynamicsCompare => Command::DynamicsCompare,
            Sub::Spectrum => Command::Spectrum,
            Sub::Equivalence => Command::Equivalence,
            Sub::All => Command::All,
        }
    }
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("GAUGEFORGE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| format!("GAUGEFORGE_THREADS: expected a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path),
        None => Ok(ExperimentConfig::default()),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| config.output.directory.clone());
    let hash = config.hash();
    let json = config.output.formats.contains(&gaugeforge_cli::config::Format::Json);
    let ctx = match Context::new(config, cli.seed, out.clone()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let command = cli.command.command();
    let report = match commands::run(&ctx, command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {} failed: {e}", command.name());
            return ExitCode::from(1);
        }
    };
    if json {
        if let Err(e) = commands::write_report(&out, &report, &hash, cli.seed) {
            eprintln!("error: cannot write report: {e}");
            return ExitCode::from(1);
        }
    }
    if cli.json {
        print!("{}", report.to_json_string(&hash, cli.seed));
    } else if !cli.quiet || !report.pass() {
        print!("{}", report.to_text(&hash));
    }
    if report.pass() {
        ExitCode::SUCCESS
    } else {
        for c in report.failures() {
            eprintln!("failed: {} = {:e} (threshold {:e})", c.name, c.value, c.threshold);
        }
        ExitCode::from(1)
    }
}
