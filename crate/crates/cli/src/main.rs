use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use lightcone_cli::report::{emit_report, to_csv, Format, Report};
use lightcone_cli::{load_config, run_scenario, Subcommand};

#[derive(Parser)]
#[command(name = "lightcone", version, about = "Check Lieb-Robinson type certificates against exact dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's output.dir, then ".".
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Both)]
    format: FormatArg,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(clap::Subcommand, Clone, Copy)]
enum Command {
    /// Lattice and interaction constants per tilt.
    Constants,
    /// Commutator norms against both Lieb-Robinson certificates.
    LrCheck,
    /// Product-state correlations against the correlation certificates.
    Correlations,
    /// Dynamics on nested volumes against the convergence certificate.
    Converge,
    /// Optimized Lieb-Robinson velocity.
    Velocity,
    /// Local approximation on light-cone balls.
    Localize,
    /// Built-in suite for the inhomogeneous ODE bound.
    OdeCheck,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Constants => Subcommand::Constants,
            Command::LrCheck => Subcommand::LrCheck,
            Command::Correlations => Subcommand::Correlations,
            Command::Converge => Subcommand::Converge,
            Command::Velocity => Subcommand::Velocity,
            Command::Localize => Subcommand::Localize,
            Command::OdeCheck => Subcommand::OdeCheck,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    lightcone::linalg::set_sequential();
    let cmd: Subcommand = cli.command.into();

    let Some(path) = &cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let mut cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let rows = match run_scenario(&cfg, cmd) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {cmd}: {e}");
            return ExitCode::from(2);
        }
    };
    let report = Report::new(cmd.name(), &cfg, rows);

    let dir = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let stem = cfg.output.stem.clone().unwrap_or_else(|| cmd.name().to_string());
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
        FormatArg::Both => Format::Both,
    };
    let written = match emit_report(&report, &dir, &stem, format) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    if matches!(cmd, Subcommand::Constants | Subcommand::Velocity) {
        print!("{}", to_csv(&report.rows));
    }
    let files: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    println!("{cmd}: {} rows, {} violations -> {}", report.rows.len(), report.violations, files.join(", "));

    if report.violations > 0 {
        for r in report.rows.iter().filter(|r| r.violation) {
            eprintln!(
                "violation: kind={} t={} a={} measured={:e} certificate={:e}{}",
                r.kind,
                r.t,
                r.a,
                r.measured,
                r.certificate.unwrap_or(f64::NAN),
                r.label.as_deref().map(|l| format!(" ({l})")).unwrap_or_default()
            );
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
