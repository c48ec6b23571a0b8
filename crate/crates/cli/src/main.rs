use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magic_cli::output::to_json_string;
use magic_cli::{run, CliError, Command, ExperimentConfig, Format, ScanConfig};

const EXIT_CODES: &str = "Exit codes:\n  0  success\n  2  invalid configuration or input\n  3  numerical failure (non-convergence, unstable crystal, ill-conditioned Hessian, field null); in a scan, at least one point failed";

#[derive(Parser)]
#[command(name = "magic", version, about = "Spin-spin coupling design for trapped-ion crystals in magnetic gradients", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Equilibrium, normal modes and zig-zag stability.
    Modes(Common),
    /// Coupling matrix J for the configured gradient.
    Couple(Common),
    /// Field and gradient of |B| along a line above a conductor geometry.
    Field(Common),
    /// Exact Ising ground states of J, with frustration diagnostics for two chains.
    GroundState(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON config; a JSON artifact re-runs its embedded config.
    #[arg(long)]
    config: PathBuf,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Linear scan `key=start:stop:steps`, key one of alpha_x, d (m), b (T/m), omega_z (Hz).
    #[arg(long)]
    scan: Option<String>,
}

fn execute(command: Command, args: Common) -> Result<i32, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = &args.scan {
        cfg.scan = Some(ScanConfig::parse(s)?);
    }
    if let Some(f) = args.format {
        cfg.output.format = match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        };
    }
    if let Some(out) = &args.out {
        cfg.output.path = Some(out.display().to_string());
    }
    let artifact = run(command, &cfg)?;
    for (i, e) in &artifact.failures {
        eprintln!("point {i}: {e}");
    }
    let text = match cfg.output.format {
        Format::Json => to_json_string(&artifact.json),
        Format::Csv => artifact.csv.clone(),
    };
    match &cfg.output.path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::config(format!("cannot write {p}: {e}")))?,
        None => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(CliError::config(format!("cannot write to stdout: {e}")));
                }
            }
        }
    }
    Ok(artifact.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Modes(a) => (Command::Modes, a),
        Cmd::Couple(a) => (Command::Couple, a),
        Cmd::Field(a) => (Command::Field, a),
        Cmd::GroundState(a) => (Command::GroundState, a),
    };
    match execute(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
