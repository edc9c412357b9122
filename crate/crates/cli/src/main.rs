use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

mod config;
mod run;

use run::{Artifact, Failure, Overrides};

#[derive(Parser)]
#[command(name = "condprob", version, about = "Conditional probabilities and dwell times in scattering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary amplitudes and group delay over a k sweep (CSV).
    Scatter(Args),
    /// Wave-packet conditional probabilities on a space-time grid (CSV).
    Evolve(Args),
    /// Conditional dwell times, closed form and optionally from packets (JSON).
    Dwell(Args),
    /// Weak value, pointer readout and zero-coupling extrapolation (JSON).
    Weak(Args),
    /// Layer-by-layer loss sensitivity of a quarter-wave mirror (CSV).
    Mirror(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature nodes across the momentum band.
    #[arg(long)]
    nodes: Option<usize>,
    /// Number of time frames.
    #[arg(long)]
    frames: Option<usize>,
}

fn load<T: DeserializeOwned>(path: &Path, kind: &str, kind_of: impl Fn(&T) -> &str) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if kind_of(&cfg) != kind {
        return Err(Failure::Config(format!("kind \"{}\" does not match subcommand {kind}", kind_of(&cfg))));
    }
    Ok(cfg)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Config(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn spectrum_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_spectrum.csv"))
}

fn emit(a: &Artifact, out: Option<&Path>) -> Result<(), Failure> {
    for w in &a.warnings {
        eprintln!("warning: {w}");
    }
    match out {
        Some(p) => {
            write_atomic(p, &a.body)?;
            if let Some(s) = &a.spectrum {
                write_atomic(&spectrum_path(p), s)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let io = |e: std::io::Error| Failure::Config(format!("stdout: {e}"));
            stdout.write_all(&a.body).map_err(io)?;
            if let Some(s) = &a.spectrum {
                stdout.write_all(b"\n").map_err(io)?;
                stdout.write_all(s).map_err(io)?;
            }
            stdout.flush().map_err(io)?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let (args, artifact) = match cli.command {
        Command::Scatter(a) => {
            let cfg = load(&a.config, "scatter", |c: &config::ScatterConfig| &c.kind)?;
            let art = run::scatter(&cfg)?;
            (a, art)
        }
        Command::Evolve(a) => {
            let cfg = load(&a.config, "evolve", |c: &config::EvolveConfig| &c.kind)?;
            let art = run::evolve(&cfg, Overrides { nodes: a.nodes, frames: a.frames })?;
            (a, art)
        }
        Command::Dwell(a) => {
            let cfg = load(&a.config, "dwell", |c: &config::DwellConfig| &c.kind)?;
            let art = run::dwell(&cfg, Overrides { nodes: a.nodes, frames: a.frames })?;
            (a, art)
        }
        Command::Weak(a) => {
            let cfg = load(&a.config, "weak", |c: &config::WeakConfig| &c.kind)?;
            let art = run::weak(&cfg)?;
            (a, art)
        }
        Command::Mirror(a) => {
            let cfg = load(&a.config, "mirror", |c: &config::MirrorConfig| &c.kind)?;
            let art = run::mirror(&cfg)?;
            (a, art)
        }
    };
    emit(&artifact, args.out.as_deref())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("condprob: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
