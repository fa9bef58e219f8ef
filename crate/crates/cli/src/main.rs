//! `gptw`: periodic traveling waves of the Gross-Pitaevskii equation.

mod commands;
mod config;
mod error;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_config_text, Command, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "gptw", version, about = "Pseudospectral traveling-wave workbench")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimize the action from 1 + w_R and/or perturbed constants.
    Minimize(Flags),
    /// Relax a path from 1 to 1 + w_R and refine its highest node to a saddle.
    Mp(Flags),
    /// Smallest Hessian eigenvalues at a unit constant.
    Spectrum(Flags),
    /// Multi-start search for nonconstant solutions over a list of periods.
    Scan(Flags),
    /// Energy and momentum of 1 + w_R over a list of R.
    Testfn(Flags),
    /// Certificate report for a stored field.
    Certify(FileFlags),
    /// Grid and field metadata of a stored field.
    Info(FileFlags),
}

#[derive(Args, Default)]
struct Flags {
    /// Wave speed.
    #[arg(long)]
    c: Option<String>,
    /// Period, or a comma-separated list for `scan`.
    #[arg(long = "T")]
    period: Option<String>,
    /// Space dimension.
    #[arg(long = "N")]
    dim: Option<String>,
    /// Grid points per axis.
    #[arg(long)]
    size: Option<String>,
    /// Vortex half-separation, or a comma-separated list for `testfn`.
    #[arg(long = "R")]
    radius: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number of random starts.
    #[arg(long)]
    starts: Option<String>,
    /// Gradient tolerance (certificate tolerance for `certify`).
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    /// Path nodes for `mp`.
    #[arg(long)]
    nodes: Option<String>,
    /// Phase of the constant for `spectrum`.
    #[arg(long)]
    theta: Option<String>,
    /// Number of eigenvalues for `spectrum`.
    #[arg(long)]
    count: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FileFlags {
    /// GPTW field file.
    file: PathBuf,
    #[command(flatten)]
    flags: Flags,
}

impl Flags {
    fn values(&self) -> Result<BTreeMap<String, String>, CliError> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("c", &self.c),
            ("T", &self.period),
            ("N", &self.dim),
            ("size", &self.size),
            ("R", &self.radius),
            ("seed", &self.seed),
            ("starts", &self.starts),
            ("tol", &self.tol),
            ("max-iters", &self.max_iters),
            ("nodes", &self.nodes),
            ("theta", &self.theta),
            ("count", &self.count),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("GPTW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("GPTW_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags, file) = match &cli.command {
        Cmd::Minimize(f) => (Command::Minimize, f, None),
        Cmd::Mp(f) => (Command::Mp, f, None),
        Cmd::Spectrum(f) => (Command::Spectrum, f, None),
        Cmd::Scan(f) => (Command::Scan, f, None),
        Cmd::Testfn(f) => (Command::Testfn, f, None),
        Cmd::Certify(ff) => (Command::Certify, &ff.flags, Some(ff.file.as_path())),
        Cmd::Info(ff) => (Command::Info, &ff.flags, Some(ff.file.as_path())),
    };
    let result = configure_threads()
        .and_then(|_| flags.values())
        .and_then(|values| RunConfig::resolve(command, &values))
        .and_then(|cfg| commands::run(&cfg, file));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gptw {}: {e}", command.name());
            e.exit_code()
        }
    }
}
