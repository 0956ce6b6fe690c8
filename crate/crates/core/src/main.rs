use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nondipole_tdse::config::{parse_config, RunConfig};
use nondipole_tdse::run::{run, spectrum_from_checkpoint, RunOptions};
use nondipole_tdse::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Hydrogen in intense high-frequency laser pulses, with dipole and nondipole interactions.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate every job of a configuration and write its observables.
    Run {
        config: PathBuf,
        /// Output directory, overriding [outputs] directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Continue a single-job run from a checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Parse a configuration and print each job's resolved form.
    Validate { config: PathBuf },
    /// Compute observables from a stored state without propagating.
    Spectrum {
        checkpoint: PathBuf,
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<(RunConfig, String), ExitCode> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    match parse_config(&text) {
        Ok(c) => Ok((c, text)),
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            Err(ExitCode::from(EXIT_CONFIG))
        }
    }
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::InvalidParameter(_) | Error::Config(_) => ExitCode::from(EXIT_CONFIG),
        e if e.is_numerical() => ExitCode::from(EXIT_NUMERICAL),
        _ => ExitCode::from(EXIT_FAILURE),
    }
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("NDT_CACHE_DIR").map(PathBuf::from)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            let (cfg, _) = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            for (i, job) in cfg.jobs().iter().enumerate() {
                match job.resolve() {
                    Ok(r) => println!("# job {i}\n{}", r.echo()),
                    Err(e) => {
                        eprintln!("job {i}:");
                        return exit_for(&e);
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            threads,
            resume,
        } => {
            let (cfg, text) = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(EXIT_FAILURE);
                }
            }
            let opts = RunOptions {
                out_dir: out,
                resume,
                cache_dir: cache_dir(),
            };
            let result = match run(&cfg, &text, &opts) {
                Ok(r) => r,
                Err(e) => return exit_for(&e),
            };
            for job in &result.jobs {
                let label = match job.sweep_value {
                    Some(v) => format!("{} {}={v}", job.model.name(), result.sweep_parameter.unwrap_or("")),
                    None => job.model.name().to_string(),
                };
                match (&job.output, &job.error) {
                    (Some(o), _) => println!(
                        "{label}: P_ion = {:.8} norm = {:.12} absorbed = {:.3e} steps = {} krylov = {:.2} ({:.1} s)",
                        o.ionization_probability, o.final_norm, o.absorbed_fraction, o.steps, o.mean_krylov_dim, o.wall_seconds
                    ),
                    (None, Some(e)) => eprintln!("{label}: failed: {}", e.message),
                    (None, None) => {}
                }
            }
            if result.any_numerical_failure() {
                ExitCode::from(EXIT_NUMERICAL)
            } else if result.failed().next().is_some() {
                ExitCode::from(EXIT_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Spectrum {
            checkpoint,
            config,
            out,
        } => {
            let (cfg, _) = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let dir = out.unwrap_or_else(|| cfg.outputs.directory.clone());
            match spectrum_from_checkpoint(&cfg, &checkpoint, &dir, cache_dir().as_deref()) {
                Ok((p_ion, tables)) => {
                    println!("P_ion = {p_ion:.8}");
                    for t in tables {
                        println!("{} {} {}", t.kind, t.path.display(), t.sha256);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
    }
}
