use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hyperrom::snapshots::format_f64;
use hyperrom_cli::{pipeline, sweep, CliError, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(
    name = "hyperrom",
    version,
    about = "Hyper-reduced ROMs of the 1D inviscid Burgers equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Settings file (`[section]` headers, `key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one setting, e.g. `--set pod.k=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output directory; takes precedence over `io.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for the sweep.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the full-order model and store its trajectory.
    Fom,
    /// Compute the state and hyper-reduction bases from the stored trajectory.
    Pod,
    /// Select sample rows of the stored hyper-reduction basis.
    Sample,
    /// Run the reduced model against the stored artifacts.
    Rom,
    /// Sweep the sample count for every configured algorithm.
    Sweep,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(out) = cli.out {
        cfg.io.out = out;
    }
    match cli.command {
        Command::Fom => {
            let path = pipeline::cmd_fom(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Pod => {
            let (basis, nonlinear) = pipeline::cmd_pod(&cfg)?;
            println!(
                "state basis: {} modes, hyper-reduction basis: {} modes",
                basis.rank(),
                nonlinear.rank()
            );
        }
        Command::Sample => {
            let samples = pipeline::cmd_sample(&cfg)?;
            println!("selected {} rows with {}", samples.len(), samples.algorithm);
        }
        Command::Rom => {
            let e = pipeline::cmd_rom(&cfg)?;
            println!("e_max = {}", format_f64(e));
        }
        Command::Sweep => {
            if cli.jobs == 0 {
                return Err(CliError::Config("--jobs must be positive".into()));
            }
            let (path, rows) = sweep::cmd_sweep(&cfg, cli.jobs)?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
    }
    Ok(())
}

/// Exit status for a full argument list: 0 on success and for help or
/// version output, 1 for usage and input errors, 2 for numerical failures.
fn status<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(status(std::env::args_os()))
}
