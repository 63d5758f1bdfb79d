use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bidisc_cli::{execute, CliError, ExperimentConfig, Format, Overrides};
use clap::Parser;

/// Run one bidisc experiment described by a TOML config.
#[derive(Parser)]
#[command(name = "bidisc", version)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn main_inner(args: Args) -> Result<(), CliError> {
    let workers = match args.workers {
        Some(0) => return Err(CliError::Config("--workers must be positive".into())),
        Some(w) => w,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let cfg = ExperimentConfig::load(&args.config)?;
    let overrides = Overrides {
        seed: args.seed,
        output: args.output,
        format: args.format,
    };
    let report = pool.install(|| execute(cfg, &overrides))?;
    match &report.output {
        Some(path) => {
            std::fs::write(path, &report.body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!("{}", report.summary);
        }
        None => {
            std::io::stdout()
                .write_all(report.body.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))?;
            eprintln!("{}", report.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
