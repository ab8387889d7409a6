//! Batch front end: `run`, `restart`, `check`, `version`.
//!
//! Exit status 0 on success, 1 for invalid input (arguments, configuration,
//! species files), 2 for failures after the simulation has been set up.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use rigidmd::config::CONFIG_FORMAT_VERSION;
use rigidmd::engine::CHECKPOINT_VERSION;
use rigidmd::output::OUTPUT_FORMAT_VERSION;
use rigidmd::{emit_results, parse_config, Error, Simulation, SimulationConfig};

const CHECKPOINT_FILE: &str = "checkpoint.bin";

#[derive(Parser)]
#[command(name = "rigidmd", about = "Rigid-body NVT molecular dynamics with property sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation described by a configuration file.
    Run {
        config: PathBuf,
        /// Write a checkpoint and stop once this many steps are complete.
        #[arg(long)]
        stop_after: Option<u64>,
        /// Output directory, overriding the configuration.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Continue a run from a checkpoint file.
    Restart {
        checkpoint: PathBuf,
        #[arg(long)]
        stop_after: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Validate a configuration and print it with all defaults filled in.
    Check { config: PathBuf },
    /// Print version and file format versions.
    Version,
}

enum Failure {
    Invalid(Error),
    Runtime(Error),
}

impl Failure {
    fn setup(e: Error) -> Failure {
        match e {
            Error::Config(_) | Error::Species(_) | Error::System(_) => Failure::Invalid(e),
            other => Failure::Runtime(other),
        }
    }
}

fn load(path: &Path) -> Result<rigidmd::ResolvedConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Invalid(Error::io(path, e)))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(Failure::Invalid)
}

/// Writes through a temporary file so an interrupted write never replaces a
/// good checkpoint.
fn write_checkpoint(sim: &Simulation, metadata: &str, dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(CHECKPOINT_FILE);
    let tmp = dir.join(format!("{CHECKPOINT_FILE}.tmp"));
    std::fs::write(&tmp, sim.checkpoint(metadata)).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    info!("checkpoint written to {} at step {}", path.display(), sim.step_count());
    Ok(())
}

fn drive(mut sim: Simulation, metadata: &str, stop_after: Option<u64>) -> Result<(), Failure> {
    let config = SimulationConfig::parse(metadata).map_err(Failure::Runtime)?;
    let out = config.output.clone();
    let stop = stop_after.unwrap_or(u64::MAX).min(sim.total_steps());
    let chunk = if config.checkpoint_interval == 0 { u64::MAX } else { config.checkpoint_interval };
    while sim.step_count() < stop {
        let n = chunk.min(stop - sim.step_count());
        sim.advance(n).map_err(Failure::Runtime)?;
        info!("step {} of {}", sim.step_count(), sim.total_steps());
        write_checkpoint(&sim, metadata, &out).map_err(Failure::Runtime)?;
    }
    if !sim.is_finished() {
        println!("stopped after step {}; continue with: rigidmd restart {}", sim.step_count(), out.join(CHECKPOINT_FILE).display());
        return Ok(());
    }
    write_checkpoint(&sim, metadata, &out).map_err(Failure::Runtime)?;
    let results = sim.finish().map_err(Failure::Runtime)?;
    for w in &results.warnings {
        log::warn!("{w}");
    }
    let files = emit_results(&results, &out).map_err(Failure::Runtime)?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

/// Effective configuration stored in the checkpoint, with an absolute
/// output directory.
fn metadata(config: &SimulationConfig, base: &Path, output: Option<PathBuf>) -> Result<String, Failure> {
    let mut c = config.clone();
    let out = output.unwrap_or_else(|| base.join(&c.output));
    c.output = std::path::absolute(&out).map_err(|e| Failure::Invalid(Error::io(&out, e)))?;
    Ok(c.to_string())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Version => {
            println!(
                "rigidmd {} (config format {CONFIG_FORMAT_VERSION}, checkpoint format {CHECKPOINT_VERSION}, output format {OUTPUT_FORMAT_VERSION})",
                env!("CARGO_PKG_VERSION")
            );
            Ok(())
        }
        Command::Check { config } => {
            let r = load(&config)?;
            print!("{}", r.config);
            Ok(())
        }
        Command::Run {
            config,
            stop_after,
            output,
        } => {
            let r = load(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let meta = metadata(&r.config, base, output)?;
            let sim = Simulation::new(r.composition, r.plan, r.config.seed).map_err(Failure::setup)?;
            drive(sim, &meta, stop_after)
        }
        Command::Restart {
            checkpoint,
            stop_after,
            output,
        } => {
            let bytes = std::fs::read(&checkpoint).map_err(|e| Failure::Invalid(Error::io(&checkpoint, e)))?;
            let (sim, mut meta) = Simulation::restore(&bytes).map_err(Failure::Runtime)?;
            if let Some(out) = output {
                let c = SimulationConfig::parse(&meta).map_err(Failure::Runtime)?;
                meta = metadata(&c, Path::new("."), Some(out))?;
            }
            drive(sim, &meta, stop_after)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
