use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kickshift_cli::config::{Config, Pipeline};
use kickshift_cli::{
    estimate, export_checkpoint, load_preset, run_config, CliError, Result, PRESETS,
};

/// Spectral TDSE simulations of electrons displaced by single-cycle pulses.
#[derive(Parser)]
#[command(name = "kickshift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pulse parameters for a target displacement.
    Design(RunArgs),
    /// Ground state by imaginary-time relaxation.
    Relax(RunArgs),
    /// Move a hydrogen superposition with a pulse.
    Propagate(RunArgs),
    /// <p_z> over (theta_R, phi) and the phase fit.
    ScanPhase(RunArgs),
    /// Electron transport along the four-site chain.
    Chain(RunArgs),
    /// Two-electron transport in the 1D helium model.
    Helium(RunArgs),
    /// Density snapshot and P(z) table from a checkpoint.
    Export {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in preset (see `kickshift presets`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Config file in TOML.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set pulse.omega="24 au"`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run directory; defaults to `$KICKSHIFT_OUT/<preset>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the resolved config and the cost estimate, then exit.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, env = "KICKSHIFT_OUT", default_value = "runs", hide = true)]
    out_root: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let (args, pipeline, default_preset) = match cli.command {
        Command::Design(a) => (a, Pipeline::Design, "design"),
        Command::Relax(a) => (a, Pipeline::Relax, "relax-hydrogen"),
        Command::Propagate(a) => (a, Pipeline::Transport, "transport-surrogate"),
        Command::ScanPhase(a) => (a, Pipeline::PhaseScan, "phase-scan"),
        Command::Chain(a) => (a, Pipeline::Chain, "chain4-roundtrip"),
        Command::Helium(a) => (a, Pipeline::Helium, "helium-singlet"),
        Command::Export { checkpoint, out } => {
            for path in export_checkpoint(&checkpoint, &out)? {
                println!("{}", path.display());
            }
            return Ok(());
        }
        Command::Presets => {
            for (name, description) in PRESETS {
                println!("{name:24} {description}");
            }
            return Ok(());
        }
    };
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot start {n} threads: {e}")))?;
    }
    let (label, config) = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let label = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("config")
                .to_string();
            (label, Config::from_file(path, &args.overrides)?)
        }
        (None, preset) => {
            let name = preset.as_deref().unwrap_or(default_preset);
            (name.to_string(), load_preset(name, &args.overrides)?)
        }
    };
    if config.pipeline != pipeline {
        return Err(CliError::config(format!(
            "{label} runs the {} pipeline, not {}",
            config.pipeline.name(),
            pipeline.name()
        )));
    }
    if args.dry_run {
        print!("{}", config.to_toml());
        println!("\n# estimate");
        print!("{}", estimate(&config)?.describe());
        return Ok(());
    }
    let out = args.out.unwrap_or_else(|| args.out_root.join(&label));
    let manifest = run_config(&label, &config, &out)?;
    for (key, value) in &manifest.results {
        println!("{key} = {value:.10e}");
    }
    for note in &manifest.notes {
        println!("note: {note}");
    }
    println!(
        "manifest: {}",
        out.join(kickshift_cli::MANIFEST_FILE).display()
    );
    Ok(())
}
