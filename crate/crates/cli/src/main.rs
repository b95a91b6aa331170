use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use collapse_cli::config::{ConfigError, ExperimentConfig};
use collapse_cli::registry::ExperimentRegistry;

/// Stochastic measurement-collapse simulations: simplex walks, pointer
/// statistics, source/sink densities, and invariant verification.
#[derive(Parser)]
#[command(name = "collapse", version, about)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: $COLLAPSE_OUT_DIR, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores). Results are identical for any
    /// value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct StateArgs {
    /// Channel weights |psi_j|^2, comma separated (e.g. 0.7,0.3).
    #[arg(long, value_delimiter = ',')]
    psi_squared: Option<Vec<f64>>,

    /// Amplitude phases in radians, comma separated.
    #[arg(long, value_delimiter = ',')]
    psi_phases: Option<Vec<f64>>,
}

#[derive(Args, Default)]
struct ApparatusArgs {
    /// Step count 2X (even).
    #[arg(long)]
    two_x: Option<usize>,

    /// Coupling strength eta in (0, 1/2).
    #[arg(long)]
    eta: Option<f64>,

    /// Number of runs / samples.
    #[arg(long)]
    runs: Option<u64>,
}

#[derive(Args, Default)]
struct WalkArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    apparatus: ApparatusArgs,

    /// Record every trajectory to trajectories.csv.
    #[arg(long)]
    record: bool,

    /// Export this many noise realizations (noise.csv + noise.bin).
    #[arg(long)]
    export_noise: Option<u64>,
}

#[derive(Args, Default)]
struct PointerArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    apparatus: ApparatusArgs,

    /// Histogram bins per z axis.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args, Default)]
struct SinksArgs {
    #[command(flatten)]
    state: StateArgs,

    /// Source strength |J0|.
    #[arg(long)]
    source: Option<f64>,

    /// Sink efficiency moduli, comma separated (complex values via config).
    #[arg(long, value_delimiter = ',')]
    sinks: Option<Vec<f64>>,
}

#[derive(Args, Default)]
struct GedankenArgs {
    #[command(flatten)]
    state: StateArgs,

    /// Field strength alpha |B| in [0, 1).
    #[arg(long)]
    alpha_b: Option<f64>,

    /// Field sign, 1 or -1; omit (or pass --marginalize) to average.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<i8>,

    /// Average over an unbiased field sign.
    #[arg(long)]
    marginalize: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run single-measurement walks and export outcome statistics.
    Walk(WalkArgs),
    /// Sample pointer records from the closed-form mixture.
    Ensemble(PointerArgs),
    /// Histogram walk-generated pointers against the exact and Gaussian
    /// densities.
    Pointer(PointerArgs),
    /// Evaluate the source/sink density matrix and its reductions.
    Sinks(SinksArgs),
    /// One controllable reweighting step with a magnetic-field sign.
    Gedanken(GedankenArgs),
    /// Run the invariant battery; exit code 1 on any failure.
    Verify,
}

fn apply_state(cfg: &mut ExperimentConfig, args: &StateArgs) {
    if let Some(w) = &args.psi_squared {
        cfg.psi_squared = w.clone();
    }
    if let Some(p) = &args.psi_phases {
        cfg.psi_phases = Some(p.clone());
    }
}

fn apply_apparatus(cfg: &mut ExperimentConfig, args: &ApparatusArgs) {
    if let Some(two_x) = args.two_x {
        cfg.two_x = Some(two_x);
    }
    if let Some(eta) = args.eta {
        cfg.eta = Some(eta);
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.outputs = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Walk(args) => {
            cfg.experiment = "walk".into();
            apply_state(&mut cfg, &args.state);
            apply_apparatus(&mut cfg, &args.apparatus);
            if args.record {
                cfg.walk.record_trajectories = true;
            }
            if let Some(count) = args.export_noise {
                cfg.walk.export_noise = count;
            }
        }
        Command::Ensemble(args) => {
            cfg.experiment = "ensemble".into();
            apply_state(&mut cfg, &args.state);
            apply_apparatus(&mut cfg, &args.apparatus);
            if let Some(bins) = args.bins {
                cfg.pointer.bins = bins;
            }
        }
        Command::Pointer(args) => {
            cfg.experiment = "pointer".into();
            apply_state(&mut cfg, &args.state);
            apply_apparatus(&mut cfg, &args.apparatus);
            if let Some(bins) = args.bins {
                cfg.pointer.bins = bins;
            }
        }
        Command::Sinks(args) => {
            cfg.experiment = "sinks".into();
            apply_state(&mut cfg, &args.state);
            if let Some(source) = args.source {
                cfg.sinks.source = source;
            }
            if let Some(sinks) = &args.sinks {
                cfg.sinks.sinks_re = Some(sinks.clone());
                cfg.sinks.sinks_im = Some(vec![0.0; sinks.len()]);
            }
        }
        Command::Gedanken(args) => {
            cfg.experiment = "gedanken".into();
            apply_state(&mut cfg, &args.state);
            if let Some(alpha_b) = args.alpha_b {
                cfg.gedanken.alpha_b = alpha_b;
            }
            if args.marginalize {
                cfg.gedanken.epsilon = None;
            } else if let Some(eps) = args.epsilon {
                cfg.gedanken.epsilon = Some(eps);
            }
        }
        Command::Verify => {
            cfg.experiment = "verify".into();
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, anyhow::Error> {
    let config = build_config(cli)?;
    let registry = ExperimentRegistry::with_builtins();

    let run_it = || registry.run(config.clone());
    let manifest = match cli.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()?
            .install(run_it),
        None => run_it(),
    }?;

    println!(
        "wrote {} file(s) to {}",
        manifest.data_files.len() + 1,
        config.output_dir().display()
    );
    if manifest.summary.get("passed") == Some(&serde_json::Value::Bool(false)) {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            if err.downcast_ref::<ConfigError>().is_some() {
                eprintln!("{err}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {err}");
                ExitCode::from(1)
            }
        }
    }
}
