use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;

use riseig::experiment::{run_experiment, write_outputs};
use riseig::scenario::{ScenarioConfig, PRESET_NAMES};

/// Monte-Carlo eigenvalue and sum-rate experiments for RIS-aided MIMO downlink.
///
/// Presets: fig1a fig1b fig1c fig1d (eigenvalues), fig3a fig3b (rate vs
/// power), fig4a fig4b (rate vs surface size).
#[derive(Debug, Parser)]
#[command(name = "riseig", version)]
struct Args {
    /// Preset name; omit when using --config.
    preset: Option<String>,

    /// TOML scenario file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    /// Number of Monte-Carlo trials (presets default to 100).
    #[arg(long)]
    trials: Option<usize>,

    /// Output directory for CSV and JSON files.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();

    let mut cfg = match (&args.preset, &args.config) {
        (Some(name), None) => ScenarioConfig::preset(name)?,
        (None, Some(path)) => ScenarioConfig::from_file(path)
            .with_context(|| format!("loading {}", path.display()))?,
        _ => bail!("give a preset ({}) or --config FILE", PRESET_NAMES.join(", ")),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.n_trials = trials;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;

    log::info!(
        "running {} ({:?}, {} trials, seed {}, {} threads)",
        cfg.name,
        cfg.experiment,
        cfg.n_trials,
        cfg.seed,
        args.threads
    );
    let result = run_experiment(&cfg, args.threads)?;
    if !result.failures.is_empty() {
        log::warn!("{} trials failed and were excluded", result.failures.len());
    }
    let path = write_outputs(&cfg, &result, &cfg.output_dir)?;
    println!("{}", path.display());
    Ok(())
}
