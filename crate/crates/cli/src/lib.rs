//! `ncfffd` command-line front end: config handling, experiment drivers and
//! CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod goldens;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::config::{Algo, DecoderChoice, DetectorKind, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{write_json, CommandName, RunManifest, MANIFEST_SCHEMA_VERSION};

/// Seed used when neither `--seed` nor `NCFFFD_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_240_607;

#[derive(Debug, Parser)]
#[command(name = "ncfffd", version, about = "NC-FFFD constellation design, error rates and covertness")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    #[arg(long, global = true, env = "NCFFFD_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Config override `key.path=value`; repeatable, applied in order.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub nb: Option<usize>,
    #[arg(long, global = true)]
    pub nc: Option<usize>,
    #[arg(long = "snr-db", global = true, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Charlie's forwarding delay in slots.
    #[arg(long, global = true)]
    pub delay: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a constellation (TLGD, EB or DT-EB).
    Optimize {
        #[arg(long, value_enum)]
        algo: Option<Algo>,
        #[arg(long = "delta-re")]
        delta_re: Option<f64>,
        #[arg(long = "delta-dt")]
        delta_dt: Option<f64>,
        #[arg(long = "nc-cap")]
        nc_cap: Option<usize>,
    },
    /// Closed-form error probabilities of a constellation.
    Evaluate {
        /// Constellation or optimizer-result JSON.
        #[arg(long)]
        constellation: Option<PathBuf>,
    },
    /// Monte Carlo error rates of a constellation.
    Simulate {
        #[arg(long)]
        constellation: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_enum)]
        decoder: Option<DecoderChoice>,
    },
    /// Energy or correlation detector at Dave.
    Detect {
        #[arg(long)]
        constellation: Option<PathBuf>,
        #[arg(long, value_enum)]
        detector: Option<DetectorKind>,
        /// Frame lengths, comma separated.
        #[arg(long = "L", value_delimiter = ',')]
        l: Option<Vec<usize>>,
        /// Thresholds, comma separated.
        #[arg(long, value_delimiter = ',')]
        tau: Option<Vec<f64>>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Parameter sweep described by the `sweep` config section.
    Sweep {
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Check the bundled golden rows (JD closed form, JMAP simulation).
    Goldens {
        #[arg(long)]
        trials: Option<u64>,
    },
}

impl Command {
    pub fn name(&self) -> CommandName {
        match self {
            Command::Optimize { .. } => CommandName::Optimize,
            Command::Evaluate { .. } => CommandName::Evaluate,
            Command::Simulate { .. } => CommandName::Simulate,
            Command::Detect { .. } => CommandName::Detect,
            Command::Sweep { .. } => CommandName::Sweep,
            Command::Goldens { .. } => CommandName::Goldens,
        }
    }
}

fn push<T: serde::Serialize>(out: &mut Vec<String>, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        out.push(format!("{key}={}", serde_json::to_string(v).expect("flag values serialize")));
    }
}

/// Reads a constellation file (bare constellation or optimizer result) into
/// overrides. An optimizer result also supplies `N_C` unless `--nc` is given.
fn constellation_overrides(path: &PathBuf, nc_flag: bool, out: &mut Vec<String>) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (c, n_c) = match v.get("constellation") {
        Some(c) => (c.clone(), v.get("n_c_required").and_then(Value::as_u64)),
        None => (v, None),
    };
    out.push(format!("constellation={c}"));
    if let (Some(n), false) = (n_c, nc_flag) {
        out.push(format!("system.N_C={n}"));
    }
    Ok(())
}

/// Turns the parsed command line into a manifest plus resolved config.
pub fn resolve(cli: &Cli) -> Result<(RunManifest, RunConfig)> {
    let mut ov = cli.set.clone();
    push(&mut ov, "system.M", &cli.m);
    push(&mut ov, "system.N_B", &cli.nb);
    push(&mut ov, "system.N_C", &cli.nc);
    push(&mut ov, "system.snr_db", &cli.snr_db);
    push(&mut ov, "system.delay_n", &cli.delay);
    match &cli.command {
        Command::Optimize {
            algo,
            delta_re,
            delta_dt,
            nc_cap,
        } => {
            push(&mut ov, "optimizer.algo", algo);
            push(&mut ov, "optimizer.delta_re", delta_re);
            push(&mut ov, "optimizer.delta_dt", delta_dt);
            push(&mut ov, "optimizer.n_c_cap", nc_cap);
        }
        Command::Evaluate { constellation } => {
            if let Some(p) = constellation {
                constellation_overrides(p, cli.nc.is_some(), &mut ov)?;
            }
        }
        Command::Simulate {
            constellation,
            trials,
            decoder,
        } => {
            if let Some(p) = constellation {
                constellation_overrides(p, cli.nc.is_some(), &mut ov)?;
            }
            push(&mut ov, "simulation.trials", trials);
            push(&mut ov, "simulation.decoder", decoder);
        }
        Command::Detect {
            constellation,
            detector,
            l,
            tau,
            k,
            mode,
            trials,
            alpha,
        } => {
            if let Some(p) = constellation {
                constellation_overrides(p, cli.nc.is_some(), &mut ov)?;
            }
            push(&mut ov, "detector.kind", detector);
            push(&mut ov, "detector.L", l);
            push(&mut ov, "detector.tau", tau);
            push(&mut ov, "detector.k", k);
            push(&mut ov, "detector.mode", mode);
            push(&mut ov, "detector.trials", trials);
            push(&mut ov, "detector.alpha", alpha);
        }
        Command::Sweep { trials } => push(&mut ov, "sweep.trials", trials),
        Command::Goldens { trials } => push(&mut ov, "simulation.trials", trials),
    }
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        command: cli.command.name(),
        config_path: cli.config.clone(),
        out_dir: cli.out.clone(),
        seed: cli.seed,
        overrides: ov,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    manifest.validate()?;
    let cfg = RunConfig::load(manifest.config_path.as_deref(), &manifest.overrides)?;
    Ok((manifest, cfg))
}

/// Runs one command and returns the lines to print.
pub fn execute(manifest: &RunManifest, cfg: &RunConfig) -> Result<Vec<String>> {
    std::fs::create_dir_all(&manifest.out_dir).map_err(|e| CliError::io(&manifest.out_dir, e))?;
    write_json(&manifest.path_in("manifest.json"), manifest)?;
    write_json(&manifest.path_in("config.resolved.json"), cfg)?;
    match manifest.command {
        CommandName::Optimize => commands::optimize(manifest, cfg),
        CommandName::Evaluate => commands::evaluate(manifest, cfg),
        CommandName::Simulate => commands::simulate_cmd(manifest, cfg),
        CommandName::Detect => commands::detect(manifest, cfg),
        CommandName::Sweep => commands::sweep(manifest, cfg),
        CommandName::Goldens => goldens::run(manifest, cfg),
    }
}

/// Full CLI entry point; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let work = || -> Result<Vec<String>> {
        let (manifest, cfg) = resolve(&cli)?;
        execute(&manifest, &cfg)
    };
    let result = match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} workers: {e}"))),
        },
        None => work(),
    };
    match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            error::exit::OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
