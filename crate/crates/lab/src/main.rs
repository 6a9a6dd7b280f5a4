use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use homeostat_core::ddpg::Actor;
use homeostat_core::eval::eval_forward_mse;
use homeostat_core::world_model::ForwardModel;
use homeostat_core::ExperimentConfig;
use homeostat_lab::error::{LabError, Result};
use homeostat_lab::harness::{self, Mode};
use homeostat_lab::run_dir::{unix_seconds, RunDir};
use homeostat_lab::{checkpoint, config_file};

/// Curiosity-driven exploration with homeostatic regulation.
#[derive(Parser)]
#[command(name = "homeostat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key=value config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    episodes: Option<u64>,
    /// Parent directory for run directories.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent.
    Train,
    /// Train every (alpha, seed) pair from `sweep_alphas` x `sweep_seeds`.
    Sweep,
    /// Validation MSE of a forward-model checkpoint (file or run directory).
    Eval { checkpoint: PathBuf },
    /// The training loop with epsilon forced to 1.
    Baseline,
    /// Policy flow field of an actor checkpoint (file or run directory).
    Flowfield { checkpoint: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Sweep => "sweep",
            Command::Eval { .. } => "eval",
            Command::Baseline => "baseline",
            Command::Flowfield { .. } => "flowfield",
        }
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io {
            path: path.clone(),
            source: e,
        })?;
        config_file::apply_text(&mut cfg, &text)?;
    }
    if let Some(a) = cli.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(e) = cli.episodes {
        cfg.episodes = e;
    }
    config_file::finish(cfg)
}

fn checkpoint_path(path: &Path, name: &str) -> PathBuf {
    if path.is_dir() {
        path.join(name)
    } else {
        path.to_path_buf()
    }
}

fn train(cli: &Cli, cfg: &ExperimentConfig, mode: Mode, name: &str) -> Result<()> {
    let dir = RunDir::create(&cli.out, name, cfg, unix_seconds())?;
    let r = harness::run(cfg, mode, Some(&dir.path))?;
    println!("run directory: {}", dir.path.display());
    println!("top-room episodes: {}", r.top_room_total);
    println!("validation mse: {}", r.validation_mse);
    println!("elapsed: {:.1}s", r.elapsed.as_secs_f64());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::Train => train(cli, &cfg, Mode::Curious, "train"),
        Command::Baseline => train(cli, &cfg, Mode::RandomBaseline, "baseline"),
        Command::Sweep => {
            let started = unix_seconds();
            let dir = RunDir::create(&cli.out, "sweep", &cfg, started)?;
            let rows = harness::alpha_sweep(&cfg, &cfg.sweep_alphas, &cfg.sweep_seeds, Some(&dir.path), started);
            harness::write_sweep(&dir.path, &rows)?;
            print!("{}", harness::alpha_stats_csv(&harness::alpha_stats(&rows)));
            println!("run directory: {}", dir.path.display());
            for r in &rows {
                if let Err(e) = &r.outcome {
                    eprintln!("alpha={} seed={} failed: {e}", r.alpha, r.seed);
                }
            }
            Ok(())
        }
        Command::Eval { checkpoint: path } => {
            let net = checkpoint::load(&checkpoint_path(path, "forward.ckpt"))?;
            let f = ForwardModel::from_net(net, cfg.lr_forward, cfg.max_step_len)?;
            let mse = eval_forward_mse(&f, &cfg.layout()?, cfg.max_step_len, cfg.validation_pool, cfg.seed)?;
            println!("{mse}");
            Ok(())
        }
        Command::Flowfield { checkpoint: path } => {
            let net = checkpoint::load(&checkpoint_path(path, "actor.ckpt"))?;
            let actor = Actor::from_net(net, cfg.max_step_len)?;
            let (field, summary) = harness::flowfield(&actor, &cfg)?;
            let dir = RunDir::create(&cli.out, "flowfield", &cfg, unix_seconds())?;
            let out = dir.path.join("flowfield.csv");
            std::fs::write(&out, harness::flowfield_csv(&field)).map_err(|e| LabError::Io { path: out.clone(), source: e })?;
            println!("{}", harness::flow_report(&summary));
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("homeostat {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
