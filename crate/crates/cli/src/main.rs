use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use aquaped::dynamics::{Mode, ModelTag};
use aquaped_cli::commands;
use aquaped_cli::config::{GaitSpec, RunConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aquaped", version, about = "Paddling-quadruped force models, swimming simulation and gait search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration's top-level seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Straight,
    Turn,
}

#[derive(Clone, Copy, ValueEnum)]
enum TagArg {
    Ef,
    Lstm,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic force logs over the configured grid.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Preprocess, split and fit the surrogate; compares against the empirical model on the test split.
    Train {
        #[command(flatten)]
        common: Common,
        /// Directory of force logs.
        #[arg(long)]
        data: PathBuf,
    },
    /// Per-speed error tables, box summaries and prediction curves on the test split.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Simulate one gait and summarize the run.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value = "ef")]
        model_tag: TagArg,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Gait file (as written by `optimize`); defaults to `[simulate.gait]`.
        #[arg(long)]
        gait: Option<PathBuf>,
    },
    /// Multi-objective gait search; writes the ranked report and the best gaits.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "straight")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "ef")]
        model_tag: TagArg,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Earlier optimize report whose ranked gaits seed the initial population.
        #[arg(long)]
        init: Option<PathBuf>,
    },
}

fn mode(m: ModeArg) -> Mode {
    match m {
        ModeArg::Straight => Mode::Straight,
        ModeArg::Turn => Mode::Turn,
    }
}

fn tag(t: TagArg) -> ModelTag {
    match t {
        TagArg::Ef => ModelTag::Ef,
        TagArg::Lstm => ModelTag::Lstm,
    }
}

fn load_config(c: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Synth { common } => {
            let cfg = load_config(&common).context("config")?;
            let m = commands::synth(&cfg, &common.out).context("synth")?;
            println!("synth: wrote {} force logs to {}", m.outputs.len(), common.out.display());
        }
        Command::Train { common, data } => {
            let cfg = load_config(&common).context("config")?;
            let (history, report) = commands::train(&cfg, &data, &common.out).context("train")?;
            println!(
                "train: {} epochs (best {}), sets train/val/test = {:?}",
                history.epochs.len(),
                report.best_epoch,
                report.sets
            );
            println!("{:>8} {:>12} {:>12}", "v_flow", "lstm_mse", "ef_mse");
            for s in &report.by_speed {
                println!("{:>8.3} {:>12.4e} {:>12.4e}", s.v_flow, s.lstm, s.ef);
            }
            println!("{:>8} {:>12.4e} {:>12.4e}", "all", report.test_lstm.aggregate, report.test_ef.aggregate);
        }
        Command::Compare { common, data, model } => {
            let cfg = load_config(&common).context("config")?;
            let r = commands::compare(&cfg, &model, &data, &common.out).context("compare")?;
            for s in &r.by_speed {
                println!("compare: v = {:.3}  lstm {:.4e}  ef {:.4e}", s.v_flow, s.lstm, s.ef);
            }
        }
        Command::Simulate { common, mode: m, model_tag, model, gait } => {
            let cfg = load_config(&common).context("config")?;
            let gait = match gait {
                Some(p) => GaitSpec::load(&p).context("simulate")?,
                None => cfg.simulate.gait,
            };
            let m = m.map(mode).or(cfg.simulate.mode).unwrap_or(Mode::Straight);
            let loaded = commands::load_model(tag(model_tag), model.as_deref()).context("simulate")?;
            let s = commands::simulate(&cfg, &gait, m, loaded.as_ref(), &common.out).context("simulate")?;
            println!(
                "simulate: t = {:.3} s, distance {:.3} m, yaw {:.4} rad, finished {}",
                s.t_final, s.distance, s.yaw_final, s.finished
            );
        }
        Command::Optimize { common, mode: m, model_tag, model, init } => {
            let cfg = load_config(&common).context("config")?;
            let loaded = commands::load_model(tag(model_tag), model.as_deref()).context("optimize")?;
            let r = commands::optimize(&cfg, mode(m), loaded.as_ref(), init.as_deref(), &common.out)
                .context("optimize")?;
            println!("optimize: {} evaluations", r.evaluations);
            for t in &r.top {
                println!("  #{} S = {:.4}  f = [{:.4}, {:.4}, {:.3}]", t.rank, t.score, t.objectives[0], t.objectives[1], t.objectives[2]);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
