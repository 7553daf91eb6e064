use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use eqco::experiments::{run, ExperimentKind, ExperimentSpec, ModeKind, Overrides};
use eqco::train::NegSource;
use eqco::EqcoError;

#[derive(Parser, Debug)]
#[command(
    name = "eqco",
    version,
    about = "Margin InfoNCE experiments at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critic training on correlated Gaussians; loss and bound per epoch.
    #[command(alias = "mi_sweep")]
    MiSweep(Common),
    /// Query-gradient norm statistics per epoch.
    #[command(alias = "grad_stats")]
    GradStats(Common),
    /// Contrastive training and linear probe per K and margin mode.
    #[command(alias = "k_sweep")]
    KSweep(Common),
    /// Batch-size sweep under the linear learning-rate rule.
    #[command(alias = "n_sweep")]
    NSweep(Common),
    /// Single training run with per-step log and checkpoint.
    #[command(alias = "train_once")]
    TrainOnce(Common),
    /// Linear probe of a saved encoder.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "EQCO_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_parser = ["fixed", "eqco"])]
    margin_mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    margin: Option<f64>,
    #[arg(long, value_parser = ["bank", "batch", "subsample"])]
    neg_source: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    n_queries: Option<usize>,
}

fn build_spec(
    kind: ExperimentKind,
    common: &Common,
    checkpoint: Option<&PathBuf>,
) -> Result<ExperimentSpec, EqcoError> {
    let mut spec = match &common.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    spec.kind = kind;
    let overrides = Overrides {
        seed: common.seed,
        out_dir: common.out_dir.clone(),
        k: common.k,
        alpha: common.alpha,
        tau: common.tau,
        margin_mode: common
            .margin_mode
            .as_deref()
            .map(ModeKind::parse)
            .transpose()?,
        margin: common.margin,
        neg_source: common
            .neg_source
            .as_deref()
            .map(NegSource::parse)
            .transpose()?,
        epochs: common.epochs,
        n_queries: common.n_queries,
    };
    overrides.apply(&mut spec);
    if let Some(path) = checkpoint {
        spec.checkpoint = Some(path.clone());
    }
    Ok(spec)
}

fn execute(cli: Cli) -> anyhow::Result<usize> {
    let (kind, common, checkpoint) = match &cli.command {
        Command::MiSweep(c) => (ExperimentKind::MiSweep, c, None),
        Command::GradStats(c) => (ExperimentKind::GradStats, c, None),
        Command::KSweep(c) => (ExperimentKind::KSweep, c, None),
        Command::NSweep(c) => (ExperimentKind::NSweep, c, None),
        Command::TrainOnce(c) => (ExperimentKind::TrainOnce, c, None),
        Command::Probe { common, checkpoint } => {
            (ExperimentKind::Probe, common, checkpoint.as_ref())
        }
    };
    let spec = build_spec(kind, common, checkpoint)?;
    let out_dir = spec
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("eqco-out"));
    let report = run(&spec, &out_dir, &mut |line| println!("{line}"))
        .with_context(|| format!("{kind:?} into {}", out_dir.display()))?;
    for f in &report.files {
        eprintln!("wrote {}", f.display());
    }
    for f in &report.failures {
        eprintln!("failed: {f}");
    }
    Ok(report.failures.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(3),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<EqcoError>()
                .map_or(2, EqcoError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
