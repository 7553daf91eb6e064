//! Experiment drivers behind the `eqco` binary.
//!
//! Every grid point is trained with the base seed, so points differ only in
//! their loss configuration. Each command writes its CSV (and charts) into
//! the output directory and reports one summary line per grid point.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::critic::{train_critic, CriticConfig};
use crate::csvlog::{
    fmt_f64, CsvLog, DIVERGED, GRAD_STATS_HEADER, K_SWEEP_HEADER, MI_SWEEP_HEADER, N_SWEEP_HEADER,
    TRAIN_LOG_HEADER,
};
use crate::encoder::{encode, MlpParams};
use crate::error::{EqcoError, Result};
use crate::loss::{LossConfig, MarginMode};
use crate::math::{split_seed, SeededRng};
use crate::mi::{theoretical_bound_mc, true_mi, CorrelatedGaussian, MIN_MC_SAMPLES};
use crate::svg::{render_svg, ChartSpec};
use crate::train::{
    linear_probe, train, DatasetConfig, NegSource, ToyInstanceDataset, TrainConfig, TrainRun,
};

const DATASET_STREAM: u64 = 0xda7a;
const PROBE_STREAM: u64 = 0x9b0e;
const EVAL_STREAM: u64 = 0xe5a1;
const BOUND_STREAM: u64 = 0xb0d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MiSweep,
    GradStats,
    KSweep,
    NSweep,
    #[default]
    TrainOnce,
    Probe,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| EqcoError::Config(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Fixed,
    Eqco,
}

impl ModeKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(ModeKind::Fixed),
            "eqco" => Ok(ModeKind::Eqco),
            other => Err(EqcoError::Config(format!("unknown margin mode {other:?}"))),
        }
    }
}

/// Swept values. Empty lists fall back to the base configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Grid {
    pub k: Vec<usize>,
    /// Used by `eqco` points.
    pub alpha: Vec<f64>,
    /// Used by `fixed` points; defaults to `[0]`.
    pub margin: Vec<f64>,
    pub tau: Vec<f64>,
    pub mode: Vec<ModeKind>,
    /// Batch sizes for `n_sweep`.
    pub n: Vec<usize>,
    /// `n_sweep` also runs every N with the unscaled base learning rate.
    pub unscaled_control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub grid: Grid,
    pub base: TrainConfig,
    pub dataset: DatasetConfig,
    pub critic: CriticConfig,
    /// Samples behind the theoretical-bound reference line.
    pub mc_samples: usize,
    pub probe_train_frac: f64,
    /// Encoder checkpoint read by the `probe` command.
    pub checkpoint: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::default(),
            grid: Grid::default(),
            base: TrainConfig::default(),
            dataset: DatasetConfig::default(),
            critic: CriticConfig::default(),
            mc_samples: 20_000,
            probe_train_frac: 0.8,
            checkpoint: None,
            out_dir: None,
        }
    }
}

/// Command-line overrides applied on top of a spec.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub margin_mode: Option<ModeKind>,
    pub margin: Option<f64>,
    pub neg_source: Option<NegSource>,
    pub epochs: Option<usize>,
    pub n_queries: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(seed) = self.seed {
            spec.base.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            spec.out_dir = Some(dir.clone());
        }
        if let Some(k) = self.k {
            spec.grid.k = vec![k];
            spec.base.loss.k = k;
        }
        if let Some(tau) = self.tau {
            spec.grid.tau = vec![tau];
            spec.base.loss.tau = tau;
        }
        if let Some(alpha) = self.alpha {
            spec.grid.alpha = vec![alpha];
            if let MarginMode::Eqco { .. } = spec.base.loss.margin_mode {
                spec.base.loss.margin_mode = MarginMode::Eqco { alpha };
            }
        }
        if let Some(m) = self.margin {
            spec.grid.margin = vec![m];
            if let MarginMode::Fixed { .. } = spec.base.loss.margin_mode {
                spec.base.loss.margin_mode = MarginMode::Fixed { m };
            }
        }
        if let Some(mode) = self.margin_mode {
            spec.grid.mode = vec![mode];
            spec.base.loss.margin_mode = match mode {
                ModeKind::Fixed => MarginMode::Fixed {
                    m: self
                        .margin
                        .or(spec.grid.margin.first().copied())
                        .unwrap_or(0.0),
                },
                ModeKind::Eqco => MarginMode::Eqco {
                    alpha: self
                        .alpha
                        .or(spec.grid.alpha.first().copied())
                        .unwrap_or(spec.base.loss.virtual_negatives()),
                },
            };
        }
        if let Some(ns) = self.neg_source {
            spec.base.neg_source = ns;
        }
        if let Some(e) = self.epochs {
            spec.base.epochs = e;
            spec.critic.epochs = e;
        }
        if let Some(n) = self.n_queries {
            spec.base.n_queries = n;
            spec.critic.n_queries = n;
            spec.grid.n = vec![n];
        }
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| EqcoError::Config(format!("invalid experiment config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            EqcoError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// Loss configurations of the grid, in the order tau, mode, alpha or
    /// margin, then K.
    pub fn loss_points(&self) -> Result<Vec<LossConfig>> {
        let base = &self.base.loss;
        let taus = if self.grid.tau.is_empty() {
            vec![base.tau]
        } else {
            self.grid.tau.clone()
        };
        let ks = if self.grid.k.is_empty() {
            vec![base.k]
        } else {
            self.grid.k.clone()
        };
        let mut modes = Vec::new();
        if self.grid.mode.is_empty() {
            modes.push(base.margin_mode);
        }
        for kind in &self.grid.mode {
            match kind {
                ModeKind::Fixed => {
                    let ms = if self.grid.margin.is_empty() {
                        vec![0.0]
                    } else {
                        self.grid.margin.clone()
                    };
                    modes.extend(ms.into_iter().map(|m| MarginMode::Fixed { m }));
                }
                ModeKind::Eqco => {
                    if self.grid.alpha.is_empty() {
                        return Err(EqcoError::Config(
                            "eqco grid points need at least one alpha".into(),
                        ));
                    }
                    modes.extend(
                        self.grid
                            .alpha
                            .iter()
                            .map(|&alpha| MarginMode::Eqco { alpha }),
                    );
                }
            }
        }
        let mut out = Vec::new();
        for &tau in &taus {
            for mode in &modes {
                for &k in &ks {
                    let cfg = LossConfig::new(tau, *mode, k)
                        .map_err(|e| EqcoError::Config(e.to_string()))?;
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }

    fn train_config(&self, loss: &LossConfig) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            loss: *loss,
            ..self.base.clone()
        };
        cfg.validate()
            .map_err(|e| EqcoError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn dataset(&self) -> Result<ToyInstanceDataset> {
        ToyInstanceDataset::generate(&self.dataset, split_seed(self.base.seed, DATASET_STREAM))
            .map_err(|e| EqcoError::Config(e.to_string()))
    }

    fn probe(&self, params: &MlpParams, dataset: &ToyInstanceDataset) -> Result<f64> {
        let emb: Vec<Vec<f64>> = dataset
            .instances
            .iter()
            .map(|inst| encode(params, &inst.latent).map(|(e, _)| e))
            .collect::<Result<_>>()?;
        linear_probe(
            &emb,
            &dataset.labels(),
            self.probe_train_frac,
            &mut SeededRng::derive(self.base.seed, PROBE_STREAM),
        )
    }
}

/// Files and tables produced by a command.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    /// Named tables, keyed by file stem.
    pub tables: Vec<(String, CsvLog)>,
    /// One entry per grid point whose training failed.
    pub failures: Vec<String>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&CsvLog> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn csv(&mut self, dir: &Path, name: &str, log: CsvLog) -> Result<()> {
        let path = dir.join(format!("{name}.csv"));
        log.write(&path)?;
        self.files.push(path);
        self.tables.push((name.to_string(), log));
        Ok(())
    }

    fn svg(&mut self, dir: &Path, name: &str, log: &CsvLog, chart: &ChartSpec) -> Result<()> {
        let path = dir.join(format!("{name}.svg"));
        std::fs::write(&path, render_svg(log, chart)?)?;
        self.files.push(path);
        Ok(())
    }
}

fn cells(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| fmt_f64(v)).collect()
}

fn diverged(n: usize) -> Vec<String> {
    vec![DIVERGED.to_string(); n]
}

/// Runs the command selected by `spec.kind`, writing into `out_dir`.
pub fn run(
    spec: &ExperimentSpec,
    out_dir: &Path,
    on_point: &mut dyn FnMut(&str),
) -> Result<Report> {
    std::fs::create_dir_all(out_dir)?;
    match spec.kind {
        ExperimentKind::MiSweep => cmd_mi_sweep(spec, out_dir, on_point),
        ExperimentKind::GradStats => cmd_grad_stats(spec, out_dir, on_point),
        ExperimentKind::KSweep => cmd_k_sweep(spec, out_dir, on_point),
        ExperimentKind::NSweep => cmd_n_sweep(spec, out_dir, on_point),
        ExperimentKind::TrainOnce => cmd_train_once(spec, out_dir, on_point),
        ExperimentKind::Probe => cmd_probe(spec, out_dir, on_point),
    }
}

/// Critic training on the correlated Gaussian, one curve per grid point.
pub fn cmd_mi_sweep(
    spec: &ExperimentSpec,
    out_dir: &Path,
    on_point: &mut dyn FnMut(&str),
) -> Result<Report> {
    let dist = CorrelatedGaussian::new(spec.critic.dim, spec.critic.rho)
        .map_err(|e| EqcoError::Config(e.to_string()))?;
    let mi = true_mi(&dist)?;
    if spec.mc_samples < MIN_MC_SAMPLES {
        return Err(EqcoError::Config(format!(
            "mc_samples must be at least {MIN_MC_SAMPLES}"
        )));
    }
    let seed = spec.base.seed;
    let mut report = Report::default();
    let mut all = CsvLog::new(MI_SWEEP_HEADER);
    let mut panels: Vec<(&'static str, CsvLog)> = Vec::new();
    for loss in spec.loss_points()? {
        let m = loss.effective_margin();
        let alpha = loss.virtual_negatives();
        let weight = alpha / loss.k as f64;
        let bound = theoretical_bound_mc(
            &dist,
            weight,
            loss.k,
            spec.mc_samples,
            &mut SeededRng::derive(seed, BOUND_STREAM),
        )?;
        let run = train_critic(&spec.critic, &loss, seed, split_seed(seed, EVAL_STREAM))?;
        let mode = loss.margin_mode.label();
        let mut part = CsvLog::new(MI_SWEEP_HEADER);
        for e in &run.epochs {
            let mut row = vec![e.step.to_string(), e.epoch.to_string(), loss.k.to_string()];
            row.extend(cells(&[
                alpha,
                m,
                e.loss_nce,
                e.f_hat_bound,
                mi,
                bound.mean,
            ]));
            part.push(row)?;
        }
        let summary = match (&run.failure, run.final_epoch()) {
            (Some(msg), _) => {
                let mut row = diverged(2);
                row.push(loss.k.to_string());
                row.extend(cells(&[alpha, m]));
                row.extend(diverged(2));
                row.extend(cells(&[mi, bound.mean]));
                part.push(row)?;
                report.failures.push(format!("mi_sweep mode={mode} k={}: {msg}", loss.k));
                format!("mi_sweep mode={mode} k={} alpha={alpha} status=diverged ({msg})", loss.k)
            }
            (None, Some(last)) => format!(
                "mi_sweep mode={mode} k={} alpha={alpha} margin={m:.6} loss_nce={:.6} f_hat_bound={:.6} true_mi={mi:.6} theoretical_bound={:.6}",
                loss.k, last.loss_nce, last.f_hat_bound, bound.mean
            ),
            (None, None) => format!("mi_sweep mode={mode} k={} alpha={alpha} epochs=0", loss.k),
        };
        on_point(&summary);
        all.extend(&part)?;
        match panels.iter_mut().find(|(l, _)| *l == mode) {
            Some((_, log)) => log.extend(&part)?,
            None => panels.push((mode, part)),
        }
    }
    report.csv(out_dir, "mi_sweep", all)?;
    for (mode, log) in &panels {
        let chart = ChartSpec::new(
            &format!("InfoNCE loss and bound ({mode})"),
            "epoch",
            &["loss_nce", "f_hat_bound"],
        )
        .group_by("k")
        .reference(&["true_mi", "theoretical_bound"])
        .units("epochs", "nats");
        report.svg(out_dir, &format!("mi_sweep_{mode}"), log, &chart)?;
    }
    Ok(report)
}

fn train_point(
    spec: &ExperimentSpec,
    loss: &LossConfig,
    dataset: &ToyInstanceDataset,
) -> Result<(TrainConfig, TrainRun)> {
    let cfg = spec.train_config(loss)?;
    let run = train(&cfg, dataset)?;
    Ok((cfg, run))
}

/// Per-epoch gradient-norm statistics of the query gradient.
pub fn cmd_grad_stats(
    spec: &ExperimentSpec,
    out_dir: &Path,
    on_point: &mut dyn FnMut(&str),
) -> Result<Report> {
    let dataset = spec.dataset()?;
    let mut report = Report::default();
    let mut all = CsvLog::new(GRAD_STATS_HEADER);
    for loss in spec.loss_points()? {
        let (_, run) = train_point(spec, &loss, &dataset)?;
        let mode = loss.margin_mode.label();
        for e in run.epochs() {
            let mut row = vec![e.epoch.to_string(), loss.k.to_string(), mode.to_string()];
            row.extend(cells(&[
                e.grad_norm_mean,
                e.grad_norm_var,
                e.theorem2_bound,
            ]));
            all.push(row)?;
        }
        let summary = match (&run.failure, run.final_epoch()) {
            (Some(msg), _) => {
                let mut row = vec![DIVERGED.to_string(), loss.k.to_string(), mode.to_string()];
                row.extend(diverged(3));
                all.push(row)?;
                report.failures.push(format!("grad_stats mode={mode} k={}: {msg}", loss.k));
                format!("grad_stats mode={mode} k={} status=diverged ({msg})", loss.k)
            }
            (None, Some(last)) => format!(
                "grad_stats mode={mode} k={} grad_norm_mean={:.6} grad_norm_var={:.6} theorem2_bound={:.6}",
                loss.k, last.grad_norm_mean, last.grad_norm_var, last.theorem2_bound
            ),
            (None, None) => format!("grad_stats mode={mode} k={} no completed epochs", loss.k),
        };
        on_point(&summary);
    }
    for mode in ["eqco", "fixed"] {
        let part = all.filter_eq("mode", mode)?;
        if part.is_empty() {
            continue;
        }
        let chart = ChartSpec::new(
            &format!("Query gradient norm ({mode})"),
            "epoch",
            &["grad_norm_mean"],
        )
        .group_by("k")
        .units("epochs", "norm");
        report.svg(out_dir, &format!("grad_stats_{mode}"), &part, &chart)?;
    }
    report.csv(out_dir, "grad_stats", all)?;
    Ok(report)
}

/// Full training per (K, mode) point followed by a linear probe.
pub fn cmd_k_sweep(
    spec: &ExperimentSpec,
    out_dir: &Path,
    on_point: &mut dyn FnMut(&str),
) -> Result<Report> {
    let dataset = spec.dataset()?;
    let mut report = Report::default();
    let mut all = CsvLog::new(K_SWEEP_HEADER);
    for loss in spec.loss_points()? {
        let (_, run) = train_point(spec, &loss, &dataset)?;
        let mode = loss.margin_mode.label();
        let alpha = loss.virtual_negatives();
        let m = loss.effective_margin();
        let mut row = vec![loss.k.to_string(), mode.to_string()];
        row.extend(cells(&[alpha, m]));
        let summary = match (&run.failure, run.final_epoch()) {
            (None, Some(last)) => {
                let acc = spec.probe(&run.params, &dataset)?;
                row.extend(cells(&[last.loss, last.f_hat_bound, acc]));
                format!(
                    "k_sweep mode={mode} k={} alpha={alpha} margin={m:.6} final_loss={:.6} f_hat_bound={:.6} probe_acc={acc:.4}",
                    loss.k, last.loss, last.f_hat_bound
                )
            }
            (failure, _) => {
                let msg = failure
                    .clone()
                    .unwrap_or_else(|| "no completed epochs".into());
                row.extend(diverged(3));
                report
                    .failures
                    .push(format!("k_sweep mode={mode} k={}: {msg}", loss.k));
                format!(
                    "k_sweep mode={mode} k={} alpha={alpha} status=diverged ({msg})",
                    loss.k
                )
            }
        };
        all.push(row)?;
        on_point(&summary);
    }
    let chart = ChartSpec::new("Linear probe accuracy", "k", &["probe_acc"])
        .group_by("mode")
        .units("negatives", "accuracy");
    report.svg(out_dir, "k_sweep", &all, &chart)?;
    report.csv(out_dir, "k_sweep", all)?;
    Ok(report)
}

fn n_sweep_table(
    spec: &ExperimentSpec,
    dataset: &ToyInstanceDataset,
    scale_lr: bool,
    report: &mut Report,
    on_point: &mut dyn FnMut(&str),
) -> Result<CsvLog> {
    let ns = if spec.grid.n.is_empty() {
        vec![spec.base.n_queries]
    } else {
        spec.grid.n.clone()
    };
    let tag = if scale_lr { "scaled" } else { "unscaled" };
    let mut log = CsvLog::new(N_SWEEP_HEADER);
    for n in ns {
        let cfg = TrainConfig {
            n_queries: n,
            scale_lr,
            ..spec.base.clone()
        };
        cfg.validate()
            .map_err(|e| EqcoError::Config(e.to_string()))?;
        let run = train(&cfg, dataset)?;
        let lr = cfg.peak_lr();
        let mut row = vec![n.to_string(), fmt_f64(lr)];
        let summary = match (&run.failure, run.final_epoch()) {
            (None, Some(last)) => {
                let acc = spec.probe(&run.params, dataset)?;
                row.extend(cells(&[last.loss, acc]));
                format!(
                    "n_sweep lr_rule={tag} n={n} lr={lr} final_loss={:.6} probe_acc={acc:.4}",
                    last.loss
                )
            }
            (failure, _) => {
                let msg = failure
                    .clone()
                    .unwrap_or_else(|| "no completed epochs".into());
                row.extend(diverged(2));
                report
                    .failures
                    .push(format!("n_sweep lr_rule={tag} n={n}: {msg}"));
                format!("n_sweep lr_rule={tag} n={n} lr={lr} status=diverged ({msg})")
            }
        };
        log.push(row)?;
        on_point(&summary);
    }
    Ok(log)
}

/// Batch-size sweep with the linear learning-rate rule, and optionally the
/// same sweep at the unscaled base rate.
pub fn cmd_n_sweep(
    spec: &ExperimentSpec,
    out_dir: &Path,
    on_point: &mut dyn FnMut(&str),
) -> Result<Report> {
    let dataset = spec.dataset()?;
    let mut report = Report::default();
    let scaled = n_sweep_table(spec, &dataset, true, &mut report, on_point)?;
    report.csv(out_dir, "n_sweep", scaled)?;
    if spec.grid.unscaled_control {
        let unscaled = n_sweep_table(spec, &dataset, false, &mut report, on_point)?;
        report.csv(out_dir, "n_sweep_unscaled", unscaled)?;
    }
    Ok(report)
}

/// One training run with the per-step log and a checkpoint.
pub fn cmd_train_once(
    spec: &ExperimentSpec,
    out_dir: &Path,
    on_point: &mut dyn FnMut(&str),
) -> Result<Report> {
    let dataset = spec.dataset()?;
    let (cfg, run) = train_point(spec, &spec.base.loss, &dataset)?;
    let mut report = Report::default();
    let mut log = CsvLog::new(TRAIN_LOG_HEADER);
    for r in &run.log {
        let mut row = vec![r.step.to_string(), r.epoch.to_string()];
        if r.skipped {
            row.push(fmt_f64(r.lr));
            row.extend(vec!["skipped".to_string(); 5]);
        } else {
            row.extend(cells(&[
                r.lr,
                r.loss,
                r.f_hat_bound,
                r.grad_norm_mean,
                r.grad_norm_var,
                r.theorem2_bound,
            ]));
        }
        row.push(r.skipped.to_string());
        log.push(row)?;
    }
    let chart =
        ChartSpec::new("Training loss", "step", &["loss", "f_hat_bound"]).units("steps", "nats");
    report.svg(out_dir, "train_log", &log, &chart)?;
    report.csv(out_dir, "train_log", log)?;
    if run.params.is_finite() {
        let ckpt = out_dir.join("checkpoint.json");
        run.params.save(&ckpt)?;
        report.files.push(ckpt);
    }
    let mode = cfg.loss.margin_mode.label();
    let summary = match (&run.failure, run.final_epoch()) {
        (Some(msg), _) => {
            report.failures.push(format!("train_once: {msg}"));
            format!(
                "train_once mode={mode} k={} status=diverged ({msg})",
                cfg.k()
            )
        }
        (None, Some(last)) => format!(
            "train_once mode={mode} k={} steps={} final_loss={:.6} f_hat_bound={:.6}",
            cfg.k(),
            run.log.len(),
            last.loss,
            last.f_hat_bound
        ),
        (None, None) => format!("train_once mode={mode} k={} no completed epochs", cfg.k()),
    };
    on_point(&summary);
    Ok(report)
}

/// Linear probe of a saved encoder on the spec's dataset.
pub fn cmd_probe(
    spec: &ExperimentSpec,
    out_dir: &Path,
    on_point: &mut dyn FnMut(&str),
) -> Result<Report> {
    let path = spec
        .checkpoint
        .as_ref()
        .ok_or_else(|| EqcoError::Config("probe needs a checkpoint path".into()))?;
    let params = MlpParams::load(path)?;
    let dataset = spec.dataset()?;
    if params.input_dim() != dataset.latent_dim {
        return Err(EqcoError::Config(format!(
            "checkpoint expects inputs of dimension {}, dataset has {}",
            params.input_dim(),
            dataset.latent_dim
        )));
    }
    let acc = spec.probe(&params, &dataset)?;
    let mut report = Report::default();
    let mut log = CsvLog::new(&["n_instances", "n_classes", "probe_acc"]);
    log.push(vec![
        dataset.len().to_string(),
        dataset.n_classes.to_string(),
        fmt_f64(acc),
    ])?;
    report.csv(out_dir, "probe", log)?;
    on_point(&format!(
        "probe checkpoint={} probe_acc={acc:.4}",
        path.display()
    ));
    Ok(report)
}
