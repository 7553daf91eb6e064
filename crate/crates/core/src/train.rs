//! Contrastive training on a toy instance-discrimination task.
//!
//! Each instance is a latent vector drawn around one of a few class centers.
//! Two noisy views of an instance form a positive pair; the query encoder
//! sees view A, the momentum encoder view B. Negatives come from a FIFO
//! memory bank, from the other keys of the batch, or from an independent
//! per-query subsample of the batch. Only the query encoder receives
//! gradients; the key encoder follows it by EMA. Class labels are used by
//! the linear probe and nothing else.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::encoder::{
    encode, encode_backward_into, init_params, momentum_update, MlpParams, MomentumEncoder,
};
use crate::error::{domain, precondition, EqcoError, Result};
use crate::loss::{query_grad_unchecked, LossConfig};
use crate::math::{mean_var, norm, SeededRng};
use crate::mi::empirical_bound;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_classes: usize,
    pub n_instances: usize,
    pub latent_dim: usize,
    /// Class centers are `center_scale · N(0, I)`.
    pub center_scale: f64,
    /// Std of an instance around its class center.
    pub spread: f64,
    /// Std of the Gaussian noise that makes a view.
    pub aug_noise_std: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n_classes: 10,
            n_instances: 5000,
            latent_dim: 16,
            center_scale: 3.0,
            spread: 1.0,
            aug_noise_std: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub latent: Vec<f64>,
    pub class_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyInstanceDataset {
    pub n_classes: usize,
    pub latent_dim: usize,
    pub class_centers: Vec<Vec<f64>>,
    pub instances: Vec<Instance>,
    pub aug_noise_std: f64,
}

impl ToyInstanceDataset {
    /// Instances are assigned to classes round-robin so every class is
    /// (almost) equally represented.
    pub fn generate(cfg: &DatasetConfig, seed: u64) -> Result<Self> {
        if cfg.n_classes == 0 || cfg.n_instances == 0 || cfg.latent_dim == 0 {
            return Err(EqcoError::Config("dataset sizes must be positive".into()));
        }
        if !(cfg.spread >= 0.0 && cfg.aug_noise_std >= 0.0 && cfg.center_scale >= 0.0) {
            return Err(EqcoError::Config(
                "dataset scales must be non-negative".into(),
            ));
        }
        let mut rng = SeededRng::new(seed);
        let class_centers: Vec<Vec<f64>> = (0..cfg.n_classes)
            .map(|_| {
                (0..cfg.latent_dim)
                    .map(|_| cfg.center_scale * rng.standard_normal())
                    .collect()
            })
            .collect();
        let instances = (0..cfg.n_instances)
            .map(|i| {
                let class_id = i % cfg.n_classes;
                let latent = class_centers[class_id]
                    .iter()
                    .map(|c| c + cfg.spread * rng.standard_normal())
                    .collect();
                Instance { latent, class_id }
            })
            .collect();
        Ok(ToyInstanceDataset {
            n_classes: cfg.n_classes,
            latent_dim: cfg.latent_dim,
            class_centers,
            instances,
            aug_noise_std: cfg.aug_noise_std,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.class_id).collect()
    }
}

/// Two independent Gaussian perturbations of the instance latent.
pub fn make_views(
    instance: &Instance,
    aug_noise_std: f64,
    rng: &mut SeededRng,
) -> (Vec<f64>, Vec<f64>) {
    let mut view = || -> Vec<f64> {
        instance
            .latent
            .iter()
            .map(|x| x + aug_noise_std * rng.standard_normal())
            .collect()
    };
    let a = view();
    let b = view();
    (a, b)
}

/// Fixed-capacity FIFO queue of key embeddings, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank {
    capacity: usize,
    queue: VecDeque<Vec<f64>>,
}

impl MemoryBank {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return domain("memory bank capacity must be positive");
        }
        Ok(MemoryBank {
            capacity,
            queue: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Appends a key, evicting the oldest one when full.
    pub fn enqueue(&mut self, key: Vec<f64>) {
        if self.queue.len() == self.capacity {
            self.queue.pop_front();
        }
        self.queue.push_back(key);
    }

    pub fn keys(&self) -> impl Iterator<Item = &[f64]> {
        self.queue.iter().map(Vec::as_slice)
    }
}

/// `k` negatives from the bank: the whole bank (oldest first) when it holds
/// exactly `k` keys, otherwise `k` distinct keys drawn uniformly.
///
/// Fails while the bank holds fewer than `k` keys; training skips those
/// bootstrap steps.
pub fn negatives_from_bank<'a>(
    bank: &'a MemoryBank,
    k: usize,
    rng: &mut SeededRng,
) -> Result<Vec<&'a [f64]>> {
    if k == 0 {
        return precondition("k must be at least 1");
    }
    if bank.len() < k {
        return precondition(format!("bank holds {} keys, {k} requested", bank.len()));
    }
    if bank.len() == k {
        return Ok(bank.keys().collect());
    }
    let idx = rng.sample_indices(bank.len(), k)?;
    Ok(idx.into_iter().map(|i| bank.queue[i].as_slice()).collect())
}

/// `k` keys of the batch other than `batch_keys[query_index]`: all of them in
/// batch order when `k = N - 1`, otherwise `k` distinct ones drawn uniformly.
pub fn negatives_in_batch<'a>(
    batch_keys: &'a [Vec<f64>],
    query_index: usize,
    k: usize,
    rng: &mut SeededRng,
) -> Result<Vec<&'a [f64]>> {
    let n = batch_keys.len();
    if query_index >= n {
        return precondition(format!("query index {query_index} out of a batch of {n}"));
    }
    if k == 0 || k + 1 > n {
        return Err(EqcoError::Config(format!(
            "in-batch negatives need 1 <= k <= N - 1 (k = {k}, N = {n})"
        )));
    }
    if k + 1 == n {
        return Ok(batch_keys
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != query_index)
            .map(|(_, v)| v.as_slice())
            .collect());
    }
    let idx = rng.sample_indices(n - 1, k)?;
    Ok(idx
        .into_iter()
        .map(|i| {
            let i = if i >= query_index { i + 1 } else { i };
            batch_keys[i].as_slice()
        })
        .collect())
}

/// `base_lr · n / n_ref`.
pub fn scaled_lr(base_lr: f64, n: usize, n_ref: usize) -> f64 {
    base_lr * n as f64 / n_ref as f64
}

/// Linear warm-up from 0 to `peak_lr` over the first
/// `round(warmup_frac · total_steps)` steps, then half-cosine decay.
///
/// `lr(0) = 0` when there is a warm-up; the warm-up end equals `peak_lr`; the
/// final step `total - 1` evaluates to `peak · (1 + cos(π (T-1-w)/(T-w))) / 2`,
/// which is small but non-zero.
pub fn lr_at_step(step: usize, total_steps: usize, warmup_frac: f64, peak_lr: f64) -> f64 {
    let total = total_steps.max(1);
    let warmup = ((warmup_frac.clamp(0.0, 1.0) * total as f64).round() as usize).min(total - 1);
    if step < warmup {
        return peak_lr * step as f64 / warmup as f64;
    }
    let span = (total - warmup) as f64;
    let progress = (step - warmup) as f64 / span;
    peak_lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// Where the negatives of each query come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NegSource {
    /// FIFO memory bank of past keys, shared by the batch.
    #[serde(rename = "bank")]
    Bank,
    /// Other keys of the current batch, one candidate pool for every query.
    #[serde(rename = "batch")]
    InBatch,
    /// Other keys of the current batch, drawn independently per query.
    #[serde(rename = "subsample")]
    InBatchSubsample,
}

impl NegSource {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bank" => Ok(NegSource::Bank),
            "batch" => Ok(NegSource::InBatch),
            "subsample" => Ok(NegSource::InBatchSubsample),
            other => Err(EqcoError::Config(format!(
                "unknown negative source {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Queries per batch.
    pub n_queries: usize,
    /// Loss settings, including the number of negatives per query.
    pub loss: LossConfig,
    pub neg_source: NegSource,
    /// Learning rate at `n_ref` queries per batch.
    pub base_lr: f64,
    pub n_ref: usize,
    /// Apply the linear scaling rule `lr = base_lr · N / n_ref`.
    pub scale_lr: bool,
    pub epochs: usize,
    pub warmup_frac: f64,
    pub sgd_momentum: f64,
    /// Key-encoder EMA coefficient.
    pub beta: f64,
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_queries: 256,
            loss: LossConfig::default(),
            neg_source: NegSource::Bank,
            base_lr: 0.03,
            n_ref: 256,
            scale_lr: true,
            epochs: 20,
            warmup_frac: 0.1,
            sgd_momentum: 0.9,
            beta: crate::encoder::DEFAULT_BETA,
            hidden: vec![64, 64],
            embed_dim: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// SiMo-style preset: in-batch negatives from the momentum encoder, no
    /// bank, warm-up on.
    pub fn simo(n_queries: usize, loss: LossConfig) -> Self {
        TrainConfig {
            n_queries,
            loss,
            neg_source: NegSource::InBatch,
            warmup_frac: 0.1,
            ..TrainConfig::default()
        }
    }

    pub fn k(&self) -> usize {
        self.loss.k
    }

    pub fn peak_lr(&self) -> f64 {
        if self.scale_lr {
            scaled_lr(self.base_lr, self.n_queries, self.n_ref)
        } else {
            self.base_lr
        }
    }

    pub fn layer_dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(&self.hidden);
        dims.push(self.embed_dim);
        dims
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EqcoError::Config(msg));
        if let Err(e) = self.loss.validate() {
            return bad(e.to_string());
        }
        if self.n_queries == 0 || self.n_ref == 0 || self.embed_dim == 0 {
            return bad("n_queries, n_ref and embed_dim must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad(format!("base_lr must be positive, got {}", self.base_lr));
        }
        if !(0.0..=1.0).contains(&self.warmup_frac) {
            return bad(format!(
                "warmup_frac must be in [0, 1], got {}",
                self.warmup_frac
            ));
        }
        if !(0.0..1.0).contains(&self.sgd_momentum) {
            return bad(format!(
                "sgd_momentum must be in [0, 1), got {}",
                self.sgd_momentum
            ));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must be in [0, 1], got {}", self.beta));
        }
        if matches!(
            self.neg_source,
            NegSource::InBatch | NegSource::InBatchSubsample
        ) && self.k() + 1 > self.n_queries
        {
            return bad(format!(
                "in-batch negatives need k <= N - 1 (k = {}, N = {})",
                self.k(),
                self.n_queries
            ));
        }
        Ok(())
    }
}

/// One optimization step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    /// Mean loss over the batch.
    pub loss: f64,
    pub f_hat_bound: f64,
    /// Mean and population variance of `‖dL_j/dq_j‖` over the batch.
    pub grad_norm_mean: f64,
    pub grad_norm_var: f64,
    /// Batch mean of `(2/τ)(1 - p0)`.
    pub theorem2_bound: f64,
    /// Bootstrap step without a loss (bank not yet full).
    pub skipped: bool,
}

/// Per-epoch means over non-skipped steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSummary {
    pub epoch: usize,
    /// Last global step of the epoch.
    pub last_step: usize,
    pub loss: f64,
    pub f_hat_bound: f64,
    pub grad_norm_mean: f64,
    pub grad_norm_var: f64,
    pub theorem2_bound: f64,
}

pub fn epoch_summaries(log: &[StepRecord]) -> Vec<EpochSummary> {
    let mut out: Vec<EpochSummary> = Vec::new();
    let mut start = 0;
    while start < log.len() {
        let epoch = log[start].epoch;
        let end = log[start..]
            .iter()
            .position(|r| r.epoch != epoch)
            .map_or(log.len(), |p| start + p);
        let rows: Vec<&StepRecord> = log[start..end].iter().filter(|r| !r.skipped).collect();
        if !rows.is_empty() {
            let n = rows.len() as f64;
            let mean = |f: fn(&StepRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            out.push(EpochSummary {
                epoch,
                last_step: log[end - 1].step,
                loss: mean(|r| r.loss),
                f_hat_bound: mean(|r| r.f_hat_bound),
                grad_norm_mean: mean(|r| r.grad_norm_mean),
                grad_norm_var: mean(|r| r.grad_norm_var),
                theorem2_bound: mean(|r| r.theorem2_bound),
            });
        }
        start = end;
    }
    out
}

/// Training state: query encoder, optimizer velocity, key encoder and bank.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub params: MlpParams,
    pub key_encoder: MomentumEncoder,
    velocity: MlpParams,
    bank: Option<MemoryBank>,
    rng: SeededRng,
    step: usize,
    total_steps: usize,
    steps_per_epoch: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig, dataset: &ToyInstanceDataset) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return precondition("empty dataset");
        }
        let steps_per_epoch = dataset.len() / config.n_queries;
        if steps_per_epoch == 0 {
            return Err(EqcoError::Config(format!(
                "batch of {} queries exceeds the dataset size {}",
                config.n_queries,
                dataset.len()
            )));
        }
        let mut init_rng = SeededRng::derive(config.seed, 0);
        let params = init_params(&mut init_rng, &config.layer_dims(dataset.latent_dim))?;
        let key_encoder = MomentumEncoder::new(params.clone(), config.beta)?;
        let bank = match config.neg_source {
            NegSource::Bank => Some(MemoryBank::new(config.k().max(config.n_queries))?),
            _ => None,
        };
        Ok(Trainer {
            velocity: params.zeros_like(),
            params,
            key_encoder,
            bank,
            rng: SeededRng::derive(config.seed, 1),
            step: 0,
            total_steps: steps_per_epoch * config.epochs,
            steps_per_epoch,
            config,
        })
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.steps_per_epoch
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn bank(&self) -> Option<&MemoryBank> {
        self.bank.as_ref()
    }

    /// Runs one epoch over a fresh permutation of the dataset.
    pub fn run_epoch(
        &mut self,
        dataset: &ToyInstanceDataset,
        epoch: usize,
        log: &mut Vec<StepRecord>,
    ) -> Result<()> {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        self.rng.shuffle(&mut order);
        for batch in order.chunks_exact(self.config.n_queries) {
            let record = self.step(dataset, batch, epoch)?;
            log.push(record);
        }
        Ok(())
    }

    /// One optimization step on the given instances.
    pub fn step(
        &mut self,
        dataset: &ToyInstanceDataset,
        batch: &[usize],
        epoch: usize,
    ) -> Result<StepRecord> {
        let cfg = &self.config;
        let n = batch.len();
        let k = cfg.k();
        let lr = lr_at_step(self.step, self.total_steps, cfg.warmup_frac, cfg.peak_lr());

        let mut caches = Vec::with_capacity(n);
        let mut queries = Vec::with_capacity(n);
        let mut keys = Vec::with_capacity(n);
        for &i in batch {
            let (a, b) = make_views(&dataset.instances[i], dataset.aug_noise_std, &mut self.rng);
            let (q, cache) = encode(&self.params, &a)?;
            let (key, _) = encode(&self.key_encoder.params, &b)?;
            queries.push(q);
            caches.push(cache);
            keys.push(key);
        }

        let ready = match (&self.bank, cfg.neg_source) {
            (Some(bank), NegSource::Bank) => bank.len() >= k,
            _ => true,
        };

        let mut record = StepRecord {
            step: self.step,
            epoch,
            lr,
            loss: 0.0,
            f_hat_bound: 0.0,
            grad_norm_mean: 0.0,
            grad_norm_var: 0.0,
            theorem2_bound: 0.0,
            skipped: !ready,
        };

        if ready {
            let mut grads = self.params.zeros_like();
            let mut losses = 0.0;
            let mut norms = Vec::with_capacity(n);
            let mut bounds = 0.0;
            let inv_n = 1.0 / n as f64;

            let shared: Option<Vec<&[f64]>> = match cfg.neg_source {
                NegSource::Bank => Some(negatives_from_bank(
                    self.bank.as_ref().expect("bank mode"),
                    k,
                    &mut self.rng,
                )?),
                _ => None,
            };
            // One permutation per step serves every query in shared in-batch mode.
            let perm: Option<Vec<usize>> = match cfg.neg_source {
                NegSource::InBatch if k + 1 < n => {
                    let mut p: Vec<usize> = (0..n).collect();
                    self.rng.shuffle(&mut p);
                    Some(p)
                }
                _ => None,
            };

            for j in 0..n {
                let negs: Vec<&[f64]> = match (cfg.neg_source, &shared, &perm) {
                    (NegSource::Bank, Some(s), _) => s.clone(),
                    (NegSource::InBatch, _, Some(p)) => p
                        .iter()
                        .filter(|&&i| i != j)
                        .take(k)
                        .map(|&i| keys[i].as_slice())
                        .collect(),
                    _ => negatives_in_batch(&keys, j, k, &mut self.rng)?,
                };
                let g = query_grad_unchecked(&queries[j], &keys[j], &negs, &cfg.loss)?;
                if !g.loss.is_finite() {
                    return Err(EqcoError::Numeric(format!(
                        "non-finite loss at step {}",
                        self.step
                    )));
                }
                losses += g.loss;
                bounds += 2.0 / cfg.loss.tau * g.one_minus_p0;
                norms.push(norm(&g.grad_q));
                let d_emb: Vec<f64> = g.grad_q.iter().map(|x| x * inv_n).collect();
                encode_backward_into(&self.params, &caches[j], &d_emb, &mut grads)?;
            }

            let loss = losses * inv_n;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(EqcoError::Numeric(format!(
                    "non-finite loss at step {}",
                    self.step
                )));
            }
            let (gm, gv) = mean_var(&norms);
            record.loss = loss;
            record.f_hat_bound =
                empirical_bound(loss, cfg.loss.tau, cfg.loss.effective_margin(), k)?;
            record.grad_norm_mean = gm;
            record.grad_norm_var = gv;
            record.theorem2_bound = bounds * inv_n;

            // SGD with momentum: v ← μ v + g, θ ← θ - lr v.
            self.velocity.scale(cfg.sgd_momentum);
            self.velocity.add_scaled(&grads, 1.0);
            self.params.add_scaled(&self.velocity, -lr);
            if !self.params.is_finite() {
                return Err(EqcoError::Numeric(format!(
                    "parameters diverged at step {}",
                    self.step
                )));
            }
        }

        momentum_update(&mut self.key_encoder, &self.params)?;
        if let Some(bank) = self.bank.as_mut() {
            for key in keys {
                bank.enqueue(key);
            }
        }
        self.step += 1;
        Ok(record)
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub params: MlpParams,
    pub key_params: MlpParams,
    pub log: Vec<StepRecord>,
    /// Set when a numeric failure stopped training; `log` ends at the last
    /// good step.
    pub failure: Option<String>,
}

impl TrainRun {
    pub fn epochs(&self) -> Vec<EpochSummary> {
        epoch_summaries(&self.log)
    }

    pub fn final_epoch(&self) -> Option<EpochSummary> {
        self.epochs().last().copied()
    }

    /// Embeddings of every instance latent under the query encoder.
    pub fn embed(&self, dataset: &ToyInstanceDataset) -> Result<Vec<Vec<f64>>> {
        dataset
            .instances
            .iter()
            .map(|inst| encode(&self.params, &inst.latent).map(|(e, _)| e))
            .collect()
    }
}

/// Trains the query encoder. Configuration errors are returned as `Err`;
/// numeric failures stop training and are reported in `TrainRun::failure`.
pub fn train(config: &TrainConfig, dataset: &ToyInstanceDataset) -> Result<TrainRun> {
    let mut trainer = Trainer::new(config.clone(), dataset)?;
    let mut log = Vec::with_capacity(trainer.total_steps());
    let mut failure = None;
    for epoch in 0..config.epochs {
        match trainer.run_epoch(dataset, epoch, &mut log) {
            Ok(()) => {}
            Err(EqcoError::Numeric(msg)) => {
                failure = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(TrainRun {
        params: trainer.params,
        key_params: trainer.key_encoder.params,
        log,
        failure,
    })
}

const PROBE_ITERS: usize = 500;
const PROBE_LR: f64 = 0.1;

/// Linear-evaluation accuracy of frozen embeddings.
///
/// The data are shuffled and split; a multinomial logistic regression (zero
/// init, full-batch gradient descent, 500 iterations, step 0.1, no
/// regularization) is fitted on the train part and scored on the rest.
/// Prediction ties go to the lowest class index.
pub fn linear_probe(
    embeddings: &[Vec<f64>],
    labels: &[usize],
    train_frac: f64,
    rng: &mut SeededRng,
) -> Result<f64> {
    if embeddings.len() != labels.len() {
        return domain("embeddings and labels differ in length");
    }
    if embeddings.len() < 2 {
        return precondition("linear probe needs at least two points");
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return domain(format!("train_frac must lie in (0, 1), got {train_frac}"));
    }
    let dim = embeddings[0].len();
    if embeddings.iter().any(|e| e.len() != dim) {
        return domain("embeddings of different dimensions");
    }
    let mut order: Vec<usize> = (0..embeddings.len()).collect();
    rng.shuffle(&mut order);
    let n_train = ((train_frac * order.len() as f64).round() as usize).clamp(1, order.len() - 1);
    let (train_idx, test_idx) = order.split_at(n_train);

    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; n_classes];
    train_idx.iter().for_each(|&i| seen[labels[i]] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return domain("the training split contains a single class");
    }

    let mut weight = vec![0.0; n_classes * dim];
    let mut bias = vec![0.0; n_classes];
    let mut logits = vec![0.0; n_classes];
    let inv_n = 1.0 / train_idx.len() as f64;
    for _ in 0..PROBE_ITERS {
        let mut gw = vec![0.0; n_classes * dim];
        let mut gb = vec![0.0; n_classes];
        for &i in train_idx {
            let x = &embeddings[i];
            class_logits(&weight, &bias, x, &mut logits);
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
            for c in 0..n_classes {
                let p = (logits[c] - max).exp() / z;
                let d = (p - if c == labels[i] { 1.0 } else { 0.0 }) * inv_n;
                gb[c] += d;
                for (g, xv) in gw[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                    *g += d * xv;
                }
            }
        }
        weight
            .iter_mut()
            .zip(&gw)
            .for_each(|(w, g)| *w -= PROBE_LR * g);
        bias.iter_mut()
            .zip(&gb)
            .for_each(|(b, g)| *b -= PROBE_LR * g);
    }

    let correct = test_idx
        .iter()
        .filter(|&&i| {
            class_logits(&weight, &bias, &embeddings[i], &mut logits);
            argmax_lowest(&logits) == labels[i]
        })
        .count();
    Ok(correct as f64 / test_idx.len() as f64)
}

fn class_logits(weight: &[f64], bias: &[f64], x: &[f64], out: &mut [f64]) {
    let dim = x.len();
    for (c, o) in out.iter_mut().enumerate() {
        *o = crate::math::dot(&weight[c * dim..(c + 1) * dim], x) + bias[c];
    }
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
