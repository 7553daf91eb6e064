//! Learned InfoNCE critic on the correlated Gaussian pair.
//!
//! A Siamese encoder `g` maps both members of a pair to the unit sphere and
//! the critic is `g(x)·g(y)/τ`. Positives come from the joint, negatives are
//! fresh draws from the marginal shared by the batch. Unlike the contrastive
//! trainer, gradients flow through queries, positive keys and negatives.
//! After every epoch the critic is scored on a fixed held-out set, which
//! gives the per-epoch loss and empirical bound.

use serde::{Deserialize, Serialize};

use crate::encoder::{encode, encode_backward_into, init_params, ForwardCache, MlpParams};
use crate::error::{EqcoError, Result};
use crate::loss::{posterior, LossConfig, MarginMode};
use crate::math::{dot, SeededRng};
use crate::mi::{empirical_bound, CorrelatedGaussian};
use crate::train::lr_at_step;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticConfig {
    pub dim: usize,
    pub rho: f64,
    pub n_queries: usize,
    pub steps_per_epoch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub sgd_momentum: f64,
    pub warmup_frac: f64,
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    /// Held-out queries used to score the critic after each epoch.
    pub eval_queries: usize,
    /// Queries sharing one draw of negatives during evaluation.
    pub eval_chunk: usize,
}

impl Default for CriticConfig {
    fn default() -> Self {
        CriticConfig {
            dim: 1,
            rho: 0.9,
            n_queries: 128,
            steps_per_epoch: 50,
            epochs: 10,
            lr: 0.1,
            sgd_momentum: 0.9,
            warmup_frac: 0.05,
            hidden: vec![64, 64],
            embed_dim: 32,
            eval_queries: 4096,
            eval_chunk: 128,
        }
    }
}

/// Per-epoch evaluation of the critic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticEpoch {
    pub epoch: usize,
    /// Global step count at the end of the epoch.
    pub step: usize,
    pub loss_nce: f64,
    pub f_hat_bound: f64,
}

#[derive(Debug, Clone)]
pub struct CriticRun {
    pub params: MlpParams,
    pub epochs: Vec<CriticEpoch>,
    pub failure: Option<String>,
}

impl CriticRun {
    pub fn final_epoch(&self) -> Option<CriticEpoch> {
        self.epochs.last().copied()
    }
}

fn encode_all(params: &MlpParams, xs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<ForwardCache>)> {
    let mut emb = Vec::with_capacity(xs.len());
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let (e, c) = encode(params, x)?;
        emb.push(e);
        caches.push(c);
    }
    Ok((emb, caches))
}

/// Margin-form positive logit and negative log-weight for a config.
fn logit_terms(q: &[f64], k0: &[f64], loss: &LossConfig, k: usize) -> (f64, f64) {
    match loss.margin_mode {
        MarginMode::Fixed { m } => ((dot(q, k0) - m) / loss.tau, 0.0),
        MarginMode::Eqco { alpha } => (dot(q, k0) / loss.tau, (alpha / k as f64).ln()),
    }
}

/// Mean InfoNCE loss of the critic on the held-out set drawn from `seed`.
pub fn evaluate_critic(
    params: &MlpParams,
    dist: &CorrelatedGaussian,
    loss: &LossConfig,
    eval_queries: usize,
    eval_chunk: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = SeededRng::new(seed);
    let chunk = eval_chunk.max(1);
    let mut total = 0.0;
    let mut count = 0usize;
    while count < eval_queries {
        let n = chunk.min(eval_queries - count);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|_| dist.sample_pair(&mut rng)).collect();
        let negs_x: Vec<Vec<f64>> = (0..loss.k)
            .map(|_| dist.sample_marginal(&mut rng))
            .collect();
        let (negs, _) = encode_all(params, &negs_x)?;
        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        for (x, y) in &pairs {
            let (q, _) = encode(params, x)?;
            let (k0, _) = encode(params, y)?;
            let (pos, shift) = logit_terms(&q, &k0, loss, loss.k);
            total += posterior(&q, &neg_refs, pos, shift, loss.tau)?.loss;
        }
        count += n;
    }
    Ok(total / eval_queries as f64)
}

/// Trains a critic for one loss configuration. `seed` drives initialization
/// and training draws; `eval_seed` fixes the held-out set so different
/// configurations are scored on the same pairs.
pub fn train_critic(
    cfg: &CriticConfig,
    loss: &LossConfig,
    seed: u64,
    eval_seed: u64,
) -> Result<CriticRun> {
    loss.validate()
        .map_err(|e| EqcoError::Config(e.to_string()))?;
    let dist =
        CorrelatedGaussian::new(cfg.dim, cfg.rho).map_err(|e| EqcoError::Config(e.to_string()))?;
    if cfg.n_queries == 0 || cfg.steps_per_epoch == 0 || cfg.eval_queries == 0 {
        return Err(EqcoError::Config(
            "critic batch, steps and eval sizes must be positive".into(),
        ));
    }
    let mut dims = vec![cfg.dim];
    dims.extend(&cfg.hidden);
    dims.push(cfg.embed_dim);
    let mut params = init_params(&mut SeededRng::derive(seed, 0), &dims)?;
    let mut velocity = params.zeros_like();
    let mut rng = SeededRng::derive(seed, 1);
    let total_steps = cfg.steps_per_epoch * cfg.epochs;
    let k = loss.k;
    let m = loss.effective_margin();
    let inv_n = 1.0 / cfg.n_queries as f64;
    let inv_tau = 1.0 / loss.tau;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut step = 0;

    for epoch in 0..cfg.epochs {
        for _ in 0..cfg.steps_per_epoch {
            let lr = lr_at_step(step, total_steps, cfg.warmup_frac, cfg.lr);
            let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_queries)
                .map(|_| dist.sample_pair(&mut rng))
                .collect();
            let (xs, ys): (Vec<Vec<f64>>, Vec<Vec<f64>>) = pairs.into_iter().unzip();
            let negs_x: Vec<Vec<f64>> = (0..k).map(|_| dist.sample_marginal(&mut rng)).collect();
            let (qs, q_caches) = encode_all(&params, &xs)?;
            let (ks, k_caches) = encode_all(&params, &ys)?;
            let (ns, n_caches) = encode_all(&params, &negs_x)?;
            let neg_refs: Vec<&[f64]> = ns.iter().map(Vec::as_slice).collect();

            let mut grads = params.zeros_like();
            let mut d_negs = vec![vec![0.0; cfg.embed_dim]; k];
            for j in 0..cfg.n_queries {
                let (pos, shift) = logit_terms(&qs[j], &ks[j], loss, k);
                let post = match posterior(&qs[j], &neg_refs, pos, shift, loss.tau) {
                    Ok(p) => p,
                    Err(EqcoError::Numeric(msg)) => {
                        return Ok(CriticRun {
                            params,
                            epochs,
                            failure: Some(msg),
                        });
                    }
                    Err(e) => return Err(e),
                };
                let c0 = -inv_tau * post.one_minus_p0 * inv_n;
                let mut d_q: Vec<f64> = ks[j].iter().map(|v| c0 * v).collect();
                for (i, p) in post.neg_probs.iter().enumerate() {
                    let c = inv_tau * p * inv_n;
                    for ((dq, nv), (dn, qv)) in d_q
                        .iter_mut()
                        .zip(&ns[i])
                        .zip(d_negs[i].iter_mut().zip(&qs[j]))
                    {
                        *dq += c * nv;
                        *dn += c * qv;
                    }
                }
                let d_k0: Vec<f64> = qs[j].iter().map(|v| c0 * v).collect();
                encode_backward_into(&params, &q_caches[j], &d_q, &mut grads)?;
                encode_backward_into(&params, &k_caches[j], &d_k0, &mut grads)?;
            }
            for (cache, d) in n_caches.iter().zip(&d_negs) {
                encode_backward_into(&params, cache, d, &mut grads)?;
            }
            if !grads.is_finite() {
                return Ok(CriticRun {
                    params,
                    epochs,
                    failure: Some(format!("non-finite gradient at step {step}")),
                });
            }
            velocity.scale(cfg.sgd_momentum);
            velocity.add_scaled(&grads, 1.0);
            params.add_scaled(&velocity, -lr);
            step += 1;
        }
        let loss_nce = evaluate_critic(
            &params,
            &dist,
            loss,
            cfg.eval_queries,
            cfg.eval_chunk,
            eval_seed,
        );
        let loss_nce = match loss_nce {
            Ok(v) if v.is_finite() => v,
            Ok(_) => {
                return Ok(CriticRun {
                    params,
                    epochs,
                    failure: Some(format!("non-finite evaluation loss after epoch {epoch}")),
                })
            }
            Err(EqcoError::Numeric(msg)) => {
                return Ok(CriticRun {
                    params,
                    epochs,
                    failure: Some(msg),
                })
            }
            Err(e) => return Err(e),
        };
        epochs.push(CriticEpoch {
            epoch,
            step,
            loss_nce,
            f_hat_bound: empirical_bound(loss_nce, loss.tau, m, k)?,
        });
    }
    Ok(CriticRun {
        params,
        epochs,
        failure: None,
    })
}
