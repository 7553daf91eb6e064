//! Margin InfoNCE.
//!
//! For a query `q`, positive key `k0` and negatives `k1..kK` (all unit norm):
//!
//! ```text
//! L = -ln  e^{(q·k0 - m)/τ} / ( e^{(q·k0 - m)/τ} + Σ_i e^{q·ki/τ} )
//! ```
//!
//! With the equivalent margin `m = τ·ln(α/K)` the same value is obtained from
//! the weighted form `-ln s0 / (s0 + (α/K) Σ si)` with `si = e^{q·ki/τ}`,
//! and the normalizer `ln(1 + K e^{m/τ})` collapses to `ln(1 + α)`.
//!
//! Gradients with respect to `q` are bounded by `(2/τ)(1 - p0)`, which under
//! the equivalent margin depends on `α` but not on `K`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, EqcoError, Result};
use crate::math::{dot, log_sum_exp_unchecked, norm, softplus, McEstimate, SeededRng};

pub const DEFAULT_TAU: f64 = 0.2;

const UNIT_TOL: f64 = 1e-9;

/// How the positive-logit margin is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MarginMode {
    /// A constant margin `m`, negatives unweighted.
    Fixed { m: f64 },
    /// The equivalent margin `m = τ·ln(α/K)`.
    Eqco { alpha: f64 },
}

impl MarginMode {
    pub fn label(&self) -> &'static str {
        match self {
            MarginMode::Fixed { .. } => "fixed",
            MarginMode::Eqco { .. } => "eqco",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub tau: f64,
    pub margin_mode: MarginMode,
    /// Negatives per query.
    pub k: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            tau: DEFAULT_TAU,
            margin_mode: MarginMode::Fixed { m: 0.0 },
            k: 256,
        }
    }
}

impl LossConfig {
    pub fn new(tau: f64, margin_mode: MarginMode, k: usize) -> Result<Self> {
        let cfg = LossConfig {
            tau,
            margin_mode,
            k,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return domain(format!("tau must be positive, got {}", self.tau));
        }
        if self.k == 0 {
            return domain("k must be at least 1");
        }
        match self.margin_mode {
            MarginMode::Eqco { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                domain(format!("alpha must be positive, got {alpha}"))
            }
            MarginMode::Fixed { m } if !m.is_finite() => domain("margin must be finite"),
            _ => Ok(()),
        }
    }

    /// The margin `m` subtracted from the positive logit.
    pub fn effective_margin(&self) -> f64 {
        match self.margin_mode {
            MarginMode::Fixed { m } => m,
            MarginMode::Eqco { alpha } => self.tau * (alpha / self.k as f64).ln(),
        }
    }

    /// `K·e^{m/τ}`, the number of negatives the loss behaves as if it had.
    pub fn virtual_negatives(&self) -> f64 {
        match self.margin_mode {
            MarginMode::Fixed { m } => self.k as f64 * (m / self.tau).exp(),
            MarginMode::Eqco { alpha } => alpha,
        }
    }

    /// `ln(1 + K·e^{m/τ})`, evaluated from the effective margin.
    pub fn log_normalizer(&self) -> f64 {
        softplus((self.k as f64).ln() + self.effective_margin() / self.tau)
    }
}

/// `τ·ln(α/K)`.
pub fn eqco_margin(tau: f64, alpha: f64, k: usize) -> Result<f64> {
    if tau.is_nan() || tau <= 0.0 || alpha.is_nan() || alpha <= 0.0 {
        return domain(format!(
            "eqco_margin needs tau > 0 and alpha > 0 (tau={tau}, alpha={alpha})"
        ));
    }
    if k == 0 {
        return domain("eqco_margin needs k >= 1");
    }
    Ok(tau * (alpha / k as f64).ln())
}

/// One query with its positive key and negatives. Vectors are borrowed so a
/// shared pool of negatives can serve a whole batch.
#[derive(Debug, Clone)]
pub struct QueryInstance<'a> {
    pub q: &'a [f64],
    pub k0: &'a [f64],
    pub negs: Vec<&'a [f64]>,
}

impl<'a> QueryInstance<'a> {
    pub fn new(q: &'a [f64], k0: &'a [f64], negs: Vec<&'a [f64]>) -> Self {
        QueryInstance { q, k0, negs }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Checks dimensions, unit norms and (when given) the negative count.
    pub fn validate(&self, expected_k: Option<usize>) -> Result<()> {
        let d = self.q.len();
        if d == 0 {
            return domain("empty query vector");
        }
        if self.negs.is_empty() {
            return domain("at least one negative key is required");
        }
        if let Some(k) = expected_k {
            if self.negs.len() != k {
                return domain(format!("expected {k} negatives, got {}", self.negs.len()));
            }
        }
        let all = std::iter::once(self.q)
            .chain(std::iter::once(self.k0))
            .chain(self.negs.iter().copied());
        for v in all {
            if v.len() != d {
                return domain(format!("dimension mismatch: {} vs {d}", v.len()));
            }
            let n = norm(v);
            if !n.is_finite() {
                return Err(EqcoError::Numeric("non-finite embedding".into()));
            }
            if (n - 1.0).abs() > UNIT_TOL {
                return domain(format!("embedding is not unit norm (‖v‖ = {n})"));
            }
        }
        Ok(())
    }
}

/// Loss value and its gradients with respect to every input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    pub grad_q: Vec<f64>,
    pub grad_k0: Vec<f64>,
    pub grad_negs: Vec<Vec<f64>>,
    /// Posterior probability of the positive.
    pub p0: f64,
}

/// Softmax quantities shared by the forward and backward passes.
pub(crate) struct Posterior {
    pub loss: f64,
    /// `1 - p0`, computed directly to avoid cancellation.
    pub one_minus_p0: f64,
    /// `p_i` for each negative.
    pub neg_probs: Vec<f64>,
}

/// `pos_logit` is the positive logit, `neg_shift` is added to every negative
/// logit `q·ki/τ` (the log of the negative weight).
pub(crate) fn posterior(
    q: &[f64],
    negs: &[&[f64]],
    pos_logit: f64,
    neg_shift: f64,
    tau: f64,
) -> Result<Posterior> {
    let neg_logits: Vec<f64> = negs.iter().map(|k| dot(q, k) / tau + neg_shift).collect();
    let lse_neg = log_sum_exp_unchecked(&neg_logits);
    // -ln p0 = ln(1 + Σ e^{li - l0})
    let x = lse_neg - pos_logit;
    if !x.is_finite() {
        return Err(EqcoError::Numeric(format!(
            "non-finite logits (pos={pos_logit}, lse_neg={lse_neg})"
        )));
    }
    let loss = softplus(x);
    let one_minus_p0 = 1.0 / (1.0 + (-x).exp());
    let neg_probs = neg_logits
        .iter()
        .map(|l| one_minus_p0 * (l - lse_neg).exp())
        .collect();
    Ok(Posterior {
        loss,
        one_minus_p0,
        neg_probs,
    })
}

/// Margin-form logits for a config: (positive logit, negative log-weight).
fn margin_form(inst: &QueryInstance<'_>, cfg: &LossConfig) -> (f64, f64) {
    let m = cfg.effective_margin();
    ((dot(inst.q, inst.k0) - m) / cfg.tau, 0.0)
}

/// Weighted-form logits: unshifted positive, negatives weighted by `α/K`.
fn weighted_form(inst: &QueryInstance<'_>, tau: f64, alpha: f64) -> (f64, f64) {
    let k = inst.negs.len() as f64;
    (dot(inst.q, inst.k0) / tau, (alpha / k).ln())
}

/// Margin InfoNCE in its margin form.
pub fn infonce_forward(inst: &QueryInstance<'_>, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    inst.validate(Some(cfg.k))?;
    let (pos, shift) = margin_form(inst, cfg);
    Ok(posterior(inst.q, &inst.negs, pos, shift, cfg.tau)?.loss)
}

/// `-ln s0 / (s0 + (α/K) Σ si)`.
pub fn infonce_forward_weighted(inst: &QueryInstance<'_>, tau: f64, alpha: f64) -> Result<f64> {
    LossConfig::new(tau, MarginMode::Eqco { alpha }, inst.negs.len().max(1))?;
    inst.validate(None)?;
    let (pos, shift) = weighted_form(inst, tau, alpha);
    Ok(posterior(inst.q, &inst.negs, pos, shift, tau)?.loss)
}

/// Loss and analytic gradients.
///
/// EqCo mode is evaluated through the weighted form; Fixed mode applies its
/// margin to the positive logit and leaves negatives unweighted.
pub fn infonce_grad(inst: &QueryInstance<'_>, cfg: &LossConfig) -> Result<LossGrad> {
    cfg.validate()?;
    inst.validate(Some(cfg.k))?;
    let (pos, shift) = match cfg.margin_mode {
        MarginMode::Fixed { .. } => margin_form(inst, cfg),
        MarginMode::Eqco { alpha } => weighted_form(inst, cfg.tau, alpha),
    };
    let post = posterior(inst.q, &inst.negs, pos, shift, cfg.tau)?;
    let inv_tau = 1.0 / cfg.tau;
    let d = inst.dim();

    let mut grad_q: Vec<f64> = inst
        .k0
        .iter()
        .map(|k| -inv_tau * post.one_minus_p0 * k)
        .collect();
    for (p, k) in post.neg_probs.iter().zip(&inst.negs) {
        let c = inv_tau * p;
        for (g, kv) in grad_q.iter_mut().zip(k.iter()) {
            *g += c * kv;
        }
    }
    let grad_k0 = inst
        .q
        .iter()
        .map(|x| -inv_tau * post.one_minus_p0 * x)
        .collect();
    let grad_negs = post
        .neg_probs
        .iter()
        .map(|p| inst.q.iter().map(|x| inv_tau * p * x).collect())
        .collect();
    debug_assert_eq!(grad_q.len(), d);

    Ok(LossGrad {
        value: post.loss,
        grad_q,
        grad_k0,
        grad_negs,
        p0: 1.0 - post.one_minus_p0,
    })
}

/// Loss, `1 - p0` and `dL/dq` for one query, without input validation.
/// Used on hot paths where embeddings are unit norm by construction.
pub(crate) struct QueryGrad {
    pub loss: f64,
    pub one_minus_p0: f64,
    pub grad_q: Vec<f64>,
}

pub(crate) fn query_grad_unchecked(
    q: &[f64],
    k0: &[f64],
    negs: &[&[f64]],
    cfg: &LossConfig,
) -> Result<QueryGrad> {
    let (pos, shift) = match cfg.margin_mode {
        MarginMode::Fixed { m } => ((dot(q, k0) - m) / cfg.tau, 0.0),
        MarginMode::Eqco { alpha } => (dot(q, k0) / cfg.tau, (alpha / negs.len() as f64).ln()),
    };
    let post = posterior(q, negs, pos, shift, cfg.tau)?;
    let inv_tau = 1.0 / cfg.tau;
    let mut grad_q: Vec<f64> = k0
        .iter()
        .map(|k| -inv_tau * post.one_minus_p0 * k)
        .collect();
    for (p, k) in post.neg_probs.iter().zip(negs) {
        let c = inv_tau * p;
        for (g, kv) in grad_q.iter_mut().zip(k.iter()) {
            *g += c * kv;
        }
    }
    Ok(QueryGrad {
        loss: post.loss,
        one_minus_p0: post.one_minus_p0,
        grad_q,
    })
}

/// `(2/τ)(1 - s0 / (s0 + (α/K) Σ si))`, an upper bound on `‖dL/dq‖`.
pub fn grad_norm_bound_pointwise(inst: &QueryInstance<'_>, tau: f64, alpha: f64) -> Result<f64> {
    LossConfig::new(tau, MarginMode::Eqco { alpha }, inst.negs.len().max(1))?;
    inst.validate(None)?;
    let (pos, shift) = weighted_form(inst, tau, alpha);
    let post = posterior(inst.q, &inst.negs, pos, shift, tau)?;
    Ok(2.0 / tau * post.one_minus_p0)
}

/// Mean of per-query losses, the batched objective over `N` queries.
pub fn batch_loss(instances: &[QueryInstance<'_>], cfg: &LossConfig) -> Result<f64> {
    if instances.is_empty() {
        return precondition("batch_loss over an empty batch");
    }
    let mut total = 0.0;
    for inst in instances {
        total += infonce_forward(inst, cfg)?;
    }
    Ok(total / instances.len() as f64)
}

/// Result of the Monte-Carlo check of the expected gradient-norm bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationBound {
    /// Monte-Carlo estimate of `E‖dL/dq‖` over fresh negative draws.
    pub mc_mean_norm: f64,
    pub mc_std_err: f64,
    /// `(2/τ)(1 - s0 / (s0 + α·E[si]))`.
    pub theorem_bound: f64,
    /// Estimate of `E[si]` and its standard error.
    pub mean_s: f64,
    pub mean_s_std_err: f64,
}

impl ExpectationBound {
    /// Slack of the inequality: bound minus mean norm.
    pub fn margin(&self) -> f64 {
        self.theorem_bound - self.mc_mean_norm
    }

    /// Standard error of `theorem_bound` induced by the error in `E[si]`.
    pub fn bound_std_err(&self, s0: f64, tau: f64, alpha: f64) -> f64 {
        let denom = s0 + alpha * self.mean_s;
        2.0 / tau * s0 * alpha / (denom * denom) * self.mean_s_std_err
    }
}

/// Estimates `E‖dL/dq‖` under EqCo weighting with negatives drawn from
/// `key_sampler`, alongside the expectation bound.
#[allow(clippy::too_many_arguments)]
pub fn grad_norm_bound_expectation<F>(
    q: &[f64],
    k0: &[f64],
    mut key_sampler: F,
    tau: f64,
    alpha: f64,
    k: usize,
    mc_samples: usize,
    rng: &mut SeededRng,
) -> Result<ExpectationBound>
where
    F: FnMut(&mut SeededRng) -> Vec<f64>,
{
    if mc_samples < 1000 {
        return precondition(format!("need at least 1000 MC samples, got {mc_samples}"));
    }
    let cfg = LossConfig::new(tau, MarginMode::Eqco { alpha }, k)?;
    let mut norms = Vec::with_capacity(mc_samples);
    let mut s_values = Vec::with_capacity(mc_samples * k);
    for _ in 0..mc_samples {
        let keys: Vec<Vec<f64>> = (0..k).map(|_| key_sampler(rng)).collect();
        for key in &keys {
            s_values.push((dot(q, key) / tau).exp());
        }
        let negs: Vec<&[f64]> = keys.iter().map(Vec::as_slice).collect();
        let inst = QueryInstance::new(q, k0, negs);
        let g = infonce_grad(&inst, &cfg)?;
        norms.push(norm(&g.grad_q));
    }
    let norm_est = McEstimate::from_samples(&norms);
    let s_est = McEstimate::from_samples(&s_values);
    let s0 = (dot(q, k0) / tau).exp();
    let theorem_bound = 2.0 / tau * (1.0 - s0 / (s0 + alpha * s_est.mean));
    Ok(ExpectationBound {
        mc_mean_norm: norm_est.mean,
        mc_std_err: norm_est.std_err,
        theorem_bound,
        mean_s: s_est.mean,
        mean_s_std_err: s_est.std_err,
    })
}
