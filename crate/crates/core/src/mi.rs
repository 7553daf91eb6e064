//! Mutual-information oracles on a correlated Gaussian pair.
//!
//! `q ~ N(0, I_d)` and `k0 = ρ q + √(1-ρ²) ε`, so every coordinate of both
//! vectors is standard normal, the conditional `P(k|q)` is
//! `N(ρq, (1-ρ²) I)` and the mutual information is `-(d/2) ln(1-ρ²)`.
//! With true density ratios in place of a learned critic the InfoNCE target
//! and its bound can be evaluated by plain Monte Carlo.

use serde::{Deserialize, Serialize};

use crate::error::{domain, precondition, Result};
use crate::math::{log_sum_exp_unchecked, softplus, McEstimate, SeededRng};

pub const MIN_MC_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedGaussian {
    pub dim: usize,
    pub rho: f64,
}

impl CorrelatedGaussian {
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        let g = CorrelatedGaussian { dim, rho };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return domain("dimension must be positive");
        }
        if self.rho.is_nan() || self.rho.abs() >= 1.0 {
            return domain(format!("|rho| must be < 1, got {}", self.rho));
        }
        Ok(())
    }

    /// One draw `(q, k0)` from the joint.
    pub fn sample_pair(&self, rng: &mut SeededRng) -> (Vec<f64>, Vec<f64>) {
        let s = (1.0 - self.rho * self.rho).sqrt();
        let q: Vec<f64> = (0..self.dim).map(|_| rng.standard_normal()).collect();
        let k = q
            .iter()
            .map(|x| self.rho * x + s * rng.standard_normal())
            .collect();
        (q, k)
    }

    /// One draw from the marginal of the keys.
    pub fn sample_marginal(&self, rng: &mut SeededRng) -> Vec<f64> {
        (0..self.dim).map(|_| rng.standard_normal()).collect()
    }
}

/// `-(d/2)·ln(1-ρ²)` nats.
pub fn true_mi(dist: &CorrelatedGaussian) -> Result<f64> {
    dist.validate()?;
    Ok(-0.5 * dist.dim as f64 * (-dist.rho * dist.rho).ln_1p())
}

/// `ln N(k; ρq, (1-ρ²)I) - ln N(k; 0, I)`.
pub fn log_density_ratio(dist: &CorrelatedGaussian, q: &[f64], k: &[f64]) -> Result<f64> {
    dist.validate()?;
    if q.len() != dist.dim || k.len() != dist.dim {
        return domain(format!(
            "expected dimension {}, got q={} k={}",
            dist.dim,
            q.len(),
            k.len()
        ));
    }
    Ok(log_ratio_unchecked(dist, q, k))
}

fn log_ratio_unchecked(dist: &CorrelatedGaussian, q: &[f64], k: &[f64]) -> f64 {
    let var = 1.0 - dist.rho * dist.rho;
    let log_var = (-dist.rho * dist.rho).ln_1p();
    q.iter()
        .zip(k)
        .map(|(qi, ki)| {
            let r = ki - dist.rho * qi;
            -0.5 * log_var - r * r / (2.0 * var) + ki * ki / 2.0
        })
        .sum()
}

fn check_mc(n_samples: usize, margin_weight: f64, k: usize) -> Result<()> {
    if n_samples < MIN_MC_SAMPLES {
        return precondition(format!(
            "need at least {MIN_MC_SAMPLES} MC samples, got {n_samples}"
        ));
    }
    if !(margin_weight > 0.0 && margin_weight.is_finite()) {
        return domain(format!(
            "margin weight e^(m/tau) must be positive, got {margin_weight}"
        ));
    }
    if k == 0 {
        return domain("k must be at least 1");
    }
    Ok(())
}

/// Monte-Carlo estimate of the optimal InfoNCE target
/// `E ln(1 + w · P(k0)/P(k0|q) · Σ_i P(ki|q)/P(ki))` with `w = e^{m/τ}`,
/// `(q, k0)` from the joint and `k1..kK` from the marginal.
pub fn optimal_loss_mc(
    dist: &CorrelatedGaussian,
    margin_weight: f64,
    k: usize,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<McEstimate> {
    dist.validate()?;
    check_mc(n_samples, margin_weight, k)?;
    let log_w = margin_weight.ln();
    let mut samples = Vec::with_capacity(n_samples);
    let mut neg_ratios = vec![0.0; k];
    for _ in 0..n_samples {
        let (q, k0) = dist.sample_pair(rng);
        let r0 = log_ratio_unchecked(dist, &q, &k0);
        for slot in neg_ratios.iter_mut() {
            let ki = dist.sample_marginal(rng);
            *slot = log_ratio_unchecked(dist, &q, &ki);
        }
        samples.push(softplus(log_w - r0 + log_sum_exp_unchecked(&neg_ratios)));
    }
    Ok(McEstimate::from_samples(&samples))
}

/// `ln(1 + W) - E ln(1 + W · P(k0)/P(k0|q))` with `W = K·e^{m/τ}`.
///
/// The returned standard error is that of the expectation term.
pub fn theoretical_bound_mc(
    dist: &CorrelatedGaussian,
    margin_weight: f64,
    k: usize,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<McEstimate> {
    dist.validate()?;
    check_mc(n_samples, margin_weight, k)?;
    let log_big_w = (k as f64).ln() + margin_weight.ln();
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let (q, k0) = dist.sample_pair(rng);
        let r0 = log_ratio_unchecked(dist, &q, &k0);
        samples.push(softplus(log_big_w - r0));
    }
    let est = McEstimate::from_samples(&samples);
    Ok(McEstimate {
        mean: softplus(log_big_w) - est.mean,
        ..est
    })
}

/// `ln(1 + K·e^{m/τ}) - L_NCE`.
pub fn empirical_bound(loss_nce: f64, tau: f64, m: f64, k: usize) -> Result<f64> {
    if !loss_nce.is_finite() {
        return domain("loss must be finite");
    }
    if tau.is_nan() || tau <= 0.0 || k == 0 {
        return domain("tau must be positive and k at least 1");
    }
    Ok(softplus((k as f64).ln() + m / tau) - loss_nce)
}

/// Loss and bounds of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub k: usize,
    pub alpha: f64,
    pub m: f64,
    pub tau: f64,
    pub loss: f64,
    pub bound: f64,
    pub true_mi: Option<f64>,
}

impl BoundReport {
    pub fn new(k: usize, m: f64, tau: f64, loss: f64, true_mi: Option<f64>) -> Result<Self> {
        let bound = empirical_bound(loss, tau, m, k)?;
        Ok(BoundReport {
            k,
            alpha: k as f64 * (m / tau).exp(),
            m,
            tau,
            loss,
            bound,
            true_mi,
        })
    }

    pub fn log_normalizer(&self) -> f64 {
        softplus((self.k as f64).ln() + self.m / self.tau)
    }
}
