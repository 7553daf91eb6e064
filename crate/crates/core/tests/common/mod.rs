//! Reference implementations written independently of the library code.
#![allow(dead_code, clippy::needless_range_loop)]

use eqco::encoder::MlpParams;
use eqco::math::SeededRng;

/// Textbook margin InfoNCE: `-ln(e^{l0} / (e^{l0} + Σ e^{li}))` with a
/// max shift, using plain loops.
pub fn naive_loss(q: &[f64], k0: &[f64], negs: &[Vec<f64>], tau: f64, m: f64) -> f64 {
    let d = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..a.len() {
            s += a[i] * b[i];
        }
        s
    };
    let mut logits = vec![(d(q, k0) - m) / tau];
    for k in negs {
        logits.push(d(q, k) / tau);
    }
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for l in &logits {
        z += (l - mx).exp();
    }
    -(logits[0] - mx) + z.ln()
}

/// Forward pass of the encoder written from the layer definition.
pub fn naive_embed(p: &MlpParams, x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    let last = p.layers.len() - 1;
    for (li, layer) in p.layers.iter().enumerate() {
        let mut out = vec![0.0; layer.out_dim];
        for o in 0..layer.out_dim {
            let mut s = layer.bias[o];
            for i in 0..layer.in_dim {
                s += layer.weight[o * layer.in_dim + i] * h[i];
            }
            out[o] = if li < last && s < 0.0 { 0.0 } else { s };
        }
        h = out;
    }
    let n = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    h.iter().map(|v| v / n).collect()
}

pub fn unit(rng: &mut SeededRng, d: usize) -> Vec<f64> {
    eqco::math::sample_unit_sphere(rng, d)
}

pub fn uniform_in(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

/// `max - min` of the values.
pub fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

pub fn rel_err(approx: &[f64], exact: &[f64]) -> f64 {
    let diff = approx
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale.max(1.0)
}
