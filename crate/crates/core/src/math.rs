//! Numeric primitives shared by the rest of the crate: stable reductions,
//! normalization and a seeded, platform-independent random stream.

use crate::error::{domain, precondition, Result};

/// Dot product of two equal-length slices.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `log Σ exp(v)` with max-subtraction.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return precondition("log_sum_exp of an empty slice");
    }
    if values.iter().any(|v| !v.is_finite()) {
        return domain("log_sum_exp input contains a non-finite value");
    }
    Ok(log_sum_exp_unchecked(values))
}

/// Same as [`log_sum_exp`] without validation; the caller guarantees a
/// non-empty, finite input.
#[inline]
pub(crate) fn log_sum_exp_unchecked(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Returns `v / ‖v‖`. Fails on the zero vector or non-finite input.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if !n.is_finite() {
        return domain("cannot normalize a non-finite vector");
    }
    if n == 0.0 {
        return domain("cannot normalize the zero vector");
    }
    // Already unit within rounding: return as is so normalization is idempotent bit-for-bit.
    if (n - 1.0).abs() <= 8.0 * f64::EPSILON {
        return Ok(v.to_vec());
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Arithmetic mean and population variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// A Monte-Carlo estimate with its standard error (sample std / √n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let (mean, pop_var) = mean_var(samples);
        let std_err = if n > 1 {
            (pop_var * n as f64 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate { mean, std_err, n }
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed for sub-task `stream` of `seed`.
///
/// `split_seed(s, i) = splitmix64(s ^ splitmix64(i))`, so children of the same
/// parent are decorrelated and the mapping is identical on every platform.
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    let mut s = stream;
    let mixed = seed ^ splitmix64(&mut s);
    let mut t = mixed;
    splitmix64(&mut t)
}

/// xoshiro256** seeded through splitmix64.
///
/// Gaussian draws use the Box–Muller transform; the second value of each
/// pair is cached, so the stream of normals is a pure function of the seed
/// and the call sequence.
#[derive(Debug, Clone)]
pub struct SeededRng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        SeededRng {
            s,
            spare_normal: None,
        }
    }

    /// A generator for sub-task `stream`, see [`split_seed`].
    pub fn derive(seed: u64, stream: u64) -> Self {
        Self::new(split_seed(seed, stream))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..n`, uniformly without replacement, in
    /// draw order (partial Fisher–Yates).
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Result<Vec<usize>> {
        if k > n {
            return precondition(format!("cannot draw {k} distinct indices from {n}"));
        }
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        Ok(pool)
    }
}

/// `n` i.i.d. standard normal draws.
pub fn sample_std_gaussian(rng: &mut SeededRng, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return precondition("sample_std_gaussian with n = 0");
    }
    Ok((0..n).map(|_| rng.standard_normal()).collect())
}

/// A uniformly random unit vector in `dim` dimensions.
pub fn sample_unit_sphere(rng: &mut SeededRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        if let Ok(u) = l2_normalize(&v) {
            return u;
        }
    }
}
