//! Frobenius-norm NMF with Lee-Seung multiplicative updates.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TopicError;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmfConfig {
    pub max_iterations: usize,
    /// Stop once the relative objective improvement drops below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfResult {
    /// Documents x topics.
    pub w: Matrix,
    /// Topics x terms.
    pub h: Matrix,
    /// `||V - WH||_F^2` at initialization and after every iteration.
    pub objective_trace: Vec<f64>,
}

fn objective(v: &Matrix, w: &Matrix, h: &Matrix) -> f64 {
    let wh = w.matmul(h);
    v.iter().zip(wh.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Rescales `x` by `num / den` element-wise, leaving entries with a zero
/// denominator untouched.
fn multiplicative(x: &mut Matrix, num: &Matrix, den: &Matrix) {
    for ((x, n), d) in x.iter_mut().zip(num.iter()).zip(den.iter()) {
        if *d > 0.0 {
            *x *= n / d;
        }
    }
}

/// Factorizes non-negative `v` (documents x terms) into `W H` with `k`
/// topics. Entries start uniform in `(0, 1]` scaled by `sqrt(mean(V) / k)`.
pub fn nmf(v: &Matrix, k: usize, config: &NmfConfig) -> Result<NmfResult, TopicError> {
    let max = v.rows().min(v.cols());
    if k == 0 || k > max {
        return Err(TopicError::RankOutOfRange { k, max });
    }
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(TopicError::InvalidEntry);
    }
    let mean = v.iter().sum::<f64>() / (v.rows() * v.cols()) as f64;
    let scale = libm::sqrt(mean / k as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init = |r, c| Matrix::from_fn(r, c, |_, _| (1.0 - rng.random::<f64>()) * scale);
    let mut w = init(v.rows(), k);
    let mut h = init(k, v.cols());

    let mut trace = Vec::with_capacity(config.max_iterations + 1);
    trace.push(objective(v, &w, &h));
    for _ in 0..config.max_iterations {
        let wt = w.transpose();
        let num = wt.matmul(v);
        let den = wt.matmul(&w).matmul(&h);
        multiplicative(&mut h, &num, &den);

        let ht = h.transpose();
        let num = v.matmul(&ht);
        let den = w.matmul(&h.matmul(&ht));
        multiplicative(&mut w, &num, &den);

        let prev = *trace.last().unwrap();
        let cur = objective(v, &w, &h);
        trace.push(cur);
        if cur == 0.0 || (prev - cur) <= config.tolerance * prev {
            break;
        }
    }
    Ok(NmfResult {
        w,
        h,
        objective_trace: trace,
    })
}
