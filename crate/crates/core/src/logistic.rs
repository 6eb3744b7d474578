//! L2-regularized binary logistic regression.
//!
//! The objective is the mean negative log-likelihood plus
//! `l2 / 2 * ||w||^2` (the bias is not penalized). It is minimized with
//! damped Newton steps until the gradient norm falls below `tolerance`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::cholesky_solve;
use crate::text::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            coefficients: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    /// Parameters as one vector, bias last.
    pub fn to_params(&self) -> Vec<f64> {
        let mut p = self.coefficients.clone();
        p.push(self.bias);
        p
    }

    pub fn from_params(params: &[f64]) -> Self {
        let (w, b) = params.split_at(params.len() - 1);
        Self {
            coefficients: w.to_vec(),
            bias: b[0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub l2: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LogisticError {
    #[error("no training examples")]
    Empty,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature vectors have inconsistent dimensions")]
    DimensionMismatch,
    #[error("non-finite feature value")]
    NonFinite,
    #[error("l2 penalty must be positive")]
    InvalidPenalty,
    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

/// Regularized mean negative log-likelihood.
pub fn objective(model: &LogisticModel, features: &[Vec<f64>], labels: &[bool], l2: f64) -> f64 {
    let nll: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = model.decision(x);
            if y {
                log1pexp(-z)
            } else {
                log1pexp(z)
            }
        })
        .sum();
    let penalty: f64 = model.coefficients.iter().map(|w| w * w).sum();
    nll / features.len() as f64 + 0.5 * l2 * penalty
}

/// Gradient of [`objective`], bias component last.
pub fn objective_gradient(
    model: &LogisticModel,
    features: &[Vec<f64>],
    labels: &[bool],
    l2: f64,
) -> Vec<f64> {
    let d = model.coefficients.len();
    let n = features.len() as f64;
    let mut g = vec![0.0; d + 1];
    for (x, &y) in features.iter().zip(labels) {
        let r = model.predict(x) - if y { 1.0 } else { 0.0 };
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    for (j, gj) in g.iter_mut().enumerate() {
        *gj /= n;
        if j < d {
            *gj += l2 * model.coefficients[j];
        }
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn train_logistic(
    features: &[Vec<f64>],
    labels: &[bool],
    config: &LogisticConfig,
) -> Result<LogisticFit, LogisticError> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(if features.is_empty() {
            LogisticError::Empty
        } else {
            LogisticError::DimensionMismatch
        });
    }
    let positives = labels.iter().filter(|y| **y).count();
    if positives == 0 || positives == labels.len() {
        return Err(LogisticError::SingleClass);
    }
    let d = features[0].len();
    if features.iter().any(|x| x.len() != d) {
        return Err(LogisticError::DimensionMismatch);
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LogisticError::NonFinite);
    }
    if !(config.l2 > 0.0 && config.l2.is_finite()) {
        return Err(LogisticError::InvalidPenalty);
    }

    let n = features.len() as f64;
    let p = d + 1;
    let mut model = LogisticModel::zeros(d);
    let mut grad = objective_gradient(&model, features, labels, config.l2);
    let mut f = objective(&model, features, labels, config.l2);
    for iteration in 0..config.max_iterations {
        let gnorm = norm(&grad);
        if gnorm < config.tolerance {
            return Ok(LogisticFit {
                model,
                iterations: iteration,
                gradient_norm: gnorm,
            });
        }
        // Hessian of the objective, bias as the last row/column.
        let mut hess = vec![0.0; p * p];
        for x in features {
            let s = model.predict(x);
            let w = s * (1.0 - s) / n;
            for i in 0..p {
                let xi = if i < d { x[i] } else { 1.0 };
                if xi == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    let xj = if j < d { x[j] } else { 1.0 };
                    hess[i * p + j] += w * xi * xj;
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                hess[j * p + i] = hess[i * p + j];
            }
            if i < d {
                hess[i * p + i] += config.l2;
            } else {
                // Keeps the bias block definite when the model saturates.
                hess[i * p + i] += 1e-12;
            }
        }
        let direction = match cholesky_solve(&hess, &grad) {
            Some(step) => step,
            None => grad.clone(),
        };
        let slope: f64 = grad.iter().zip(&direction).map(|(g, s)| g * s).sum();
        let params = model.to_params();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params
                .iter()
                .zip(&direction)
                .map(|(w, s)| w - t * s)
                .collect();
            let candidate = LogisticModel::from_params(&trial);
            let fc = objective(&candidate, features, labels, config.l2);
            if fc <= f - 1e-4 * t * slope {
                accepted = Some((candidate, fc));
                break;
            }
            t *= 0.5;
        }
        let accepted = accepted.or_else(|| {
            // Near the optimum the objective decrease drops below rounding
            // noise; fall back to the full step if it still shrinks the
            // gradient.
            let trial: Vec<f64> = params.iter().zip(&direction).map(|(w, s)| w - s).collect();
            let candidate = LogisticModel::from_params(&trial);
            let g = objective_gradient(&candidate, features, labels, config.l2);
            (norm(&g) < gnorm).then(|| {
                let fc = objective(&candidate, features, labels, config.l2);
                (candidate, fc)
            })
        });
        let Some((next, fnext)) = accepted else {
            return Err(LogisticError::NotConverged {
                iterations: iteration,
                gradient_norm: gnorm,
            });
        };
        model = next;
        f = fnext;
        grad = objective_gradient(&model, features, labels, config.l2);
    }
    let gnorm = norm(&grad);
    if gnorm < config.tolerance {
        Ok(LogisticFit {
            model,
            iterations: config.max_iterations,
            gradient_norm: gnorm,
        })
    } else {
        Err(LogisticError::NotConverged {
            iterations: config.max_iterations,
            gradient_norm: gnorm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_slope_is_positive() {
        let x = vec![vec![-1.0], vec![1.0]];
        let fit = train_logistic(&x, &[false, true], &LogisticConfig::default()).unwrap();
        assert!(fit.model.coefficients[0] > 0.0);
        assert!(fit.gradient_norm < 1e-6);
    }

    #[test]
    fn separable_2d_fixture() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let t = i as f64 / 10.0;
            x.push(vec![1.0 + t, 0.5 - t]);
            y.push(true);
            x.push(vec![-1.0 - t, -0.2 + t]);
            y.push(false);
        }
        let fit = train_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        let acc = x
            .iter()
            .zip(&y)
            .filter(|(xi, yi)| (fit.model.predict(xi) > 0.5) == **yi)
            .count();
        assert_eq!(acc, x.len());
    }

    #[test]
    fn input_errors() {
        let cfg = LogisticConfig::default();
        assert_eq!(
            train_logistic(&[vec![1.0], vec![2.0]], &[true, true], &cfg).unwrap_err(),
            LogisticError::SingleClass
        );
        assert_eq!(
            train_logistic(&[vec![1.0], vec![f64::NAN]], &[true, false], &cfg).unwrap_err(),
            LogisticError::NonFinite
        );
        assert_eq!(
            train_logistic(&[vec![1.0], vec![1.0, 2.0]], &[true, false], &cfg).unwrap_err(),
            LogisticError::DimensionMismatch
        );
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        let x: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()])
            .collect();
        let y: Vec<bool> = (0..12).map(|i| i % 3 == 0).collect();
        let cfg = LogisticConfig::default();
        let fit = train_logistic(&x, &y, &cfg).unwrap();
        assert!(norm(&objective_gradient(&fit.model, &x, &y, cfg.l2)) < 1e-6);
    }
}
