//! L2-regularized binary logistic regression trained by gradient descent with an Armijo
//! backtracking line search.
//!
//! Objective: `(1/n) Σ ln(1 + exp(−yᵢ (w·xᵢ + b))) + λ‖w‖²` with `yᵢ = +1` for `RB` and
//! `−1` for `NonRB`. The bias is not regularized. Training starts from `w = 0, b = 0`.

use serde::{Deserialize, Serialize};

use super::mnb::check_training_inputs;
use crate::error::{Error, Result};
use crate::vectorize::{DocTermMatrix, SparseVec};
use crate::Label;

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub lambda: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            tolerance: 1e-6,
            max_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub achieved_iterations: usize,
    pub converged: bool,
    pub final_gradient_norm: f64,
    /// Objective value at the start and after every accepted step.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub convergence: Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegPrediction {
    pub label: Label,
    /// `P(RB | x)`.
    pub probability: f64,
}

fn sign(label: Label) -> f64 {
    match label {
        Label::Rb => 1.0,
        Label::NonRb => -1.0,
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Regularized mean logistic loss.
pub fn logistic_loss(x: &DocTermMatrix, y: &[Label], weights: &[f64], bias: f64, lambda: f64) -> f64 {
    let data: f64 = x
        .rows
        .iter()
        .zip(y)
        .map(|(row, &l)| softplus(-sign(l) * (row.dot(weights) + bias)))
        .sum();
    data / y.len() as f64 + lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`logistic_loss`]: `(∂/∂w, ∂/∂b)`.
pub fn logistic_gradient(x: &DocTermMatrix, y: &[Label], weights: &[f64], bias: f64, lambda: f64) -> (Vec<f64>, f64) {
    let n = y.len() as f64;
    let mut gw: Vec<f64> = weights.iter().map(|w| 2.0 * lambda * w).collect();
    let mut gb = 0.0;
    for (row, &l) in x.rows.iter().zip(y) {
        let s = sign(l);
        // d/dm softplus(−m) = −σ(−m)
        let coef = -s * sigmoid(-s * (row.dot(weights) + bias)) / n;
        gb += coef;
        for (t, v) in row.iter() {
            gw[t] += coef * v;
        }
    }
    (gw, gb)
}

fn inf_norm(gw: &[f64], gb: f64) -> f64 {
    gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()))
}

pub fn train_logreg(x: &DocTermMatrix, y: &[Label], cfg: &LogRegConfig) -> Result<LogRegParams> {
    if !(cfg.lambda.is_finite() && cfg.lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be ≥ 0, got {}", cfg.lambda)));
    }
    if cfg.tolerance.is_nan() || cfg.tolerance <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    check_training_inputs(x, y)?;

    let mut w = vec![0.0; x.n_cols];
    let mut b = 0.0;
    let mut loss = logistic_loss(x, y, &w, b, cfg.lambda);
    let mut history = vec![loss];
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let (mut gw, mut gb) = logistic_gradient(x, y, &w, b, cfg.lambda);
    let mut gnorm = inf_norm(&gw, gb);
    let mut converged = gnorm < cfg.tolerance;

    while !converged && iterations < cfg.max_iterations {
        let g_sq: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        let mut t = (step * 2.0).min(MAX_STEP);
        let accepted = loop {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - t * gi).collect();
            let b_new = b - t * gb;
            let l_new = logistic_loss(x, y, &w_new, b_new, cfg.lambda);
            if l_new <= loss - ARMIJO_C * t * g_sq {
                break Some((w_new, b_new, l_new));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((w_new, b_new, l_new)) = accepted else {
            break;
        };
        w = w_new;
        b = b_new;
        loss = l_new;
        step = t;
        history.push(loss);
        iterations += 1;
        (gw, gb) = logistic_gradient(x, y, &w, b, cfg.lambda);
        gnorm = inf_norm(&gw, gb);
        converged = gnorm < cfg.tolerance;
    }

    if !converged {
        log::warn!(
            "logistic regression stopped after {iterations} iterations with gradient norm {gnorm:.3e} (tolerance {:.1e})",
            cfg.tolerance
        );
    }
    Ok(LogRegParams {
        weights: w,
        bias: b,
        lambda: cfg.lambda,
        convergence: Convergence {
            tolerance: cfg.tolerance,
            max_iterations: cfg.max_iterations,
            achieved_iterations: iterations,
            converged,
            final_gradient_norm: gnorm,
            loss_history: history,
        },
    })
}

/// `p = σ(w·x + b)`; `RB` iff `p ≥ 0.5`.
pub fn predict_logreg(params: &LogRegParams, x: &SparseVec) -> LogRegPrediction {
    assert!(
        x.max_index().is_none_or(|m| m < params.weights.len()),
        "feature index out of range for this model"
    );
    let probability = sigmoid(x.dot(&params.weights) + params.bias);
    let label = if probability >= 0.5 { Label::Rb } else { Label::NonRb };
    LogRegPrediction { label, probability }
}
