use super::{dot, Dataset, LrParams};
use crate::corpus::CategoryLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> CategoryLabel {
        if self.probability(x) >= 0.5 {
            CategoryLabel::High
        } else {
            CategoryLabel::Low
        }
    }
}

/// Result of gradient descent, with the loss after every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub model: LogisticModel,
    /// Starts with the loss at `w = 0, b = 0`.
    pub loss_history: Vec<f64>,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn target(label: CategoryLabel) -> f64 {
    match label {
        CategoryLabel::High => 1.0,
        CategoryLabel::Low => 0.0,
    }
}

/// Mean log-loss plus `lambda * |w|^2`, with its gradient in `w` and `b`.
pub fn logistic_objective(data: &Dataset, w: &[f64], b: f64, lambda: f64) -> (f64, Vec<f64>, f64) {
    let n = data.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, label) in data.rows().iter().zip(data.labels()) {
        let x = row.values();
        let y = target(*label);
        let z = dot(w, x) + b;
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        gw.iter_mut().zip(x).for_each(|(g, xi)| *g += r * xi);
        gb += r;
    }
    let penalty: f64 = w.iter().map(|v| v * v).sum();
    gw.iter_mut()
        .zip(w)
        .for_each(|(g, wi)| *g = *g / n + 2.0 * lambda * wi);
    (loss / n + lambda * penalty, gw, gb / n)
}

/// Full-batch gradient descent from zero. A step that would raise the loss
/// is rejected and the learning rate halved, so accepted losses never increase.
pub(super) fn fit(data: &Dataset, params: &LrParams) -> Result<LogisticFit> {
    let mut w = vec![0.0; data.dim()];
    let mut b = 0.0;
    let mut lr = params.learning_rate;
    let (mut loss, mut gw, mut gb) = logistic_objective(data, &w, b, params.lambda);
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            algorithm: "logistic_regression",
            iteration: 0,
        });
    }
    let mut history = vec![loss];
    let mut converged = false;
    for iteration in 1..=params.max_iters {
        let grad_norm = gw.iter().fold(gb.abs(), |m, g| m.max(g.abs()));
        if grad_norm < params.tol {
            converged = true;
            break;
        }
        let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - lr * g).collect();
        let cand_b = b - lr * gb;
        let (cand_loss, cand_gw, cand_gb) =
            logistic_objective(data, &cand_w, cand_b, params.lambda);
        if !cand_loss.is_finite() || cand_w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                algorithm: "logistic_regression",
                iteration,
            });
        }
        if cand_loss > loss {
            lr /= 2.0;
            continue;
        }
        (w, b, loss, gw, gb) = (cand_w, cand_b, cand_loss, cand_gw, cand_gb);
        history.push(loss);
    }
    Ok(LogisticFit {
        model: LogisticModel {
            weights: w,
            bias: b,
        },
        loss_history: history,
        converged,
    })
}
