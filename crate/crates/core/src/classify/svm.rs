//! Linear SVM trained by batch Pegasos subgradient steps.
//!
//! Objective: `lambda/2 * (|w|^2 + b^2) + mean(max(0, 1 - y (w.x + b)))`
//! with `y = +1` for `"34"`. The bias is an implicit constant feature and is
//! regularized with `w`. Each epoch is one step of size `1 / (lambda t)` along
//! the subgradient over the whole training set, followed by projection onto
//! the ball of radius `1 / sqrt(lambda)`. Examples are visited in a seeded
//! shuffled order per epoch.

use rand::seq::SliceRandom;

use super::{dot, Dataset, SvmParams};
use crate::corpus::CategoryLabel;
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> CategoryLabel {
        if self.decision(x) >= 0.0 {
            CategoryLabel::High
        } else {
            CategoryLabel::Low
        }
    }
}

fn sign(label: CategoryLabel) -> f64 {
    match label {
        CategoryLabel::High => 1.0,
        CategoryLabel::Low => -1.0,
    }
}

pub(super) fn fit(data: &Dataset, params: &SvmParams, seed: u64) -> Result<LinearSvm> {
    let n = data.len();
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; data.dim()];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad_w = vec![0.0; data.dim()];
    for epoch in 1..=params.epochs {
        order.shuffle(&mut substream(seed, Domain::SvmEpoch, epoch as u64));
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for &i in &order {
            let x = data.rows()[i].values();
            let y = sign(data.labels()[i]);
            if y * (dot(&w, x) + b) < 1.0 {
                grad_w.iter_mut().zip(x).for_each(|(g, xi)| *g += y * xi);
                grad_b += y;
            }
        }
        let eta = 1.0 / (lambda * epoch as f64);
        let shrink = 1.0 - eta * lambda;
        let step = eta / n as f64;
        w.iter_mut()
            .zip(&grad_w)
            .for_each(|(wi, g)| *wi = shrink * *wi + step * g);
        b = shrink * b + step * grad_b;

        let norm = (w.iter().map(|v| v * v).sum::<f64>() + b * b).sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite {
                algorithm: "linear_svm",
                iteration: epoch,
            });
        }
        if norm > radius {
            let s = radius / norm;
            w.iter_mut().for_each(|v| *v *= s);
            b *= s;
        }
    }
    Ok(LinearSvm {
        weights: w,
        bias: b,
    })
}
