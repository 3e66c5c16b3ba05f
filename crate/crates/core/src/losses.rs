//! Loss kernels used by the detector and layout-model training recipes,
//! with analytic gradients as first-class outputs.
//!
//! No autodiff dependency is assumed: every gradient here is closed-form and
//! the test suite checks it against central finite differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bbox_iou, BBox};

/// Focal loss parameters.
///
/// `gamma = 0` with uniform `alpha` reduces focal loss to plain
/// cross-entropy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FocalParams {
    /// Focusing exponent, >= 0.
    pub gamma: f64,
    /// Per-class weights, entries in (0, 1]. Empty means uniform 1.0.
    pub alpha: Vec<f64>,
}

impl Default for FocalParams {
    fn default() -> Self {
        FocalParams { gamma: 2.0, alpha: Vec::new() }
    }
}

impl FocalParams {
    fn validate(&self, n_classes: usize) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !self.alpha.is_empty() && self.alpha.len() != n_classes {
            return Err(Error::InvalidParams(format!(
                "alpha has {} entries for {} classes",
                self.alpha.len(),
                n_classes
            )));
        }
        if self.alpha.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::InvalidParams("alpha entries must lie in (0, 1]".to_string()));
        }
        Ok(())
    }

    fn weight(&self, class: usize) -> f64 {
        if self.alpha.is_empty() {
            1.0
        } else {
            self.alpha[class]
        }
    }
}

/// Loss value plus its gradient with respect to the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Numerically stable log-softmax via max subtraction.
fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - max - log_sum).collect()
}

/// Softmax over logits.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).iter().map(|&lp| lp.exp()).collect()
}

fn check_target(logits: &[f64], target: usize) -> Result<()> {
    if target >= logits.len() {
        return Err(Error::IndexOutOfRange { index: target, len: logits.len() });
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParams("logits must be finite".to_string()));
    }
    Ok(())
}

/// `-log softmax(logits)[target]`, with gradient `softmax - onehot`.
pub fn cross_entropy(logits: &[f64], target: usize) -> Result<LossValue> {
    check_target(logits, target)?;
    let log_probs = log_softmax(logits);
    let loss = -log_probs[target];
    let grad = log_probs
        .iter()
        .enumerate()
        .map(|(j, &lp)| lp.exp() - if j == target { 1.0 } else { 0.0 })
        .collect();
    Ok(LossValue { loss, grad })
}

/// Focal loss `alpha_t * (1 - p_t)^gamma * (-log p_t)` over softmax
/// probabilities. Down-weights well-classified examples so training
/// concentrates on the hard ones.
pub fn focal_loss(logits: &[f64], target: usize, params: &FocalParams) -> Result<LossValue> {
    check_target(logits, target)?;
    params.validate(logits.len())?;

    let log_probs = log_softmax(logits);
    let probs: Vec<f64> = log_probs.iter().map(|&lp| lp.exp()).collect();
    let p_t = probs[target];
    let one_minus = 1.0 - p_t;
    let alpha_t = params.weight(target);
    let gamma = params.gamma;

    // (1 - p_t)^gamma with the gamma = 0 case kept exact so the
    // cross-entropy reduction holds to machine precision.
    let focal_factor = if gamma == 0.0 { 1.0 } else { one_minus.powf(gamma) };
    let loss = alpha_t * focal_factor * (-log_probs[target]);

    // dL/dp_t, then chain through dp_t/dz_j = p_t * (delta_tj - p_j).
    let dl_dpt = if gamma == 0.0 {
        -alpha_t / p_t
    } else if one_minus == 0.0 {
        // p_t -> 1 limit: both the loss and its derivative vanish for gamma > 0.
        0.0
    } else {
        alpha_t
            * (gamma * one_minus.powf(gamma - 1.0) * log_probs[target]
                - focal_factor / p_t)
    };
    let grad = probs
        .iter()
        .enumerate()
        .map(|(j, &p_j)| {
            let delta = if j == target { 1.0 } else { 0.0 };
            dl_dpt * p_t * (delta - p_j)
        })
        .collect();
    Ok(LossValue { loss, grad })
}

/// Smooth L1 (Huber-form) box regression loss, summed over the four
/// coordinates. Per coordinate: `0.5 d^2 / beta` for `|d| < beta`, else
/// `|d| - 0.5 beta`.
pub fn smooth_l1(pred: &[f64; 4], gold: &[f64; 4], beta: f64) -> Result<LossValue> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; 4];
    for i in 0..4 {
        let d = pred[i] - gold[i];
        if d.abs() < beta {
            loss += 0.5 * d * d / beta;
            grad[i] = d / beta;
        } else {
            loss += d.abs() - 0.5 * beta;
            grad[i] = d.signum();
        }
    }
    Ok(LossValue { loss, grad })
}

/// `1 - IoU(pred, gold)`: bounded box regression loss in `[0, 1]`.
pub fn iou_loss(pred: &BBox, gold: &BBox) -> f64 {
    1.0 - bbox_iou(pred, gold)
}

/// FCOS center-ness target for a location strictly inside its gold box:
/// `sqrt((min(l,r)/max(l,r)) * (min(t,b)/max(t,b)))` over the distances to
/// the four sides. 1 at the exact center, approaching 0 at the edges.
pub fn centerness_target(x: f64, y: f64, gold: &BBox) -> Result<f64> {
    let left = x - gold.x_min;
    let right = gold.x_max - x;
    let top = y - gold.y_min;
    let bottom = gold.y_max - y;
    if left <= 0.0 || right <= 0.0 || top <= 0.0 || bottom <= 0.0 {
        return Err(Error::LocationOutsideBox { x, y });
    }
    Ok(((left.min(right) / left.max(right)) * (top.min(bottom) / top.max(bottom))).sqrt())
}
