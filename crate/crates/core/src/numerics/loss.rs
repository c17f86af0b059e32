use super::matrix::Matrix;
use crate::error::{Error, Result};

pub(crate) const NON_FINITE_LOGITS: &str = "softmax input is not finite";

/// Probabilities below this are clamped before taking the log.
pub const LOG_CLAMP: f64 = 1e-12;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.len() < 2 {
        return Err(Error::contract("softmax needs at least two classes"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract(NON_FINITE_LOGITS));
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Row-wise softmax.
pub fn softmax_rows(z: &Matrix) -> Result<Matrix> {
    let mut out = z.zeros_like();
    for r in 0..z.rows() {
        out.row_mut(r).copy_from_slice(&softmax(z.row(r))?);
    }
    Ok(out)
}

/// Class-weighted cross-entropy over active positions.
///
/// `y_true` holds one-hot rows, `y_pred` softmax probabilities, `class_weights[c]`
/// the weight of class `c`. Returns the summed loss and its gradient with respect
/// to the pre-softmax logits, `cw_y · (ŷ - y)` at active rows and zero elsewhere.
pub fn weighted_cross_entropy(
    y_true: &Matrix,
    y_pred: &Matrix,
    class_weights: &[f64],
    mask: &[bool],
) -> Result<(f64, Matrix)> {
    let (m, k) = y_true.shape();
    if y_pred.shape() != (m, k) || mask.len() != m || class_weights.len() != k {
        return Err(Error::contract(format!(
            "weighted_cross_entropy: y_true {:?}, y_pred {:?}, mask {}, weights {}",
            y_true.shape(),
            y_pred.shape(),
            mask.len(),
            class_weights.len()
        )));
    }
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(m, k);
    for t in (0..m).filter(|&t| mask[t]) {
        let truth = y_true.row(t);
        let pred = y_pred.row(t);
        let Some(label) = truth.iter().position(|&v| v == 1.0) else {
            return Err(Error::contract(format!("row {t} of y_true is not one-hot")));
        };
        let cw = class_weights[label];
        loss -= cw * pred[label].max(LOG_CLAMP).ln();
        for (g, (p, y)) in grad.row_mut(t).iter_mut().zip(pred.iter().zip(truth)) {
            *g = cw * (p - y);
        }
    }
    Ok((loss, grad))
}
