use rand::Rng;

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Inference,
}

/// Inverted dropout. Returns the output and, in training mode, the per-entry
/// scale (0 or `1/(1-rate)`) needed by the backward pass.
pub fn dropout_apply<R: Rng + ?Sized>(
    h: &Matrix,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Matrix, Option<Matrix>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::contract(format!("dropout rate {rate} outside [0, 1)")));
    }
    if mode == Mode::Inference || rate == 0.0 {
        return Ok((h.clone(), None));
    }
    let keep = 1.0 / (1.0 - rate);
    let mut scale = h.zeros_like();
    for s in scale.as_mut_slice() {
        *s = if rng.random::<f64>() < rate { 0.0 } else { keep };
    }
    let mut out = h.clone();
    for (o, s) in out.as_mut_slice().iter_mut().zip(scale.as_slice()) {
        *o *= s;
    }
    Ok((out, Some(scale)))
}

pub fn dropout_backward(d_out: &Matrix, scale: Option<&Matrix>) -> Matrix {
    match scale {
        None => d_out.clone(),
        Some(s) => {
            let mut d = d_out.clone();
            for (v, k) in d.as_mut_slice().iter_mut().zip(s.as_slice()) {
                *v *= k;
            }
            d
        }
    }
}
