//! Same-length 1-D convolution and max-pooling over the time axis.
//!
//! Both layers take an `m × features` matrix whose rows are timesteps and
//! always return exactly `m` rows.

use super::activation::Activation;
use super::matrix::{axpy, dot, Matrix};
use crate::error::{Error, Result};

/// Convolution over time with `⌊width/2⌋` zero rows on each side.
///
/// Output row `j` sees input rows `j - p ..= j - p + width - 1` where `p = ⌊width/2⌋`;
/// rows outside `[0, m)` are the zero padding. For even widths the surplus
/// trailing window is dropped so the output keeps `m` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// `filters × (width · input_dim)`; row `f` is the flattened window, oldest row first.
    pub weight: Matrix,
    /// `1 × filters`
    pub bias: Matrix,
    pub width: usize,
    pub activation: Activation,
}

impl Conv1d {
    pub const TENSOR_NAMES: [&'static str; 2] = ["weight", "bias"];

    pub fn new(weight: Matrix, bias: Matrix, width: usize, activation: Activation) -> Result<Self> {
        if width == 0 {
            return Err(Error::contract("convolution width must be at least 1"));
        }
        if weight.cols() % width != 0 {
            return Err(Error::contract(format!(
                "filter length {} is not a multiple of the window width {width}",
                weight.cols()
            )));
        }
        if bias.rows() != 1 || bias.cols() != weight.rows() {
            return Err(Error::contract("convolution bias must be 1 x filters"));
        }
        Ok(Conv1d {
            weight,
            bias,
            width,
            activation,
        })
    }

    pub fn filters(&self) -> usize {
        self.weight.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols() / self.width
    }

    pub fn padding(&self) -> usize {
        self.width / 2
    }

    /// Input row feeding window slot `k` of output row `j`, if it is not padding.
    #[inline]
    fn source_row(&self, j: usize, k: usize, m: usize) -> Option<usize> {
        let src = (j + k).checked_sub(self.padding())?;
        (src < m).then_some(src)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let d = self.input_dim();
        if x.cols() != d {
            return Err(Error::contract(format!(
                "convolution expects {d} input features, got {}",
                x.cols()
            )));
        }
        let m = x.rows();
        let n_f = self.filters();
        let bias = self.bias.as_slice();
        let mut out = Matrix::zeros(m, n_f);
        for j in 0..m {
            let o = out.row_mut(j);
            o.copy_from_slice(bias);
            for k in 0..self.width {
                let Some(src) = self.source_row(j, k, m) else {
                    continue;
                };
                let xr = x.row(src);
                for (f, of) in o.iter_mut().enumerate() {
                    *of += dot(&self.weight.row(f)[k * d..(k + 1) * d], xr);
                }
            }
            o.iter_mut().for_each(|v| *v = self.activation.apply(*v));
        }
        Ok(out)
    }

    /// Accumulates into `grads`; returns the gradient w.r.t. `x`.
    pub fn backward(&self, x: &Matrix, y: &Matrix, d_out: &Matrix, grads: &mut Conv1d) -> Result<Matrix> {
        let d = self.input_dim();
        let m = x.rows();
        let mut dx = Matrix::zeros(m, d);
        for j in 0..m {
            for f in 0..self.filters() {
                let dz = d_out[(j, f)] * self.activation.derivative_from_output(y[(j, f)]);
                if dz == 0.0 {
                    continue;
                }
                grads.bias.as_mut_slice()[f] += dz;
                for k in 0..self.width {
                    let Some(src) = self.source_row(j, k, m) else {
                        continue;
                    };
                    axpy(dz, x.row(src), &mut grads.weight.row_mut(f)[k * d..(k + 1) * d]);
                    axpy(dz, &self.weight.row(f)[k * d..(k + 1) * d], dx.row_mut(src));
                }
            }
        }
        Ok(dx)
    }

    pub fn zeros_like(&self) -> Conv1d {
        Conv1d {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
            width: self.width,
            activation: self.activation,
        }
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        vec![&self.weight, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Free-function form of [`Conv1d::forward`].
pub fn conv1d_same_forward(
    x: &Matrix,
    filters: &Matrix,
    bias: &[f64],
    width: usize,
    activation: Activation,
) -> Result<Matrix> {
    Conv1d::new(filters.clone(), Matrix::row_vector(bias), width, activation)?.forward(x)
}

/// Result of [`maxpool1d_same`]: pooled values and, per entry, the input row that won.
#[derive(Debug, Clone)]
pub struct Pooled {
    pub output: Matrix,
    pub argmax: Vec<usize>,
}

/// Stride-1 max-pooling with centred windows clipped to the sequence.
///
/// Row `j` takes the column-wise max over rows `j - ⌊w/2⌋ ..= j + ⌈w/2⌉ - 1`.
/// Ties resolve to the earliest row.
pub fn maxpool1d_same(c: &Matrix, window: usize) -> Result<Pooled> {
    if window == 0 {
        return Err(Error::contract("pool window must be at least 1"));
    }
    let (m, n) = c.shape();
    let before = window / 2;
    let after = window - before; // exclusive upper offset
    let mut output = Matrix::zeros(m, n);
    let mut argmax = vec![0; m * n];
    for j in 0..m {
        let lo = j.saturating_sub(before);
        let hi = (j + after).min(m);
        for col in 0..n {
            let mut best = lo;
            for r in lo + 1..hi {
                if c[(r, col)] > c[(best, col)] {
                    best = r;
                }
            }
            output[(j, col)] = c[(best, col)];
            argmax[j * n + col] = best;
        }
    }
    Ok(Pooled { output, argmax })
}

/// Routes each pooled gradient to the row that produced the max.
pub fn maxpool1d_backward(pooled: &Pooled, d_out: &Matrix) -> Matrix {
    let (m, n) = d_out.shape();
    let mut dc = Matrix::zeros(m, n);
    for j in 0..m {
        for col in 0..n {
            dc[(pooled.argmax[j * n + col], col)] += d_out[(j, col)];
        }
    }
    dc
}
