use super::activation::Activation;
use super::matrix::{axpy, Matrix};
use crate::error::{Error, Result};

/// `activation(Wᵀx + b)` for a single input vector; `W` is `k×j`.
pub fn dense_forward(x: &[f64], w: &Matrix, b: &[f64], activation: Activation) -> Result<Vec<f64>> {
    if w.rows() != x.len() || w.cols() != b.len() {
        return Err(Error::contract(format!(
            "dense_forward: x[{}], W {}x{}, b[{}]",
            x.len(),
            w.rows(),
            w.cols(),
            b.len()
        )));
    }
    let mut out = b.to_vec();
    for (k, &xk) in x.iter().enumerate() {
        axpy(xk, w.row(k), &mut out);
    }
    out.iter_mut().for_each(|z| *z = activation.apply(*z));
    Ok(out)
}

/// Fully connected layer applied independently at every timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `inputs × outputs`
    pub weight: Matrix,
    /// `1 × outputs`
    pub bias: Matrix,
    pub activation: Activation,
}

impl Dense {
    pub const TENSOR_NAMES: [&'static str; 2] = ["weight", "bias"];

    pub fn new(weight: Matrix, bias: Matrix, activation: Activation) -> Result<Self> {
        if bias.rows() != 1 || bias.cols() != weight.cols() {
            return Err(Error::contract("dense bias must be 1 x outputs"));
        }
        Ok(Dense {
            weight,
            bias,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.cols()
    }

    /// Rows of `x` are timesteps.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = x.matmul(&self.weight)?;
        let bias = self.bias.as_slice();
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        Ok(z)
    }

    /// Accumulates parameter gradients into `grads` and returns the input gradient.
    ///
    /// `d_out` is the gradient w.r.t. the activation output; pass `pre_activation = true`
    /// when it is already w.r.t. the pre-activation (used by the softmax head).
    pub fn backward(
        &self,
        x: &Matrix,
        y: &Matrix,
        d_out: &Matrix,
        pre_activation: bool,
        grads: &mut Dense,
    ) -> Result<Matrix> {
        let mut dz = d_out.clone();
        if !pre_activation {
            for (d, &yv) in dz.as_mut_slice().iter_mut().zip(y.as_slice()) {
                *d *= self.activation.derivative_from_output(yv);
            }
        }
        grads.weight.add_assign(&x.t_matmul(&dz)?)?;
        let gb = grads.bias.as_mut_slice();
        for r in 0..dz.rows() {
            axpy(1.0, dz.row(r), gb);
        }
        dz.matmul_t(&self.weight)
    }

    pub fn zeros_like(&self) -> Dense {
        Dense {
            weight: self.weight.zeros_like(),
            bias: self.bias.zeros_like(),
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
