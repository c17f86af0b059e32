use super::matrix::Matrix;
use crate::error::{Error, Result};

pub const RMSPROP_EPSILON: f64 = 1e-8;

/// RMSProp state: one squared-gradient accumulator per parameter tensor.
///
/// `r ← γ r + (1-γ) g²`, then `θ ← θ - η g / (√r + ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub accumulators: Vec<Matrix>,
    pub gamma: f64,
    pub eta: f64,
    pub epsilon: f64,
}

impl RmsPropState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Matrix>, gamma: f64, eta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::contract(format!("forgetting factor {gamma} outside (0, 1)")));
        }
        if !(eta > 0.0) {
            return Err(Error::contract(format!("learning rate {eta} must be positive")));
        }
        Ok(RmsPropState {
            accumulators: params.into_iter().map(Matrix::zeros_like).collect(),
            gamma,
            eta,
            epsilon: RMSPROP_EPSILON,
        })
    }

    /// Updates every tensor in place. Tensors are matched by position.
    pub fn step(&mut self, params: Vec<&mut Matrix>, grads: Vec<&Matrix>) -> Result<()> {
        if params.len() != self.accumulators.len() || grads.len() != params.len() {
            return Err(Error::contract(format!(
                "rmsprop: {} params, {} grads, {} accumulators",
                params.len(),
                grads.len(),
                self.accumulators.len()
            )));
        }
        for ((p, g), r) in params.into_iter().zip(grads).zip(&mut self.accumulators) {
            p.check_same_shape(g, "rmsprop")?;
            p.check_same_shape(r, "rmsprop")?;
            rmsprop_update(
                p.as_mut_slice(),
                g.as_slice(),
                r.as_mut_slice(),
                self.gamma,
                self.eta,
                self.epsilon,
            );
        }
        Ok(())
    }
}

/// Elementwise RMSProp kernel.
pub fn rmsprop_update(theta: &mut [f64], grad: &[f64], r: &mut [f64], gamma: f64, eta: f64, epsilon: f64) {
    for ((t, &g), rv) in theta.iter_mut().zip(grad).zip(r.iter_mut()) {
        *rv = gamma * *rv + (1.0 - gamma) * g * g;
        *t -= eta * g / (rv.sqrt() + epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_substitution() {
        let (mut theta, mut r) = ([1.0], [0.0]);
        rmsprop_update(&mut theta, &[2.0], &mut r, 0.9, 0.001, 1e-8);
        assert!((r[0] - 0.4).abs() < 1e-15);
        let expected = 1.0 - 0.001 * 2.0 / (0.4f64.sqrt() + 1e-8);
        assert!((theta[0] - expected).abs() < 1e-15);
        assert!((theta[0] - 0.996838).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_decays_accumulator_only() {
        let (mut theta, mut r) = ([3.0], [0.5]);
        rmsprop_update(&mut theta, &[0.0], &mut r, 0.9, 0.001, 1e-8);
        assert_eq!(theta[0], 3.0);
        assert!((r[0] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn two_unit_gradient_steps() {
        let (mut theta, mut r) = ([0.0], [0.0]);
        rmsprop_update(&mut theta, &[1.0], &mut r, 0.9, 0.001, 1e-8);
        rmsprop_update(&mut theta, &[1.0], &mut r, 0.9, 0.001, 1e-8);
        assert!((r[0] - 0.19).abs() < 1e-15);
    }

    #[test]
    fn state_rejects_bad_hyperparameters() {
        let m = Matrix::zeros(1, 1);
        assert!(RmsPropState::new([&m], 1.0, 0.001).is_err());
        assert!(RmsPropState::new([&m], 0.9, 0.0).is_err());
    }
}
