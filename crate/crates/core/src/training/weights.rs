use crate::corpus::Label;
use crate::error::{Error, Result};

/// Inverse-frequency class weights, `cw_ℓ = |y| / (2·|y = ℓ|)`, indexed by [`Label::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub nb: f64,
    pub b: f64,
}

impl ClassWeights {
    pub fn as_array(self) -> [f64; 2] {
        [self.nb, self.b]
    }
}

pub fn compute_class_weights<'a>(labels: impl IntoIterator<Item = &'a Label>) -> Result<ClassWeights> {
    let (mut n_b, mut n_nb) = (0usize, 0usize);
    for l in labels {
        match l {
            Label::B => n_b += 1,
            Label::NB => n_nb += 1,
        }
    }
    if n_b == 0 || n_nb == 0 {
        return Err(Error::data(format!(
            "degenerate training split: {n_b} boundary and {n_nb} non-boundary labels"
        )));
    }
    let total = (n_b + n_nb) as f64;
    Ok(ClassWeights {
        nb: total / (2.0 * n_nb as f64),
        b: total / (2.0 * n_b as f64),
    })
}
