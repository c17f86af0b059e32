use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Per-word fused probabilities and the decided labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Fused {
    pub labels: Vec<Label>,
    /// `m × 2`, columns NB, B.
    pub probs: Matrix,
}

impl Fused {
    pub fn boundary_probs(&self) -> Vec<f64> {
        (0..self.probs.rows()).map(|t| self.probs[(t, 1)]).collect()
    }
}

/// B only when its probability strictly exceeds NB's; exact ties go to NB.
pub fn decide(row: &[f64]) -> Label {
    if row[1] > row[0] {
        Label::B
    } else {
        Label::NB
    }
}

/// `α · P_lexical + (1 − α) · P_prosodic`, evaluated as `P_prosodic + α (P_lexical − P_prosodic)`,
/// then argmax per word.
///
/// A missing lexical model requires `α = 0`; a missing prosodic model requires `α = 1`.
pub fn fuse(p_lex: Option<&Matrix>, p_pros: Option<&Matrix>, alpha: f64) -> Result<Fused> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::contract(format!("fusion weight {alpha} outside [0, 1]")));
    }
    let probs = match (p_lex, p_pros) {
        (None, None) => return Err(Error::contract("fusion needs at least one model")),
        (Some(l), None) => {
            if alpha < 1.0 {
                return Err(Error::contract("alpha < 1 requires a prosodic model"));
            }
            l.clone()
        }
        (None, Some(p)) => {
            if alpha > 0.0 {
                return Err(Error::contract("alpha > 0 requires a lexical model"));
            }
            p.clone()
        }
        (Some(l), Some(p)) => {
            if l.shape() != p.shape() || l.cols() != 2 {
                return Err(Error::contract(format!(
                    "fusion of {:?} and {:?} probability matrices",
                    l.shape(),
                    p.shape()
                )));
            }
            let mut out = l.zeros_like();
            for ((o, a), b) in out.as_mut_slice().iter_mut().zip(l.as_slice()).zip(p.as_slice()) {
                *o = if alpha == 1.0 {
                    *a
                } else if alpha == 0.0 {
                    *b
                } else {
                    b + alpha * (a - b)
                };
            }
            out
        }
    };
    let labels = (0..probs.rows()).map(|t| decide(probs.row(t))).collect();
    Ok(Fused { labels, probs })
}
