use std::ops::{Add, AddAssign};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Boundary-class confusion counts. NB hits are never scored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn from_labels(gold: &[Label], pred: &[Label]) -> Result<Self> {
        if gold.len() != pred.len() {
            return Err(Error::contract(format!(
                "{} gold labels against {} predictions",
                gold.len(),
                pred.len()
            )));
        }
        let mut c = Counts::default();
        for (g, p) in gold.iter().zip(pred) {
            match (g, p) {
                (Label::B, Label::B) => c.tp += 1,
                (Label::NB, Label::B) => c.fp += 1,
                (Label::B, Label::NB) => c.fn_ += 1,
                (Label::NB, Label::NB) => {}
            }
        }
        Ok(c)
    }

    /// Zero when nothing was predicted as B.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// Zero when the gold standard has no B.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), Add::add)
    }
}

/// Boundary-class precision, recall and F1.
pub fn prf_boundary(gold: &[Label], pred: &[Label]) -> Result<Counts> {
    Counts::from_labels(gold, pred)
}

/// Scores the classifier that labels every word B.
pub fn all_boundary_baseline(gold: &[Label]) -> Result<Counts> {
    if gold.is_empty() {
        return Err(Error::contract("baseline of an empty label sequence"));
    }
    Counts::from_labels(gold, &vec![Label::B; gold.len()])
}
