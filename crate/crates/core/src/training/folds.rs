use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::LabeledText;
use crate::error::{Error, Result};

/// Assignment of text ids to `k` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignments.get(id).copied()
    }

    /// `(train, test)` texts of fold `fold`, in corpus order.
    pub fn split<'a>(&self, texts: &'a [LabeledText], fold: usize) -> (Vec<&'a LabeledText>, Vec<&'a LabeledText>) {
        texts.iter().partition(|t| self.fold_of(&t.id) != Some(fold))
    }
}

/// Shuffles ids with `seed`, then deals them round-robin into `k` folds.
pub fn kfold_split<'a>(ids: impl IntoIterator<Item = &'a str>, k: usize, seed: u64) -> Result<FoldPlan> {
    let mut ids: Vec<&str> = ids.into_iter().collect();
    if k < 2 {
        return Err(Error::contract("cross-validation needs at least 2 folds"));
    }
    if ids.len() < k {
        return Err(Error::data(format!("{} texts cannot fill {k} folds", ids.len())));
    }
    ids.sort_unstable();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignments = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), i % k))
        .collect();
    Ok(FoldPlan { k, assignments })
}
