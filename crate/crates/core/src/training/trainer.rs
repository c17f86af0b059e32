use std::fmt;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use super::batching::{make_buckets, pad_batch, Example, PaddedBatch};
use crate::error::{Error, Result};
use crate::model::{Hyperparams, LayerGradients, Network};
use crate::numerics::loss::NON_FINITE_LOGITS;
use crate::numerics::{Mode, RmsPropState};

/// Schedule of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Sequences per update.
    pub batch_size: usize,
    /// Token range covered by one bucket.
    pub bucket_width: usize,
    pub seed: u64,
    /// Candidate fusion weights.
    pub alpha_grid: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 8,
            bucket_width: 50,
            seed: 0,
            alpha_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.bucket_width == 0 {
            return Err(Error::contract("batch size and bucket width must be positive"));
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::contract("alpha grid must be a nonempty subset of [0, 1]"));
        }
        Ok(())
    }
}

/// Mean loss per active position over one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub elapsed_ms: u128,
}

impl fmt::Display for EpochReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{:.6}\t{}", self.epoch, self.mean_loss, self.elapsed_ms)
    }
}

/// Summed loss, active position count, and gradients averaged over active positions.
pub fn batch_gradients<R: Rng + ?Sized>(
    net: &Network,
    batch: &PaddedBatch,
    class_weights: &[f64; 2],
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, usize, LayerGradients)> {
    let mut grads = LayerGradients::zeros_for(net);
    let mut loss = 0.0;
    let mut active = 0;
    for (i, input) in batch.inputs.iter().enumerate() {
        let n = batch.active_len(i);
        if n == 0 {
            continue;
        }
        let (l, g) = net.loss_and_gradients(input, &batch.labels[i], n, class_weights, mode, rng)?;
        loss += l;
        active += n;
        grads.accumulate(&g)?;
    }
    if active == 0 {
        return Err(Error::contract("batch has no active positions"));
    }
    grads.scale(1.0 / active as f64);
    Ok((loss, active, grads))
}

fn norms(net: &Network) -> String {
    net.named_tensors()
        .iter()
        .map(|(name, m)| format!("{name}={:.4e}", m.frobenius_norm()))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Trains `net` in place and returns one report per epoch.
///
/// Each epoch draws batches of up to `batch_size` sequences from shuffled
/// buckets, visits the batches in shuffled order, and applies one RMSProp
/// update per batch.
pub fn train_network<R: Rng + ?Sized>(
    net: &mut Network,
    examples: &[Example],
    class_weights: &[f64; 2],
    hyper: &Hyperparams,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<EpochReport>> {
    config.validate()?;
    if examples.iter().any(Example::is_empty) {
        return Err(Error::contract("empty training sequence"));
    }
    let lengths: Vec<usize> = examples.iter().map(Example::len).collect();
    let buckets = make_buckets(&lengths, config.bucket_width)?;
    let mut opt = RmsPropState::new(net.tensors(), hyper.gamma, hyper.eta)?;
    let start = Instant::now();
    let mut reports = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut batches: Vec<Vec<usize>> = Vec::new();
        for bucket in &buckets {
            let mut members = bucket.members.clone();
            members.shuffle(rng);
            batches.extend(members.chunks(config.batch_size).map(<[usize]>::to_vec));
        }
        batches.shuffle(rng);

        let (mut total, mut positions) = (0.0, 0usize);
        for (b, ids) in batches.iter().enumerate() {
            let members: Vec<&Example> = ids.iter().map(|&i| &examples[i]).collect();
            let batch = pad_batch(&members, None)?;
            let outcome = batch_gradients(net, &batch, class_weights, Mode::Train, rng);
            let diverged = match &outcome {
                Ok((loss, ..)) => !loss.is_finite(),
                Err(Error::Contract(msg)) => msg == NON_FINITE_LOGITS,
                Err(_) => false,
            };
            if diverged {
                return Err(Error::NonFinite {
                    epoch,
                    batch: b + 1,
                    norms: norms(net),
                });
            }
            let (loss, active, grads) = outcome?;
            opt.step(net.tensors_mut(), grads.tensors())?;
            if !net.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: b + 1,
                    norms: norms(net),
                });
            }
            total += loss;
            positions += active;
        }
        let report = EpochReport {
            epoch,
            mean_loss: total / positions as f64,
            elapsed_ms: start.elapsed().as_millis(),
        };
        log::debug!("{report}");
        reports.push(report);
    }
    Ok(reports)
}
