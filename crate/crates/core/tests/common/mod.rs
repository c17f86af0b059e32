//! Finite-difference gradient checking shared by the integration tests.
#![allow(dead_code)]

use boundseg::corpus::Label;
use boundseg::model::{Hyperparams, InputLayer, Network, SequenceInput, Variant};
use boundseg::numerics::{glorot_init, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

pub fn tiny_hyper() -> Hyperparams {
    Hyperparams {
        word_dim: 4,
        tag_dim: 2,
        filters: 4,
        filter_len: 3,
        pool_size: 3,
        recurrent_units: 5,
        mlp_hidden: 5,
        ..Hyperparams::lexical()
    }
}

pub fn labels(m: usize, rng: &mut ChaCha8Rng) -> Vec<Label> {
    let mut l: Vec<Label> = (0..m)
        .map(|_| if rng.random::<f64>() < 0.3 { Label::B } else { Label::NB })
        .collect();
    l[m - 1] = Label::B;
    l[0] = Label::NB;
    l
}

fn loss(net: &Network, input: &SequenceInput, y: &[Label], cw: &[f64; 2], mode: Mode, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    net.loss_and_gradients(input, y, y.len(), cw, mode, &mut rng).unwrap().0
}

/// Returns the worst relative error over all parameters and the number checked.
pub fn check(net: &mut Network, input: &SequenceInput, y: &[Label], mode: Mode) -> (f64, usize, String) {
    let cw = [0.6, 2.5];
    let dropout_seed = 99;
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let (_, grads) = net.loss_and_gradients(input, y, y.len(), &cw, mode, &mut rng).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = grads
        .named_tensors()
        .into_iter()
        .map(|(n, m)| (n, m.as_slice().to_vec()))
        .collect();

    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut checked = 0;
    for (k, (name, grad)) in analytic.iter().enumerate() {
        for j in 0..grad.len() {
            let original = net.tensors_mut()[k].as_slice()[j];
            net.tensors_mut()[k].as_mut_slice()[j] = original + STEP;
            let plus = loss(net, input, y, &cw, mode, dropout_seed);
            net.tensors_mut()[k].as_mut_slice()[j] = original - STEP;
            let minus = loss(net, input, y, &cw, mode, dropout_seed);
            net.tensors_mut()[k].as_mut_slice()[j] = original;
            let fd = (plus - minus) / (2.0 * STEP);
            let a = grad[j];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
            if rel > worst {
                worst = rel;
                worst_at = format!("{name}[{j}] analytic {a:e} fd {fd:e}");
            }
            checked += 1;
        }
    }
    (worst, checked, worst_at)
}

pub fn lexical_case(variant: Variant, seed: u64) -> (Network, SequenceInput, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = tiny_hyper();
    let words = glorot_init(7, h.word_dim, &mut rng);
    let tags = glorot_init(4, h.tag_dim, &mut rng);
    let input_layer = InputLayer::Embeddings {
        words: Some(words),
        tags: Some(tags),
    };
    let net = Network::new(variant, input_layer, &h, &mut rng).unwrap();
    let m = 9;
    // word row 5 is never used, so its gradient must stay zero
    let word_ids = (0..m).map(|t| [0, 1, 2, 3, 4, 6][t % 6]).collect();
    let tag_ids = (0..m).map(|_| rng.random_range(0..4)).collect();
    let y = labels(m, &mut rng);
    (
        net,
        SequenceInput::Tokens {
            words: word_ids,
            tags: tag_ids,
        },
        y,
    )
}
