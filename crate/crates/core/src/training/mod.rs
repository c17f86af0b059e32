//! Class weights, bucketing, the epoch loop, fusion-weight tuning and fold plans.

mod batching;
mod folds;
mod trainer;
mod weights;

pub use batching::{make_buckets, pad_batch, Bucket, Example, PaddedBatch};
pub use folds::{kfold_split, FoldPlan};
pub use trainer::{batch_gradients, train_network, EpochReport, TrainConfig};
pub use weights::{compute_class_weights, ClassWeights};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Group, Label, LabeledText, PROSODY_DIM, TAGSET};
use crate::error::{Error, Result};
use crate::evaluation::Counts;
use crate::features::{fit_prosody_stats, EmbeddingTable, Vocab};
use crate::model::{
    FeatureSet, Hyperparams, InputLayer, LexicalModel, ModelOutputs, Network, ProsodicModel, TrainedSegmenter,
    Variant,
};

const LEXICAL_STREAM: u64 = 1;
const PROSODIC_STREAM: u64 = 2;
const FOLD_STREAM_BASE: u64 = 1 << 32;

/// Independent random stream `stream` of the master `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of cross-validation fold `fold`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    rng_stream(seed, FOLD_STREAM_BASE + fold as u64).next_u64()
}

/// Everything needed to train a segmenter.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmenterConfig {
    pub variant: Variant,
    pub features: FeatureSet,
    pub lexical: Hyperparams,
    pub prosodic: Hyperparams,
    pub train: TrainConfig,
    /// Fixed fusion weight. `None` tunes it on the training texts.
    pub alpha: Option<f64>,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            variant: Variant::Rcnn,
            features: FeatureSet::ALL,
            lexical: Hyperparams::lexical(),
            prosodic: Hyperparams::prosodic(),
            train: TrainConfig::default(),
            alpha: None,
        }
    }
}

/// A trained segmenter with the loss trace of each network.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub segmenter: TrainedSegmenter,
    pub lexical_log: Vec<EpochReport>,
    pub prosodic_log: Vec<EpochReport>,
}

fn labels_of<'a>(texts: &'a [&LabeledText]) -> impl Iterator<Item = &'a Label> {
    texts.iter().flat_map(|t| t.labels.iter())
}

fn train_lexical(
    texts: &[&LabeledText],
    embeddings: Option<&EmbeddingTable>,
    cfg: &SegmenterConfig,
) -> Result<(LexicalModel, Vec<EpochReport>)> {
    let mut rng = rng_stream(cfg.train.seed, LEXICAL_STREAM);
    let mut hyper = cfg.lexical.clone();
    let words = cfg.features.embeddings.then(|| match embeddings {
        Some(table) => table.clone(),
        None => {
            let vocab = Vocab::from_tokens(texts.iter().flat_map(|t| t.tokens.iter().map(String::as_str)));
            EmbeddingTable::glorot(vocab, hyper.word_dim, &mut rng)
        }
    });
    let tags = cfg.features.pos.then(|| {
        let seen = texts.iter().flat_map(|t| t.pos_tags.iter().map(String::as_str));
        EmbeddingTable::glorot(Vocab::from_tokens(TAGSET.into_iter().chain(seen)), hyper.tag_dim, &mut rng)
    });
    hyper.word_dim = words.as_ref().map_or(0, EmbeddingTable::dim);
    hyper.tag_dim = tags.as_ref().map_or(0, EmbeddingTable::dim);

    let input = InputLayer::Embeddings {
        words: words.as_ref().map(|t| t.vectors.clone()),
        tags: tags.as_ref().map(|t| t.vectors.clone()),
    };
    let net = Network::new(cfg.variant, input, &hyper, &mut rng)?;
    let mut model = LexicalModel {
        net,
        hyper,
        words: words.map(|t| t.vocab),
        tags: tags.map(|t| t.vocab),
    };
    let examples: Vec<Example> = texts
        .iter()
        .map(|t| Example {
            input: model.input(t),
            labels: t.labels.clone(),
        })
        .collect();
    let cw = compute_class_weights(labels_of(texts))?.as_array();
    let log = train_network(&mut model.net, &examples, &cw, &model.hyper, &cfg.train, &mut rng)?;
    Ok((model, log))
}

fn train_prosodic(texts: &[&LabeledText], cfg: &SegmenterConfig) -> Result<(ProsodicModel, Vec<EpochReport>)> {
    let mut rng = rng_stream(cfg.train.seed, PROSODIC_STREAM);
    let stats = fit_prosody_stats(texts.iter().copied())?;
    let net = Network::new(cfg.variant, InputLayer::Features { dim: PROSODY_DIM }, &cfg.prosodic, &mut rng)?;
    let mut model = ProsodicModel {
        net,
        hyper: cfg.prosodic.clone(),
        stats,
    };
    let examples = texts
        .iter()
        .map(|t| {
            Ok(Example {
                input: model.input(t)?,
                labels: t.labels.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cw = compute_class_weights(labels_of(texts))?.as_array();
    let log = train_network(&mut model.net, &examples, &cw, &model.hyper, &cfg.train, &mut rng)?;
    Ok((model, log))
}

/// Texts the prosodic network may train on: everything except AD narratives.
pub fn prosodic_training_texts<'a>(texts: &[&'a LabeledText]) -> Vec<&'a LabeledText> {
    texts.iter().copied().filter(|t| t.group != Group::Ad).collect()
}

/// Requires prosody on every text when the feature set uses it.
pub fn check_feature_support<'a>(
    features: FeatureSet,
    texts: impl IntoIterator<Item = &'a LabeledText>,
) -> Result<()> {
    if features.prosody {
        if let Some(t) = texts.into_iter().find(|t| !t.has_prosody()) {
            return Err(Error::Unsupported(format!(
                "feature set {features} needs prosody, but text {:?} has none",
                t.id
            )));
        }
    }
    Ok(())
}

/// Trains the networks selected by `cfg.features` on `texts`.
///
/// `embeddings` initializes the word table; without it the table is drawn at
/// random over the training vocabulary. AD narratives train only the lexical
/// network.
pub fn train_segmenter(
    texts: &[&LabeledText],
    embeddings: Option<&EmbeddingTable>,
    cfg: &SegmenterConfig,
) -> Result<TrainingRun> {
    cfg.train.validate()?;
    if texts.is_empty() {
        return Err(Error::data("no training texts"));
    }
    check_feature_support(cfg.features, texts.iter().copied())?;

    let (lexical, lexical_log) = match cfg.features.lexical() {
        true => {
            let (m, log) = train_lexical(texts, embeddings, cfg)?;
            (Some(m), log)
        }
        false => (None, Vec::new()),
    };
    let (prosodic, prosodic_log) = match cfg.features.prosody {
        true => {
            let subset = prosodic_training_texts(texts);
            if subset.is_empty() {
                return Err(Error::data("no non-AD texts to train the prosodic model"));
            }
            let (m, log) = train_prosodic(&subset, cfg)?;
            (Some(m), log)
        }
        false => (None, Vec::new()),
    };

    let mut segmenter = TrainedSegmenter {
        variant: cfg.variant,
        features: cfg.features,
        lexical,
        prosodic,
        alpha: default_alpha(cfg.features),
    };
    if segmenter.lexical.is_some() && segmenter.prosodic.is_some() {
        segmenter.alpha = match cfg.alpha {
            Some(a) => a,
            None => tune_alpha(&segmenter, &prosodic_training_texts(texts), &cfg.train.alpha_grid)?,
        };
    }
    segmenter.validate()?;
    Ok(TrainingRun {
        segmenter,
        lexical_log,
        prosodic_log,
    })
}

/// The only valid fusion weight when a single network is trained; 1 otherwise.
pub fn default_alpha(features: FeatureSet) -> f64 {
    if features.lexical() {
        1.0
    } else {
        0.0
    }
}

/// Grid weight with the highest pooled boundary F1 over `outputs`; ties go to the larger weight.
pub fn select_alpha(outputs: &[(ModelOutputs, &[Label])], grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::contract("empty alpha grid"));
    }
    let mut best: Option<(f64, f64)> = None;
    for &alpha in grid {
        let mut counts = Counts::default();
        for (out, gold) in outputs {
            counts += Counts::from_labels(gold, &out.fuse(alpha)?.labels)?;
        }
        let f1 = counts.f1();
        let better = match best {
            None => true,
            Some((bf, ba)) => f1 > bf || (f1 == bf && alpha > ba),
        };
        if better {
            best = Some((f1, alpha));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}

/// Fusion weight of `segmenter` that maximizes boundary F1 on `texts`.
pub fn tune_alpha(segmenter: &TrainedSegmenter, texts: &[&LabeledText], grid: &[f64]) -> Result<f64> {
    if segmenter.lexical.is_none() || segmenter.prosodic.is_none() {
        return Err(Error::contract("alpha tuning needs both networks"));
    }
    let outputs = texts
        .iter()
        .map(|t| Ok((segmenter.predict_probs(t, 0.5)?, t.labels.as_slice())))
        .collect::<Result<Vec<_>>>()?;
    select_alpha(&outputs, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use proptest::prelude::*;

    fn probs(p_b: &[f64]) -> Matrix {
        Matrix::from_rows(&p_b.iter().map(|&p| vec![1.0 - p, p]).collect::<Vec<_>>()).unwrap()
    }

    fn grid() -> Vec<f64> {
        TrainConfig::default().alpha_grid
    }

    #[test]
    fn uninformative_prosody_prefers_lexical_only() {
        let gold = vec![Label::NB, Label::B, Label::NB, Label::B];
        let out = ModelOutputs {
            lexical: Some(probs(&[0.2, 0.7, 0.4, 0.9])),
            prosodic: Some(probs(&[0.5; 4])),
        };
        assert_eq!(select_alpha(&[(out, &gold)], &grid()).unwrap(), 1.0);
    }

    #[test]
    fn singleton_grid() {
        let gold = vec![Label::NB, Label::B];
        let out = ModelOutputs {
            lexical: Some(probs(&[0.1, 0.2])),
            prosodic: Some(probs(&[0.3, 0.9])),
        };
        assert_eq!(select_alpha(&[(out, &gold)], &[0.6]).unwrap(), 0.6);
        assert!(select_alpha(&[], &[]).is_err());
    }

    #[test]
    fn fold_seeds_differ() {
        let s: Vec<u64> = (0..5).map(|f| fold_seed(7, f)).collect();
        let mut d = s.clone();
        d.dedup();
        assert_eq!(d.len(), 5);
        assert_eq!(s[2], fold_seed(7, 2));
    }

    fn f1_at(outputs: &[(ModelOutputs, &[Label])], alpha: f64) -> f64 {
        let c: Counts = outputs
            .iter()
            .map(|(o, g)| Counts::from_labels(g, &o.fuse(alpha).unwrap().labels).unwrap())
            .sum();
        c.f1()
    }

    proptest! {
        #[test]
        fn swapping_models_mirrors_alpha(
            rows in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, any::<bool>()), 1..40)
        ) {
            let gold: Vec<Label> = rows.iter().map(|r| if r.2 { Label::B } else { Label::NB }).collect();
            let lex = probs(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
            let pros = probs(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
            let straight = vec![(ModelOutputs { lexical: Some(lex.clone()), prosodic: Some(pros.clone()) }, gold.as_slice())];
            let swapped = vec![(ModelOutputs { lexical: Some(pros), prosodic: Some(lex) }, gold.as_slice())];
            let g = grid();
            let a = select_alpha(&straight, &g).unwrap();
            let b = select_alpha(&swapped, &g).unwrap();
            let best = g.iter().map(|&x| f1_at(&straight, x)).fold(f64::MIN, f64::max);
            prop_assert_eq!(f1_at(&straight, a), best);
            // The mirrored weight attains the same maximum on the swapped models,
            // and the tie rule picks the largest swapped maximizer.
            let mirrored: Vec<f64> = g.iter().copied().filter(|&x| f1_at(&straight, x) == best).collect();
            let expected = mirrored.iter().map(|&x| ((1.0 - x) * 10.0).round() / 10.0).fold(f64::MIN, f64::max);
            prop_assert!((b - expected).abs() < 1e-12, "a={} b={} expected={}", a, b, expected);
        }
    }
}
