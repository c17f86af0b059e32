//! Boundary-class metrics, the all-boundary baseline, cross-validation and
//! cross-corpus evaluation.

mod metrics;

pub use metrics::{all_boundary_baseline, prf_boundary, Counts};

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::corpus::{Corpus, Group, Label, LabeledText};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::model::{FeatureSet, ModelOutputs, Variant};
use crate::training::{
    check_feature_support, default_alpha, fold_seed, kfold_split, select_alpha, train_segmenter, SegmenterConfig,
};

/// How cross-validation picks the fusion weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaTuning {
    Fixed(f64),
    /// One weight maximizing F1 over all out-of-fold predictions.
    Pooled,
    /// Each fold tunes on its own training split.
    PerFold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub segmenter: SegmenterConfig,
    pub folds: usize,
    /// Worker threads for fold training. Results do not depend on it.
    pub jobs: usize,
    pub tuning: AlphaTuning,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            segmenter: SegmenterConfig::default(),
            folds: 5,
            jobs: 1,
            tuning: AlphaTuning::Pooled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub alpha: f64,
    pub counts: Counts,
    pub baseline: Counts,
}

/// Pooled boundary-class scores with the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub corpus: String,
    pub variant: Variant,
    pub features: FeatureSet,
    pub alpha: f64,
    pub counts: Counts,
    /// All-boundary baseline on the same texts.
    pub baseline: Counts,
    pub folds: Vec<FoldResult>,
}

impl EvalReport {
    pub fn precision(&self) -> f64 {
        self.counts.precision()
    }

    pub fn recall(&self) -> f64 {
        self.counts.recall()
    }

    pub fn f1(&self) -> f64 {
        self.counts.f1()
    }

    /// `corpus  variant  features  alpha  P  R  F1`, tab separated.
    pub fn line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.2}\t{:.4}\t{:.4}\t{:.4}",
            self.corpus,
            self.variant,
            self.features,
            self.alpha,
            self.precision(),
            self.recall(),
            self.f1()
        )
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "corpus {}  variant {}  features {}  alpha {:.2}",
            self.corpus, self.variant, self.features, self.alpha
        );
        let _ = writeln!(s, "{:<10} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}", "", "tp", "fp", "fn", "P", "R", "F1");
        let mut row = |name: &str, c: &Counts| {
            let _ = writeln!(
                s,
                "{:<10} {:>6} {:>6} {:>6} {:>6.3} {:>6.3} {:>6.3}",
                name,
                c.tp,
                c.fp,
                c.fn_,
                c.precision(),
                c.recall(),
                c.f1()
            );
        };
        for f in &self.folds {
            row(&format!("fold {}", f.fold + 1), &f.counts);
        }
        row("pooled", &self.counts);
        row("all-B", &self.baseline);
        s
    }
}

/// Texts that are scored: AD narratives serve only as lexical training data.
fn scored(texts: Vec<&LabeledText>) -> Vec<&LabeledText> {
    texts.into_iter().filter(|t| t.group != Group::Ad).collect()
}

fn counts_at(outputs: &[(ModelOutputs, &[Label])], alpha: f64) -> Result<Counts> {
    outputs
        .iter()
        .map(|(o, gold)| Counts::from_labels(gold, &o.fuse(alpha)?.labels))
        .collect::<Result<Vec<Counts>>>()
        .map(|v| v.into_iter().sum())
}

fn baseline_of(texts: &[&LabeledText]) -> Result<Counts> {
    let gold: Vec<Label> = texts.iter().flat_map(|t| t.labels.iter().copied()).collect();
    if gold.is_empty() {
        return Ok(Counts::default());
    }
    all_boundary_baseline(&gold)
}

/// Fusion weight for evaluation when a single network exists or the weight is fixed.
fn forced_alpha(features: FeatureSet, tuning: AlphaTuning) -> Option<f64> {
    if !(features.lexical() && features.prosody) {
        return Some(default_alpha(features));
    }
    match tuning {
        AlphaTuning::Fixed(a) => Some(a),
        _ => None,
    }
}

struct FoldOutput<'a> {
    outputs: Vec<(ModelOutputs, &'a [Label])>,
    alpha: f64,
    baseline: Counts,
}

/// Runs `task(0..n)` on up to `jobs` threads and returns results in index order.
fn run_indexed<T: Send>(n: usize, jobs: usize, task: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(&task).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = task(i);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every fold ran"))
        .collect()
}

/// k-fold cross-validation with micro-averaged boundary scores.
pub fn cross_validated_eval(corpus: &Corpus, embeddings: Option<&EmbeddingTable>, cfg: &EvalConfig) -> Result<EvalReport> {
    let seg = &cfg.segmenter;
    check_feature_support(seg.features, &corpus.texts)?;
    let plan = kfold_split(corpus.texts.iter().map(|t| t.id.as_str()), cfg.folds, seg.train.seed)?;
    let forced = forced_alpha(seg.features, cfg.tuning);

    let folds = run_indexed(cfg.folds, cfg.jobs, |fold| {
        let (train, test) = plan.split(&corpus.texts, fold);
        let mut fold_cfg = seg.clone();
        fold_cfg.train.seed = fold_seed(seg.train.seed, fold);
        fold_cfg.alpha = match cfg.tuning {
            AlphaTuning::PerFold => forced,
            _ => Some(forced.unwrap_or(1.0)),
        };
        let run = train_segmenter(&train, embeddings, &fold_cfg)?;
        log::info!("fold {} trained, alpha {:.2}", fold + 1, run.segmenter.alpha);
        let test = scored(test);
        let outputs = test
            .iter()
            .map(|t| Ok((run.segmenter.predict_probs(t, 0.5)?, t.labels.as_slice())))
            .collect::<Result<Vec<_>>>()?;
        Ok(FoldOutput {
            outputs,
            alpha: run.segmenter.alpha,
            baseline: baseline_of(&test)?,
        })
    })?;

    let alpha = match (forced, cfg.tuning) {
        (Some(a), _) => a,
        (None, AlphaTuning::PerFold) => f64::NAN,
        (None, _) => {
            let pooled: Vec<(ModelOutputs, &[Label])> = folds.iter().flat_map(|f| f.outputs.iter().cloned()).collect();
            select_alpha(&pooled, &seg.train.alpha_grid)?
        }
    };
    let mut results = Vec::with_capacity(folds.len());
    for (fold, f) in folds.iter().enumerate() {
        let a = if alpha.is_nan() { f.alpha } else { alpha };
        results.push(FoldResult {
            fold,
            alpha: a,
            counts: counts_at(&f.outputs, a)?,
            baseline: f.baseline,
        });
    }
    let alpha = if alpha.is_nan() {
        results.iter().map(|r| r.alpha).sum::<f64>() / results.len() as f64
    } else {
        alpha
    };
    Ok(EvalReport {
        corpus: corpus.name.clone(),
        variant: seg.variant,
        features: seg.features,
        alpha,
        counts: results.iter().map(|r| r.counts).sum(),
        baseline: results.iter().map(|r| r.baseline).sum(),
        folds: results,
    })
}

/// Trains on all of `train` and scores on `test`.
pub fn robustness_eval(
    train: &Corpus,
    test: &Corpus,
    embeddings: Option<&EmbeddingTable>,
    cfg: &SegmenterConfig,
) -> Result<EvalReport> {
    check_feature_support(cfg.features, &test.texts)?;
    let texts: Vec<&LabeledText> = train.texts.iter().collect();
    let run = train_segmenter(&texts, embeddings, cfg)?;
    let test_texts = scored(test.texts.iter().collect());
    if test_texts.is_empty() {
        return Err(Error::data(format!("corpus {} has no texts to score", test.name)));
    }
    let mut counts = Counts::default();
    for t in &test_texts {
        counts += Counts::from_labels(&t.labels, &run.segmenter.segment(t)?.labels)?;
    }
    Ok(EvalReport {
        corpus: format!("{}->{}", train.name, test.name),
        variant: cfg.variant,
        features: cfg.features,
        alpha: run.segmenter.alpha,
        counts,
        baseline: baseline_of(&test_texts)?,
        folds: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format() {
        let r = EvalReport {
            corpus: "synth".into(),
            variant: Variant::Rcnn,
            features: FeatureSet::ALL,
            alpha: 0.6,
            counts: Counts { tp: 3, fp: 1, fn_: 1 },
            baseline: Counts { tp: 4, fp: 40, fn_: 0 },
            folds: Vec::new(),
        };
        assert_eq!(r.line(), "synth\trcnn\tall\t0.60\t0.7500\t0.7500\t0.7500");
        assert!(r.table().contains("pooled"));
    }

    #[test]
    fn parallel_runner_keeps_order() {
        let out = run_indexed(7, 3, |i| Ok(i * i)).unwrap();
        assert_eq!(out, vec![0, 1, 4, 9, 16, 25, 36]);
        assert!(run_indexed(3, 2, |i| if i == 1 { Err(Error::data("x")) } else { Ok(i) }).is_err());
    }
}
