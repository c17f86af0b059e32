use boundseg::corpus::{synth_generate, Corpus, Group, LabeledText, SynthSpec};
use boundseg::evaluation::{cross_validated_eval, robustness_eval, AlphaTuning, Counts, EvalConfig};
use boundseg::features::fit_prosody_stats;
use boundseg::model::{FeatureSet, Hyperparams, Variant};
use boundseg::training::{kfold_split, train_segmenter, SegmenterConfig};
use boundseg::Error;

fn reduced(features: FeatureSet, seed: u64) -> SegmenterConfig {
    let mut cfg = SegmenterConfig {
        variant: Variant::Rcnn,
        features,
        lexical: Hyperparams::lexical().with_sizes(16, 16),
        prosodic: Hyperparams::prosodic().with_sizes(8, 16),
        ..SegmenterConfig::default()
    };
    cfg.train.seed = seed;
    cfg
}

fn corpus(spec: SynthSpec) -> Corpus {
    synth_generate(&spec).unwrap()
}

fn refs(c: &Corpus) -> Vec<&LabeledText> {
    c.texts.iter().collect()
}

#[test]
fn loss_falls_over_the_first_epochs() {
    // seed 7 synthetic cue corpus, reduced model
    let c = corpus(SynthSpec::default());
    let mut cfg = reduced(FeatureSet::ALL, 7);
    cfg.train.epochs = 6;
    cfg.alpha = Some(0.6);
    let run = train_segmenter(&refs(&c), None, &cfg).unwrap();
    for log in [&run.lexical_log, &run.prosodic_log] {
        assert_eq!(log.len(), 6);
        for w in log[..5].windows(2) {
            assert!(w[1].mean_loss < w[0].mean_loss, "{log:?}");
        }
    }
}

#[test]
fn epoch_log_line_format() {
    let c = corpus(SynthSpec { n_texts: 6, ..SynthSpec::default() });
    let mut cfg = reduced(FeatureSet::EMBEDDINGS, 1);
    cfg.train.epochs = 2;
    let run = train_segmenter(&refs(&c), None, &cfg).unwrap();
    let line = run.lexical_log[1].to_string();
    let fields: Vec<&str> = line.split('\t').collect();
    assert_eq!(fields.len(), 3);
    assert_eq!(fields[0], "2");
    assert!(fields[1].parse::<f64>().unwrap() > 0.0);
    fields[2].parse::<u128>().unwrap();
    assert!(run.prosodic_log.is_empty());
}

#[test]
fn prosody_without_signal_scores_like_the_baseline() {
    let c = corpus(SynthSpec {
        prosody_cue_strength: 0.0,
        ..SynthSpec::default()
    });
    let cfg = EvalConfig {
        segmenter: reduced(FeatureSet::PROSODY, 7),
        ..EvalConfig::default()
    };
    let r = cross_validated_eval(&c, None, &cfg).unwrap();
    assert_eq!(r.alpha, 0.0);
    let gap = (r.f1() - r.baseline.f1()).abs();
    assert!(gap <= 0.1, "F1 {} vs baseline {}", r.f1(), r.baseline.f1());
}

#[test]
fn f1_does_not_fall_as_the_cue_gets_more_reliable() {
    let mut scores = Vec::new();
    for reliability in [0.5, 0.75, 1.0] {
        let c = corpus(SynthSpec {
            cue_reliability: reliability,
            ..SynthSpec::default()
        });
        let cfg = EvalConfig {
            segmenter: reduced(FeatureSet::EMBEDDINGS, 7),
            ..EvalConfig::default()
        };
        scores.push(cross_validated_eval(&c, None, &cfg).unwrap().f1());
    }
    assert!(scores[0] <= scores[1] && scores[1] <= scores[2], "{scores:?}");
}

fn quick_eval(jobs: usize, tuning: AlphaTuning) -> EvalConfig {
    let mut seg = reduced(FeatureSet::ALL, 3);
    seg.lexical = seg.lexical.with_sizes(6, 5);
    seg.prosodic = seg.prosodic.with_sizes(3, 4);
    seg.train.epochs = 2;
    EvalConfig {
        segmenter: seg,
        folds: 5,
        jobs,
        tuning,
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let c = corpus(SynthSpec { n_texts: 15, ..SynthSpec::default() });
    let one = cross_validated_eval(&c, None, &quick_eval(1, AlphaTuning::Pooled)).unwrap();
    let three = cross_validated_eval(&c, None, &quick_eval(3, AlphaTuning::Pooled)).unwrap();
    assert_eq!(one, three);
    let pooled: Counts = one.folds.iter().map(|f| f.counts).sum();
    assert_eq!(pooled, one.counts);
    assert_eq!(one.folds.len(), 5);
}

#[test]
fn fixed_and_per_fold_alpha() {
    let c = corpus(SynthSpec { n_texts: 10, ..SynthSpec::default() });
    let fixed = cross_validated_eval(&c, None, &quick_eval(1, AlphaTuning::Fixed(0.6))).unwrap();
    assert_eq!(fixed.alpha, 0.6);
    assert!(fixed.folds.iter().all(|f| f.alpha == 0.6));
    let per_fold = cross_validated_eval(&c, None, &quick_eval(1, AlphaTuning::PerFold)).unwrap();
    assert!(per_fold.folds.iter().all(|f| (0.0..=1.0).contains(&f.alpha)));
}

#[test]
fn folds_keep_train_and_test_apart() {
    let c = corpus(SynthSpec { n_texts: 23, ..SynthSpec::default() });
    let plan = kfold_split(c.texts.iter().map(|t| t.id.as_str()), 5, 7).unwrap();
    let mut tested = 0;
    for fold in 0..5 {
        let (train, test) = plan.split(&c.texts, fold);
        assert!(train.iter().all(|t| test.iter().all(|u| u.id != t.id)));
        assert_eq!(train.len() + test.len(), 23);
        tested += test.len();
        // normalization statistics come from the training side only
        let seg = {
            let mut cfg = reduced(FeatureSet::PROSODY, 1);
            cfg.train.epochs = 0;
            train_segmenter(&train, None, &cfg).unwrap().segmenter
        };
        assert_eq!(seg.prosodic.unwrap().stats, fit_prosody_stats(train.iter().copied()).unwrap());
    }
    assert_eq!(tested, 23);
}

#[test]
fn ad_narratives_train_only_the_lexical_model() {
    let ctl = corpus(SynthSpec { n_texts: 4, ..SynthSpec::default() });
    let mut ad = corpus(SynthSpec {
        name: "ad".into(),
        n_texts: 3,
        group: Group::Ad,
        seed: 99,
        ..SynthSpec::default()
    });
    for t in &mut ad.texts {
        for v in t.prosody.as_mut().unwrap() {
            v.iter_mut().for_each(|x| *x = *x * 50.0 + 400.0);
        }
    }
    let mut texts = refs(&ctl);
    texts.extend(ad.texts.iter());
    let mut cfg = reduced(FeatureSet::ALL, 2);
    cfg.train.epochs = 0;
    cfg.alpha = Some(0.5);
    let seg = train_segmenter(&texts, None, &cfg).unwrap().segmenter;
    assert_eq!(seg.prosodic.unwrap().stats, fit_prosody_stats(&ctl.texts).unwrap());
    let words = seg.lexical.unwrap().words.unwrap();
    assert!(ad.texts.iter().flat_map(|t| &t.tokens).all(|w| words.contains(w)));
}

#[test]
fn prosody_features_need_prosody() {
    let mut c = corpus(SynthSpec { n_texts: 6, ..SynthSpec::default() });
    for t in &mut c.texts {
        t.prosody = None;
    }
    for features in [FeatureSet::ALL, FeatureSet::PROSODY] {
        let cfg = EvalConfig {
            segmenter: reduced(features, 1),
            ..EvalConfig::default()
        };
        assert!(matches!(cross_validated_eval(&c, None, &cfg), Err(Error::Unsupported(_))));
    }
}

#[test]
fn training_on_the_test_corpus_matches_in_corpus_scoring() {
    let c = corpus(SynthSpec { n_texts: 8, ..SynthSpec::default() });
    let mut cfg = reduced(FeatureSet::ALL, 4);
    cfg.train.epochs = 2;
    cfg.alpha = Some(0.8);
    let report = robustness_eval(&c, &c, None, &cfg).unwrap();
    let seg = train_segmenter(&refs(&c), None, &cfg).unwrap().segmenter;
    let direct: Counts = c
        .texts
        .iter()
        .map(|t| Counts::from_labels(&t.labels, &seg.segment(t).unwrap().labels).unwrap())
        .sum();
    assert_eq!(report.counts, direct);
    assert_eq!(report.alpha, 0.8);
}
