use boundseg::corpus::{synth_generate, LabeledText, SynthSpec};
use boundseg::model::{decode_model, encode_model, load_model, save_model, Hyperparams, InputLayer, Network, SequenceInput, TrainedSegmenter, Variant};
use boundseg::numerics::{glorot_init, softmax, Matrix, Mode};
use boundseg::training::{train_segmenter, SegmenterConfig};
use boundseg::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_hyper() -> Hyperparams {
    Hyperparams {
        filters: 4,
        filter_len: 3,
        pool_size: 3,
        recurrent_units: 5,
        mlp_hidden: 6,
        ..Hyperparams::prosodic()
    }
}

fn features_net(variant: Variant, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Network::new(variant, InputLayer::Features { dim: 4 }, &small_hyper(), &mut rng).unwrap()
}

fn segmenter(epochs: usize) -> (TrainedSegmenter, Vec<LabeledText>) {
    let corpus = synth_generate(&SynthSpec {
        n_texts: 8,
        ..SynthSpec::default()
    })
    .unwrap();
    let mut cfg = SegmenterConfig {
        lexical: Hyperparams::lexical().with_sizes(6, 5),
        prosodic: Hyperparams::prosodic().with_sizes(3, 4),
        alpha: Some(0.6),
        ..SegmenterConfig::default()
    };
    cfg.train.epochs = epochs;
    let texts: Vec<&LabeledText> = corpus.texts.iter().collect();
    let seg = train_segmenter(&texts, None, &cfg).unwrap().segmenter;
    (seg, corpus.texts)
}

#[test]
fn mlp_is_position_local() {
    let net = features_net(Variant::Mlp, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = glorot_init(6, 4, &mut rng);
    let perm = [3, 0, 5, 1, 4, 2];
    let permuted = Matrix::from_rows(&perm.iter().map(|&r| x.row(r).to_vec()).collect::<Vec<_>>()).unwrap();
    let p = net.predict(&SequenceInput::Features(x)).unwrap();
    let q = net.predict(&SequenceInput::Features(permuted)).unwrap();
    for (i, &r) in perm.iter().enumerate() {
        assert_eq!(q.row(i), p.row(r));
    }
}

#[test]
fn cnn_receptive_field() {
    let net = features_net(Variant::Cnn, 3);
    let h = small_hyper();
    // conv reaches h_c/2 rows each way and pooling h_m/2 more
    let reach = h.filter_len / 2 + h.pool_size / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = glorot_init(20, 4, &mut rng);
    let base = net.predict(&SequenceInput::Features(x.clone())).unwrap();
    let t = 10;
    for edit in 0..20 {
        let mut y = x.clone();
        y.row_mut(edit).iter_mut().for_each(|v| *v += 5.0);
        let p = net.predict(&SequenceInput::Features(y)).unwrap();
        if edit.abs_diff(t) > reach {
            assert_eq!(p.row(t), base.row(t), "edit at {edit} reached {t}");
        }
    }
}

#[test]
fn rcnn_with_silenced_recurrence_has_bounded_receptive_field() {
    let mut net = features_net(Variant::Rcnn, 5);
    let bi = net.recurrent.as_mut().unwrap();
    let n = bi.units();
    for lstm in [&mut bi.forward, &mut bi.backward] {
        lstm.wh.fill(0.0);
        // a closed forget gate drops the cell state between steps
        lstm.b.as_mut_slice()[n..2 * n].iter_mut().for_each(|v| *v = -1e3);
    }
    let h = small_hyper();
    let reach = h.filter_len / 2 + h.pool_size / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = glorot_init(16, 4, &mut rng);
    let base = net.predict(&SequenceInput::Features(x.clone())).unwrap();
    for edit in [0usize, 1, 2, 14, 15] {
        let mut y = x.clone();
        y.row_mut(edit).iter_mut().for_each(|v| *v -= 3.0);
        let p = net.predict(&SequenceInput::Features(y)).unwrap();
        for t in 0..16 {
            if edit.abs_diff(t) > reach {
                assert_eq!(p.row(t), base.row(t));
            }
        }
    }
}

#[test]
fn rnn_single_step() {
    let net = features_net(Variant::Rnn, 7);
    let x = vec![0.3, -1.2, 0.5, 0.9];
    let p = net.predict(&SequenceInput::Features(Matrix::row_vector(&x))).unwrap();

    let bi = net.recurrent.as_ref().unwrap();
    let n = bi.units();
    let project = |lstm: &boundseg::numerics::Lstm| {
        let (h, _, _) = lstm.step(&x, &vec![0.0; n], &vec![0.0; n]).unwrap();
        (0..n)
            .map(|k| lstm.by.as_slice()[k] + (0..n).map(|j| lstm.wy[(k, j)] * h[j]).sum::<f64>())
            .collect::<Vec<f64>>()
    };
    let (f, b) = (project(&bi.forward), project(&bi.backward));
    let summed: Vec<f64> = f.iter().zip(&b).map(|(a, b)| a + b).collect();
    let logits: Vec<f64> = (0..2)
        .map(|c| net.output.bias.as_slice()[c] + (0..n).map(|k| summed[k] * net.output.weight[(k, c)]).sum::<f64>())
        .collect();
    let expected = softmax(&logits).unwrap();
    for c in 0..2 {
        assert!((p[(0, c)] - expected[c]).abs() < 1e-12);
    }
}

#[test]
fn inference_is_deterministic_and_training_mode_is_seeded() {
    let net = features_net(Variant::Rcnn, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let input = SequenceInput::Features(glorot_init(11, 4, &mut rng));
    assert_eq!(net.predict(&input).unwrap(), net.predict(&input).unwrap());
    let run = |seed| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        net.forward(&input, Mode::Train, &mut r).unwrap().probs
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1), run(2));
}

#[test]
fn save_load_round_trip_is_bitwise() {
    let (seg, texts) = segmenter(1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.dbnd");
    save_model(&seg, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, seg);
    for t in &texts {
        let a = seg.segment(t).unwrap();
        let b = loaded.segment(t).unwrap();
        assert!(a.probs.as_slice().iter().zip(b.probs.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(encode_model(&loaded).unwrap(), std::fs::read(&path).unwrap());
}

#[test]
fn damaged_files_are_rejected() {
    let (seg, _) = segmenter(0);
    let bytes = encode_model(&seg).unwrap();
    assert!(matches!(decode_model(&bytes[..bytes.len() - 9]), Err(Error::Checksum)));
    let mut flipped = bytes.clone();
    flipped[bytes.len() / 2] ^= 0x10;
    assert!(matches!(decode_model(&flipped), Err(Error::Checksum)));
    let mut future = bytes.clone();
    future[4..8].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(decode_model(&future), Err(Error::Version { found: 2, supported: 1 })));
    let mut magic = bytes;
    magic[0] = b'X';
    assert!(decode_model(&magic).is_err());
    assert!(decode_model(b"DB").is_err());
}

#[test]
fn lexical_only_inference_needs_no_prosody() {
    let (seg, texts) = segmenter(0);
    let mut t = texts[0].clone();
    t.prosody = None;
    assert!(seg.needs_prosody());
    assert!(matches!(seg.segment(&t), Err(Error::Unsupported(_))));
    let fused = seg.segment_with_alpha(&t, 1.0).unwrap();
    assert_eq!(fused.labels.len(), t.len());
}
