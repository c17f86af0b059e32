//! One trainable network (lexical or prosodic) in any of the four layer stacks,
//! with an exact hand-written backward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hyper::{Hyperparams, Variant};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::numerics::matrix::axpy;
use crate::numerics::{
    dropout_apply, dropout_backward, glorot_init, maxpool1d_backward, maxpool1d_same, softmax_rows,
    weighted_cross_entropy, Activation, BiLstm, BiLstmTrace, Conv1d, Dense, Lstm, Matrix, Mode, Pooled,
};

/// Input to a network for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceInput {
    /// Embedding-table row ids. An id list is empty when the matching table is absent.
    Tokens { words: Vec<usize>, tags: Vec<usize> },
    /// Precomputed `m × d` features (prosody).
    Features(Matrix),
}

impl SequenceInput {
    pub fn len(&self) -> usize {
        match self {
            SequenceInput::Tokens { words, tags } => words.len().max(tags.len()),
            SequenceInput::Features(x) => x.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// First `n` positions.
    pub fn prefix(&self, n: usize) -> SequenceInput {
        match self {
            SequenceInput::Tokens { words, tags } => SequenceInput::Tokens {
                words: words[..n.min(words.len())].to_vec(),
                tags: tags[..n.min(tags.len())].to_vec(),
            },
            SequenceInput::Features(x) => SequenceInput::Features(x.take_rows(n)),
        }
    }
}

/// What feeds the first layer.
#[derive(Debug, Clone)]
pub enum InputLayer {
    /// Initial word and/or tag tables; at least one must be present.
    Embeddings { words: Option<Matrix>, tags: Option<Matrix> },
    Features { dim: usize },
}

/// Trainable parameters of one network. Also used, zero-initialized, as the
/// container for its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub variant: Variant,
    pub word_embeddings: Option<Matrix>,
    pub tag_embeddings: Option<Matrix>,
    /// Input width when fed precomputed features.
    pub feature_dim: usize,
    pub conv: Option<Conv1d>,
    pub pool_size: usize,
    pub recurrent: Option<BiLstm>,
    pub hidden: Option<Dense>,
    pub output: Dense,
    pub dropout_rate: f64,
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input: SequenceInput,
    x: Matrix,
    conv_out: Option<Matrix>,
    pooled: Option<Pooled>,
    recurrent: Option<BiLstmTrace>,
    hidden_out: Option<Matrix>,
    dropout_scale: Option<Matrix>,
    /// Input of the output layer.
    top: Matrix,
    pub probs: Matrix,
}

fn lstm_init<R: Rng + ?Sized>(inputs: usize, units: usize, rng: &mut R) -> Lstm {
    Lstm {
        wx: glorot_init(4 * units, inputs, rng),
        wh: glorot_init(4 * units, units, rng),
        b: Matrix::zeros(1, 4 * units),
        wy: glorot_init(units, units, rng),
        by: Matrix::zeros(1, units),
    }
}

impl Network {
    pub fn new<R: Rng + ?Sized>(variant: Variant, input: InputLayer, hyper: &Hyperparams, rng: &mut R) -> Result<Self> {
        hyper.validate()?;
        let (word_embeddings, tag_embeddings, feature_dim) = match input {
            InputLayer::Embeddings { words, tags } => {
                if words.is_none() && tags.is_none() {
                    return Err(Error::contract("embedding input needs a word or a tag table"));
                }
                (words, tags, 0)
            }
            InputLayer::Features { dim } => {
                if dim == 0 {
                    return Err(Error::contract("feature input dimension must be positive"));
                }
                (None, None, dim)
            }
        };
        let d = feature_dim
            + word_embeddings.as_ref().map_or(0, Matrix::cols)
            + tag_embeddings.as_ref().map_or(0, Matrix::cols);

        let mut width = d;
        let conv = if variant.has_conv() {
            let w = glorot_init(hyper.filters, hyper.filter_len * d, rng);
            width = hyper.filters;
            Some(Conv1d::new(w, Matrix::zeros(1, hyper.filters), hyper.filter_len, Activation::Relu)?)
        } else {
            None
        };
        let recurrent = if variant.has_recurrence() {
            let bi = BiLstm {
                forward: lstm_init(width, hyper.recurrent_units, rng),
                backward: lstm_init(width, hyper.recurrent_units, rng),
            };
            width = hyper.recurrent_units;
            Some(bi)
        } else {
            None
        };
        let hidden = if variant == Variant::Mlp {
            let w = glorot_init(d, hyper.mlp_hidden, rng);
            width = hyper.mlp_hidden;
            Some(Dense::new(w, Matrix::zeros(1, hyper.mlp_hidden), Activation::Sigmoid)?)
        } else {
            None
        };
        let output = Dense::new(glorot_init(width, 2, rng), Matrix::zeros(1, 2), Activation::Identity)?;
        Ok(Network {
            variant,
            word_embeddings,
            tag_embeddings,
            feature_dim,
            conv,
            pool_size: hyper.pool_size,
            recurrent,
            hidden,
            output,
            dropout_rate: if variant == Variant::Mlp { 0.0 } else { hyper.dropout_rate },
        })
    }

    pub fn input_dim(&self) -> usize {
        self.feature_dim
            + self.word_embeddings.as_ref().map_or(0, Matrix::cols)
            + self.tag_embeddings.as_ref().map_or(0, Matrix::cols)
    }

    fn check_structure(&self) -> Result<()> {
        let ok = self.conv.is_some() == self.variant.has_conv()
            && self.recurrent.is_some() == self.variant.has_recurrence()
            && self.hidden.is_some() == (self.variant == Variant::Mlp);
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!("parameters do not match the {} layer stack", self.variant)))
        }
    }

    fn embed(&self, input: &SequenceInput) -> Result<Matrix> {
        match input {
            SequenceInput::Features(x) => {
                if self.feature_dim == 0 || x.cols() != self.feature_dim {
                    return Err(Error::contract(format!(
                        "network expects {} input features, got {}",
                        self.feature_dim,
                        x.cols()
                    )));
                }
                Ok(x.clone())
            }
            SequenceInput::Tokens { words, tags } => {
                if self.feature_dim != 0 {
                    return Err(Error::contract("network expects feature input, got token ids"));
                }
                let m = input.len();
                let dw = self.word_embeddings.as_ref().map_or(0, Matrix::cols);
                let mut x = Matrix::zeros(m, self.input_dim());
                for (table, ids, offset) in [
                    (&self.word_embeddings, words, 0),
                    (&self.tag_embeddings, tags, dw),
                ] {
                    let Some(table) = table else {
                        continue;
                    };
                    if ids.len() != m {
                        return Err(Error::contract("word and tag id sequences differ in length"));
                    }
                    for (t, &id) in ids.iter().enumerate() {
                        if id >= table.rows() {
                            return Err(Error::contract(format!("embedding row {id} out of range")));
                        }
                        x.row_mut(t)[offset..offset + table.cols()].copy_from_slice(table.row(id));
                    }
                }
                Ok(x)
            }
        }
    }

    pub fn forward<R: Rng + ?Sized>(&self, input: &SequenceInput, mode: Mode, rng: &mut R) -> Result<ForwardTrace> {
        self.check_structure()?;
        if input.is_empty() {
            return Err(Error::contract("cannot run a network on an empty sequence"));
        }
        let x = self.embed(input)?;
        let mut top = x.clone();
        let mut conv_out = None;
        let mut pooled = None;
        if let Some(conv) = &self.conv {
            let c = conv.forward(&x)?;
            let p = maxpool1d_same(&c, self.pool_size)?;
            top = p.output.clone();
            conv_out = Some(c);
            pooled = Some(p);
        }
        let recurrent = match &self.recurrent {
            Some(bi) => {
                let trace = bi.run(&top)?;
                top = trace.output.clone();
                Some(trace)
            }
            None => None,
        };
        let hidden_out = match &self.hidden {
            Some(h) => {
                let out = h.forward(&top)?;
                top = out.clone();
                Some(out)
            }
            None => None,
        };
        let (top, dropout_scale) = dropout_apply(&top, self.dropout_rate, mode, rng)?;
        let logits = self.output.forward(&top)?;
        let probs = softmax_rows(&logits)?;
        Ok(ForwardTrace {
            input: input.clone(),
            x,
            conv_out,
            pooled,
            recurrent,
            hidden_out,
            dropout_scale,
            top,
            probs,
        })
    }

    /// Class probabilities (`m × 2`, columns NB, B) in inference mode.
    pub fn predict(&self, input: &SequenceInput) -> Result<Matrix> {
        // inference never draws from the generator
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(input, Mode::Inference, &mut rng)?.probs)
    }

    /// Gradients of all parameters given `d loss / d logits`.
    pub fn backward(&self, trace: &ForwardTrace, d_logits: &Matrix) -> Result<LayerGradients> {
        self.check_structure()?;
        if d_logits.shape() != trace.probs.shape() || trace.x.cols() != self.input_dim() {
            return Err(Error::contract("backward: trace does not belong to this network"));
        }
        let mut g = self.zeros_like();
        let d_top = self.output.backward(&trace.top, &trace.probs, d_logits, true, &mut g.output)?;
        let mut d = dropout_backward(&d_top, trace.dropout_scale.as_ref());
        if let (Some(h), Some(out)) = (&self.hidden, &trace.hidden_out) {
            let input = match (&self.conv, &self.recurrent) {
                (None, None) => &trace.x,
                _ => return Err(Error::contract("hidden layer only follows the input")),
            };
            d = h.backward(input, out, &d, false, g.hidden.as_mut().expect("same structure"))?;
        }
        if let (Some(bi), Some(rt)) = (&self.recurrent, &trace.recurrent) {
            d = bi.backprop(rt, &d, g.recurrent.as_mut().expect("same structure"))?;
        }
        if let (Some(conv), Some(c), Some(p)) = (&self.conv, &trace.conv_out, &trace.pooled) {
            let dc = maxpool1d_backward(p, &d);
            d = conv.backward(&trace.x, c, &dc, g.conv.as_mut().expect("same structure"))?;
        }
        if let SequenceInput::Tokens { words, tags } = &trace.input {
            let dw = self.word_embeddings.as_ref().map_or(0, Matrix::cols);
            for (table, ids, offset) in [
                (g.word_embeddings.as_mut(), words, 0),
                (g.tag_embeddings.as_mut(), tags, dw),
            ] {
                let Some(table) = table else {
                    continue;
                };
                let cols = table.cols();
                for (t, &id) in ids.iter().enumerate() {
                    axpy(1.0, &d.row(t)[offset..offset + cols], table.row_mut(id));
                }
            }
        }
        Ok(LayerGradients(g))
    }

    pub fn zeros_like(&self) -> Network {
        Network {
            variant: self.variant,
            word_embeddings: self.word_embeddings.as_ref().map(Matrix::zeros_like),
            tag_embeddings: self.tag_embeddings.as_ref().map(Matrix::zeros_like),
            feature_dim: self.feature_dim,
            conv: self.conv.as_ref().map(Conv1d::zeros_like),
            pool_size: self.pool_size,
            recurrent: self.recurrent.as_ref().map(BiLstm::zeros_like),
            hidden: self.hidden.as_ref().map(Dense::zeros_like),
            output: self.output.zeros_like(),
            dropout_rate: self.dropout_rate,
        }
    }

    /// Every trainable tensor with a stable name, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out: Vec<(String, &Matrix)> = Vec::new();
        if let Some(m) = &self.word_embeddings {
            out.push(("embedding.word".into(), m));
        }
        if let Some(m) = &self.tag_embeddings {
            out.push(("embedding.tag".into(), m));
        }
        if let Some(c) = &self.conv {
            out.extend(Conv1d::TENSOR_NAMES.iter().map(|n| format!("conv.{n}")).zip(c.tensors()));
        }
        if let Some(bi) = &self.recurrent {
            for (dir, l) in [("fwd", &bi.forward), ("bwd", &bi.backward)] {
                out.extend(Lstm::TENSOR_NAMES.iter().map(|n| format!("lstm.{dir}.{n}")).zip(l.tensors()));
            }
        }
        if let Some(h) = &self.hidden {
            out.extend(Dense::TENSOR_NAMES.iter().map(|n| format!("hidden.{n}")).zip(h.tensors()));
        }
        out.extend(Dense::TENSOR_NAMES.iter().map(|n| format!("output.{n}")).zip(self.output.tensors()));
        out
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        self.named_tensors().into_iter().map(|(_, m)| m).collect()
    }

    /// Same order as [`Network::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = Vec::new();
        if let Some(m) = &mut self.word_embeddings {
            out.push(m);
        }
        if let Some(m) = &mut self.tag_embeddings {
            out.push(m);
        }
        if let Some(c) = &mut self.conv {
            out.extend(c.tensors_mut());
        }
        if let Some(bi) = &mut self.recurrent {
            out.extend(bi.tensors_mut());
        }
        if let Some(h) = &mut self.hidden {
            out.extend(h.tensors_mut());
        }
        out.extend(self.output.tensors_mut());
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.is_finite())
    }

    /// Summed weighted cross-entropy of one sequence and its parameter gradients.
    /// Only the first `active` positions take part; later positions are padding.
    pub fn loss_and_gradients<R: Rng + ?Sized>(
        &self,
        input: &SequenceInput,
        labels: &[Label],
        active: usize,
        class_weights: &[f64; 2],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, LayerGradients)> {
        if labels.len() != input.len() || active > labels.len() || active == 0 {
            return Err(Error::contract("labels, input and active length disagree"));
        }
        let input = if active < input.len() {
            input.prefix(active)
        } else {
            input.clone()
        };
        let trace = self.forward(&input, mode, rng)?;
        let y_true = one_hot(&labels[..active]);
        let mask = vec![true; active];
        let (loss, d_logits) = weighted_cross_entropy(&y_true, &trace.probs, class_weights, &mask)?;
        Ok((loss, self.backward(&trace, &d_logits)?))
    }
}

pub fn one_hot(labels: &[Label]) -> Matrix {
    let mut y = Matrix::zeros(labels.len(), 2);
    for (t, l) in labels.iter().enumerate() {
        y[(t, l.index())] = 1.0;
    }
    y
}

/// Gradients of every parameter of a [`Network`], shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients(pub Network);

impl LayerGradients {
    pub fn zeros_for(net: &Network) -> Self {
        LayerGradients(net.zeros_like())
    }

    pub fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        self.0.named_tensors()
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        self.0.tensors()
    }

    pub fn accumulate(&mut self, other: &LayerGradients) -> Result<()> {
        for (a, b) in self.0.tensors_mut().into_iter().zip(other.0.tensors()) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.0.tensors_mut().into_iter().for_each(|m| m.scale(s));
    }

    pub fn is_zero(&self) -> bool {
        self.tensors().iter().all(|m| m.as_slice().iter().all(|&v| v == 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(m: usize, d: usize, rng: &mut ChaCha8Rng) -> SequenceInput {
        SequenceInput::Features(glorot_init(m, d, rng))
    }

    fn tiny(variant: Variant, rng: &mut ChaCha8Rng) -> Network {
        let h = Hyperparams {
            filters: 4,
            filter_len: 3,
            recurrent_units: 5,
            mlp_hidden: 6,
            ..Hyperparams::lexical()
        };
        Network::new(variant, InputLayer::Features { dim: 6 }, &h, rng).unwrap()
    }

    #[test]
    fn every_variant_keeps_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for v in [Variant::Rcnn, Variant::Mlp, Variant::Cnn, Variant::Rnn] {
            let net = tiny(v, &mut rng);
            for m in [1, 2, 7, 50] {
                let p = net.predict(&features(m, 6, &mut rng)).unwrap();
                assert_eq!(p.shape(), (m, 2), "{v} m={m}");
                for r in 0..m {
                    assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_parameters_give_even_odds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = tiny(Variant::Rcnn, &mut rng);
        net.tensors_mut().into_iter().for_each(|m| m.fill(0.0));
        let p = net.predict(&features(5, 6, &mut rng)).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn structure_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = tiny(Variant::Rcnn, &mut rng);
        net.variant = Variant::Mlp;
        assert!(matches!(net.predict(&features(3, 6, &mut rng)), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_class_weights_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = tiny(Variant::Rcnn, &mut rng);
        let labels = [Label::NB, Label::B, Label::NB];
        let (loss, g) = net
            .loss_and_gradients(&features(3, 6, &mut rng), &labels, 3, &[0.0, 0.0], Mode::Inference, &mut rng)
            .unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.is_zero());
    }

    #[test]
    fn tensor_lists_align() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = tiny(Variant::Rcnn, &mut rng);
        let shapes: Vec<_> = net.tensors().iter().map(|m| m.shape()).collect();
        let shapes_mut: Vec<_> = net.tensors_mut().iter().map(|m| m.shape()).collect();
        assert_eq!(shapes, shapes_mut);
        assert_eq!(net.named_tensors().len(), 2 + 10 + 2);
    }
}
