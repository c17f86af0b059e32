use super::fusion::{fuse, Fused};
use super::hyper::{FeatureSet, Hyperparams, Variant};
use super::network::{Network, SequenceInput};
use crate::corpus::LabeledText;
use crate::error::{Error, Result};
use crate::features::{build_prosodic_input, ProsodyStats, Vocab};
use crate::numerics::Matrix;

/// Network over word and/or tag embeddings, with the vocabularies that index its tables.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalModel {
    pub net: Network,
    pub hyper: Hyperparams,
    pub words: Option<Vocab>,
    pub tags: Option<Vocab>,
}

impl LexicalModel {
    pub fn input(&self, text: &LabeledText) -> SequenceInput {
        let ids = |vocab: &Option<Vocab>, items: &[String]| {
            vocab
                .as_ref()
                .map_or_else(Vec::new, |v| items.iter().map(|s| v.lookup(s)).collect())
        };
        SequenceInput::Tokens {
            words: ids(&self.words, &text.tokens),
            tags: ids(&self.tags, &text.pos_tags),
        }
    }

    pub fn predict(&self, text: &LabeledText) -> Result<Matrix> {
        self.net.predict(&self.input(text))
    }
}

/// Network over normalized prosodic vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProsodicModel {
    pub net: Network,
    pub hyper: Hyperparams,
    pub stats: ProsodyStats,
}

impl ProsodicModel {
    pub fn input(&self, text: &LabeledText) -> Result<SequenceInput> {
        Ok(SequenceInput::Features(build_prosodic_input(text, &self.stats)?))
    }

    pub fn predict(&self, text: &LabeledText) -> Result<Matrix> {
        self.net.predict(&self.input(text)?)
    }
}

/// Per-model boundary probabilities for one text.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutputs {
    pub lexical: Option<Matrix>,
    pub prosodic: Option<Matrix>,
}

impl ModelOutputs {
    pub fn fuse(&self, alpha: f64) -> Result<Fused> {
        fuse(self.lexical.as_ref(), self.prosodic.as_ref(), alpha)
    }
}

/// Lexical and prosodic networks plus the weight that fuses them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSegmenter {
    pub variant: Variant,
    pub features: FeatureSet,
    pub lexical: Option<LexicalModel>,
    pub prosodic: Option<ProsodicModel>,
    pub alpha: f64,
}

impl TrainedSegmenter {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::contract(format!("fusion weight {} outside [0, 1]", self.alpha)));
        }
        match (&self.lexical, &self.prosodic) {
            (None, None) => Err(Error::contract("segmenter has no model")),
            (Some(_), None) if self.alpha < 1.0 => Err(Error::contract("alpha < 1 without a prosodic model")),
            (None, Some(_)) if self.alpha > 0.0 => Err(Error::contract("alpha > 0 without a lexical model")),
            _ => Ok(()),
        }
    }

    /// Whether inference at the stored alpha reads prosody.
    pub fn needs_prosody(&self) -> bool {
        self.prosodic.is_some() && self.alpha < 1.0
    }

    /// Raw outputs of both networks. The prosodic network is skipped when
    /// `alpha` is 1 and the text has no prosody.
    pub fn predict_probs(&self, text: &LabeledText, alpha: f64) -> Result<ModelOutputs> {
        let lexical = match &self.lexical {
            Some(m) if alpha > 0.0 || self.prosodic.is_none() => Some(m.predict(text)?),
            _ => None,
        };
        let prosodic = match &self.prosodic {
            Some(m) if alpha < 1.0 || self.lexical.is_none() => Some(m.predict(text)?),
            Some(m) if text.has_prosody() => Some(m.predict(text)?),
            _ => None,
        };
        Ok(ModelOutputs { lexical, prosodic })
    }

    pub fn segment(&self, text: &LabeledText) -> Result<Fused> {
        self.segment_with_alpha(text, self.alpha)
    }

    pub fn segment_with_alpha(&self, text: &LabeledText, alpha: f64) -> Result<Fused> {
        let out = self.predict_probs(text, alpha)?;
        let alpha = match (&out.lexical, &out.prosodic) {
            (Some(_), None) => 1.0,
            (None, Some(_)) => 0.0,
            _ => alpha,
        };
        out.fuse(alpha)
    }
}
