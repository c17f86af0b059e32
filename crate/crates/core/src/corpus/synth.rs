use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{Corpus, Group, Label, LabeledText, PAUSE_INDEX, PROSODY_DIM};
use crate::error::{Error, Result};

/// A 25-symbol part-of-speech tagset used for synthetic text.
pub const TAGSET: [&str; 25] = [
    "ADJ", "ADV", "ADV-KS", "ADV-KS-REL", "ART", "CUR", "IN", "KC", "KS", "N", "NPROP", "NUM", "PCP", "PDEN",
    "PREP", "PREP+ART", "PREP+PROADJ", "PREP+PROPESS", "PROADJ", "PRO-KS", "PRO-KS-REL", "PROPESS", "PROSUB",
    "PU", "V",
];

const FUNCTION_WORDS: [&str; 24] = [
    "a", "o", "e", "de", "que", "ela", "ele", "um", "uma", "na", "no", "com", "para", "do", "da", "se", "foi",
    "era", "mas", "lá", "não", "tinha", "quando", "muito",
];

const ONSETS: [&str; 14] = ["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "ch"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Parameters of a synthetic corpus with planted boundary cues.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub name: String,
    pub n_texts: usize,
    pub mean_sentence_len: f64,
    pub mean_sentences_per_text: f64,
    /// Token planted near each boundary with probability `cue_reliability`.
    pub boundary_cue_token: String,
    pub cue_reliability: f64,
    /// Distance of the cue from the boundary word; 0 puts the cue on the boundary word itself.
    pub cue_offset: usize,
    /// Shift of the pause-duration feature at boundary words.
    pub prosody_cue_strength: f64,
    pub vocab_size: usize,
    pub group: Group,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            name: "synth".to_string(),
            n_texts: 60,
            mean_sentence_len: 13.0,
            mean_sentences_per_text: 10.0,
            boundary_cue_token: "então".to_string(),
            cue_reliability: 0.95,
            cue_offset: 0,
            prosody_cue_strength: 2.0,
            vocab_size: 200,
            group: Group::Ctl,
            seed: 7,
        }
    }
}

/// Deterministic pseudo-Portuguese vocabulary that never contains `exclude`.
pub fn synth_vocabulary(size: usize, exclude: &str) -> Vec<String> {
    let syllables: Vec<String> = ONSETS
        .iter()
        .flat_map(|o| NUCLEI.iter().map(move |n| format!("{o}{n}")))
        .collect();
    let two = syllables
        .iter()
        .flat_map(|a| syllables.iter().map(move |b| format!("{a}{b}")));
    FUNCTION_WORDS
        .iter()
        .map(|w| w.to_string())
        .chain(two)
        .filter(|w| w != exclude)
        .take(size)
        .collect()
}

fn draw_len(dist: &Option<Poisson<f64>>, base: usize, rng: &mut ChaCha8Rng) -> usize {
    base + dist.as_ref().map_or(0, |d| d.sample(rng) as usize)
}

pub fn synth_generate(spec: &SynthSpec) -> Result<Corpus> {
    if !(spec.mean_sentence_len >= 2.0) {
        return Err(Error::contract("mean sentence length must be at least 2"));
    }
    if !(0.0..=1.0).contains(&spec.cue_reliability) {
        return Err(Error::contract("cue reliability must lie in [0, 1]"));
    }
    if spec.vocab_size == 0 || spec.boundary_cue_token.is_empty() || spec.boundary_cue_token.contains(char::is_whitespace)
    {
        return Err(Error::contract("synthetic corpus needs a vocabulary and a single-token cue"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vocab = synth_vocabulary(spec.vocab_size, &spec.boundary_cue_token);
    let sentence_len = (spec.mean_sentence_len > 2.0)
        .then(|| Poisson::new(spec.mean_sentence_len - 2.0).expect("positive rate"));
    let sentence_count = (spec.mean_sentences_per_text > 1.0)
        .then(|| Poisson::new(spec.mean_sentences_per_text - 1.0).expect("positive rate"));
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    let mut texts = Vec::with_capacity(spec.n_texts);
    for i in 0..spec.n_texts {
        let n_sentences = draw_len(&sentence_count, 1, &mut rng);
        let mut tokens = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_sentences {
            let len = draw_len(&sentence_len, 2, &mut rng);
            let mut sentence: Vec<String> = (0..len)
                .map(|_| vocab.choose(&mut rng).expect("vocabulary is nonempty").clone())
                .collect();
            if rng.random::<f64>() < spec.cue_reliability {
                let at = len.saturating_sub(1 + spec.cue_offset);
                sentence[at] = spec.boundary_cue_token.clone();
            }
            labels.extend((0..len).map(|k| if k + 1 == len { Label::B } else { Label::NB }));
            tokens.extend(sentence);
        }
        let tags = (0..tokens.len())
            .map(|_| TAGSET.choose(&mut rng).expect("tagset is nonempty").to_string())
            .collect();
        let prosody = labels
            .iter()
            .map(|&l| {
                let mut v = [0.0; PROSODY_DIM];
                v.iter_mut().for_each(|x| *x = noise.sample(&mut rng));
                if l == Label::B {
                    v[PAUSE_INDEX] += spec.prosody_cue_strength;
                }
                v
            })
            .collect();
        texts.push(LabeledText::new(
            format!("{}-{:03}", spec.name, i),
            tokens,
            tags,
            Some(prosody),
            labels,
            spec.group,
        )?);
    }
    Corpus::new(spec.name.clone(), texts)
}
