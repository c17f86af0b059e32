//! Numeric inputs for the two networks: word and tag embedding lookups for the
//! lexical model, z-scored 13-dim prosodic vectors for the prosodic model.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{format_real, LabeledText, PROSODY_DIM};
use crate::error::{Error, Result};
use crate::numerics::init::gaussian;
use crate::numerics::{glorot_init, Matrix};

/// Seed of the shared out-of-vocabulary vector drawn when loading pretrained embeddings.
pub const OOV_SEED: u64 = 0x5eed_00f0;

/// Token → row mapping. The out-of-vocabulary row sits after all known entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::data(format!("duplicate vocabulary entry {w:?}")));
            }
        }
        Ok(Vocab { words, index })
    }

    /// Sorted, deduplicated vocabulary from arbitrary tokens.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut words: Vec<String> = tokens.into_iter().map(str::to_string).collect();
        words.sort();
        words.dedup();
        Vocab::new(words).expect("deduplicated")
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Number of known entries (the OOV row excluded).
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn oov_row(&self) -> usize {
        self.words.len()
    }

    /// Table rows including the OOV row.
    pub fn rows(&self) -> usize {
        self.words.len() + 1
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(self.oov_row())
    }
}

/// Lookup table with a dedicated OOV row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub vocab: Vocab,
    /// `vocab.rows() × dim`
    pub vectors: Matrix,
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn new(vocab: Vocab, vectors: Matrix, trainable: bool) -> Result<Self> {
        if vectors.rows() != vocab.rows() || vectors.cols() == 0 {
            return Err(Error::contract(format!(
                "embedding table for {} entries needs {} rows and dim > 0, got {:?}",
                vocab.len(),
                vocab.rows(),
                vectors.shape()
            )));
        }
        Ok(EmbeddingTable {
            vocab,
            vectors,
            trainable,
        })
    }

    /// Gaussian initialization scaled by fan in + fan out (OOV row included).
    pub fn glorot<R: Rng + ?Sized>(vocab: Vocab, dim: usize, rng: &mut R) -> Self {
        let vectors = glorot_init(vocab.rows(), dim, rng);
        EmbeddingTable {
            vocab,
            vectors,
            trainable: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn oov_row(&self) -> usize {
        self.vocab.oov_row()
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.vocab.lookup(token)
    }

    pub fn vector(&self, token: &str) -> &[f64] {
        self.vectors.row(self.lookup(token))
    }
}

/// Reads `<vocab_size> <dim>` followed by `word v1 … v_dim` lines.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let content = fs::read_to_string(path)?;
    parse_embeddings(path, &content)
}

fn parse_embeddings(path: &Path, content: &str) -> Result<EmbeddingTable> {
    let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse(path, 1, "empty embedding file"));
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match parts.as_slice() {
        [n, d] => match (n.parse::<usize>(), d.parse::<usize>()) {
            (Ok(n), Ok(d)) if d > 0 => (n, d),
            _ => return Err(Error::parse(path, 1, "header must be `<vocab_size> <dim>`")),
        },
        _ => return Err(Error::parse(path, 1, "header must be `<vocab_size> <dim>`")),
    };
    let mut words = Vec::with_capacity(count);
    let mut data = Vec::with_capacity((count + 1) * dim);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("line is nonblank").to_lowercase();
        let start = data.len();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("invalid real {f:?}")))?;
            data.push(v);
        }
        if data.len() - start != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {dim} values for {word:?}, found {}", data.len() - start),
            ));
        }
        words.push(word);
    }
    if words.len() != count {
        return Err(Error::parse(
            path,
            1,
            format!("header announces {count} words, file has {}", words.len()),
        ));
    }
    let vocab = Vocab::new(words).map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let n = data.len() as f64;
    let spread = if data.is_empty() {
        0.1
    } else {
        let mean = data.iter().sum::<f64>() / n;
        (data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-3)
    };
    let oov = gaussian(1, dim, spread, &mut ChaCha8Rng::seed_from_u64(OOV_SEED));
    data.extend_from_slice(oov.as_slice());
    let vectors = Matrix::from_vec(vocab.rows(), dim, data)?;
    EmbeddingTable::new(vocab, vectors, true)
}

/// Writes the known rows (not the OOV row) in the format read by [`load_embeddings`].
pub fn write_embeddings(table: &EmbeddingTable, path: &Path) -> Result<()> {
    let mut out = format!("{} {}\n", table.vocab.len(), table.dim());
    for (i, w) in table.vocab.words().iter().enumerate() {
        out.push_str(w);
        for v in table.vectors.row(i) {
            out.push(' ');
            out.push_str(&format_real(*v));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Row indices of each token and tag of `text` in the given tables.
pub fn lexical_ids(
    text: &LabeledText,
    words: Option<&EmbeddingTable>,
    tags: Option<&EmbeddingTable>,
) -> (Vec<usize>, Vec<usize>) {
    let w = words.map_or_else(Vec::new, |t| text.tokens.iter().map(|tok| t.lookup(tok)).collect());
    let g = tags.map_or_else(Vec::new, |t| text.pos_tags.iter().map(|tag| t.lookup(tag)).collect());
    (w, g)
}

/// Row `t` is the word vector of token `t` followed by its tag vector.
/// Either table may be omitted to build a single-feature input.
pub fn build_lexical_input(
    text: &LabeledText,
    words: Option<&EmbeddingTable>,
    tags: Option<&EmbeddingTable>,
) -> Result<Matrix> {
    let dw = words.map_or(0, EmbeddingTable::dim);
    let dt = tags.map_or(0, EmbeddingTable::dim);
    if dw + dt == 0 {
        return Err(Error::contract("lexical input needs a word or a tag table"));
    }
    let mut x = Matrix::zeros(text.len(), dw + dt);
    for t in 0..text.len() {
        let row = x.row_mut(t);
        if let Some(w) = words {
            row[..dw].copy_from_slice(w.vector(&text.tokens[t]));
        }
        if let Some(g) = tags {
            row[dw..].copy_from_slice(g.vector(&text.pos_tags[t]));
        }
    }
    Ok(x)
}

/// Per-dimension mean and standard deviation of training prosody.
#[derive(Debug, Clone, PartialEq)]
pub struct ProsodyStats {
    pub mean: [f64; PROSODY_DIM],
    pub std: [f64; PROSODY_DIM],
}

impl ProsodyStats {
    pub fn identity() -> Self {
        ProsodyStats {
            mean: [0.0; PROSODY_DIM],
            std: [1.0; PROSODY_DIM],
        }
    }

    /// Divisor for dimension `k`; a zero deviation scales by 1.
    pub fn scale(&self, k: usize) -> f64 {
        if self.std[k] > 0.0 {
            self.std[k]
        } else {
            1.0
        }
    }

    pub fn normalize(&self, v: &[f64; PROSODY_DIM]) -> [f64; PROSODY_DIM] {
        std::array::from_fn(|k| (v[k] - self.mean[k]) / self.scale(k))
    }
}

/// Population statistics over every word position of every text that has prosody.
pub fn fit_prosody_stats<'a>(texts: impl IntoIterator<Item = &'a LabeledText>) -> Result<ProsodyStats> {
    let mut n = 0usize;
    let mut sum = [0.0; PROSODY_DIM];
    let mut sq = [0.0; PROSODY_DIM];
    let vectors: Vec<&[f64; PROSODY_DIM]> = texts
        .into_iter()
        .filter_map(|t| t.prosody.as_ref())
        .flatten()
        .collect();
    for v in &vectors {
        n += 1;
        for k in 0..PROSODY_DIM {
            sum[k] += v[k];
        }
    }
    if n == 0 {
        return Err(Error::data("no prosodic vectors to fit normalization statistics"));
    }
    let mean: [f64; PROSODY_DIM] = std::array::from_fn(|k| sum[k] / n as f64);
    for v in &vectors {
        for k in 0..PROSODY_DIM {
            sq[k] += (v[k] - mean[k]).powi(2);
        }
    }
    let std = std::array::from_fn(|k| (sq[k] / n as f64).sqrt());
    Ok(ProsodyStats { mean, std })
}

/// Z-scored `m × 13` prosodic matrix.
pub fn build_prosodic_input(text: &LabeledText, stats: &ProsodyStats) -> Result<Matrix> {
    let Some(prosody) = &text.prosody else {
        return Err(Error::Unsupported(format!(
            "text {:?} has no prosody; use a lexical-only model (alpha = 1)",
            text.id
        )));
    };
    let mut x = Matrix::zeros(text.len(), PROSODY_DIM);
    for (t, v) in prosody.iter().enumerate() {
        x.row_mut(t).copy_from_slice(&stats.normalize(v));
    }
    Ok(x)
}

/// F0, intensity and duration of one aligned vowel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VowelMeasure {
    pub pitch: f64,
    pub intensity: f64,
    pub duration: f64,
}

/// Packs per-vowel measurements into the 13-dim word vector:
/// first, last, penultimate and antepenultimate vowel, then the following pause.
///
/// Slots a short word cannot fill repeat its last vowel; a word with no aligned
/// vowels gets zeros.
pub fn word_prosody(vowels: &[VowelMeasure], pause: f64) -> [f64; PROSODY_DIM] {
    let mut out = [0.0; PROSODY_DIM];
    out[PROSODY_DIM - 1] = pause;
    let Some(last) = vowels.last() else {
        return out;
    };
    let n = vowels.len();
    let pick = |from_end: usize| if n > from_end { &vowels[n - 1 - from_end] } else { last };
    let slots = [&vowels[0], last, pick(1), pick(2)];
    for (s, v) in slots.iter().enumerate() {
        out[3 * s] = v.pitch;
        out[3 * s + 1] = v.intensity;
        out[3 * s + 2] = v.duration;
    }
    out
}
