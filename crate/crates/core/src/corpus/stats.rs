use super::Corpus;
use crate::error::{Error, Result};

/// Corpus-level size figures. Averages are ratios of totals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub n_texts: usize,
    pub n_sentences: usize,
    pub n_words: usize,
    pub avg_sentences_per_text: f64,
    pub avg_words_per_sentence: f64,
    pub boundary_rate: f64,
}

impl CorpusStats {
    pub fn from_counts(n_texts: usize, n_sentences: usize, n_words: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        CorpusStats {
            n_texts,
            n_sentences,
            n_words,
            avg_sentences_per_text: ratio(n_sentences, n_texts),
            avg_words_per_sentence: ratio(n_words, n_sentences),
            boundary_rate: ratio(n_sentences, n_words),
        }
    }
}

/// Sentences are counted as B labels.
pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::data("corpus statistics need at least one text"));
    }
    let sentences = corpus.texts.iter().map(|t| t.boundary_count()).sum();
    let words = corpus.texts.iter().map(|t| t.len()).sum();
    Ok(CorpusStats::from_counts(corpus.len(), sentences, words))
}
