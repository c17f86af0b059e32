//! Transcript corpora: labeled texts, punctuation-derived labels, file formats,
//! and synthetic corpora with controllable boundary cues.

mod io;
mod punct;
mod stats;
mod synth;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

pub use io::{corpus_checksum, format_real, read_corpus, read_text_file, text_to_tsv, write_corpus, CorpusFormat, UNTAGGED};
pub use punct::{labels_from_punctuation, is_boundary_mark, BOUNDARY_MARKS};
pub use stats::{corpus_stats, CorpusStats};
pub use synth::{synth_generate, synth_vocabulary, SynthSpec, TAGSET};

use crate::error::{Error, Result};

/// Word-level prosodic vector width: F0, intensity and duration for four vowels, plus the following pause.
pub const PROSODY_DIM: usize = 13;
/// Index of the pause-duration feature.
pub const PAUSE_INDEX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    /// Not followed by a sentence boundary.
    NB,
    /// Precedes a sentence boundary.
    B,
}

impl Label {
    /// Class index used by the networks: NB = 0, B = 1.
    pub fn index(self) -> usize {
        match self {
            Label::NB => 0,
            Label::B => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 1 {
            Label::B
        } else {
            Label::NB
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::NB => "NB",
            Label::B => "B",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "B" => Ok(Label::B),
            "NB" => Ok(Label::NB),
            other => Err(format!("unknown label symbol {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Ctl,
    Mci,
    Ad,
    Other,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Ctl => "CTL",
            Group::Mci => "MCI",
            Group::Ad => "AD",
            Group::Other => "OTHER",
        })
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "CTL" => Ok(Group::Ctl),
            "MCI" => Ok(Group::Mci),
            "AD" => Ok(Group::Ad),
            "OTHER" => Ok(Group::Other),
            other => Err(format!("unknown group {other:?}")),
        }
    }
}

/// One transcript with parallel per-token annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledText {
    pub id: String,
    pub tokens: Vec<String>,
    pub pos_tags: Vec<String>,
    pub prosody: Option<Vec<[f64; PROSODY_DIM]>>,
    pub labels: Vec<Label>,
    pub group: Group,
}

impl LabeledText {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<String>,
        pos_tags: Vec<String>,
        prosody: Option<Vec<[f64; PROSODY_DIM]>>,
        labels: Vec<Label>,
        group: Group,
    ) -> Result<Self> {
        let text = LabeledText {
            id: id.into(),
            tokens,
            pos_tags,
            prosody,
            labels,
            group,
        };
        text.validate()?;
        Ok(text)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn has_prosody(&self) -> bool {
        self.prosody.is_some()
    }

    pub fn boundary_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::B).count()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.tokens.len();
        if m == 0 {
            return Err(Error::data(format!("text {:?} is empty", self.id)));
        }
        if self.pos_tags.len() != m || self.labels.len() != m {
            return Err(Error::data(format!(
                "text {:?}: {} tokens, {} tags, {} labels",
                self.id,
                m,
                self.pos_tags.len(),
                self.labels.len()
            )));
        }
        if let Some(p) = &self.prosody {
            if p.len() != m {
                return Err(Error::data(format!(
                    "text {:?}: {} tokens but {} prosodic vectors",
                    self.id,
                    m,
                    p.len()
                )));
            }
        }
        if let Some(t) = self.tokens.iter().find(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(Error::data(format!("text {:?}: invalid token {t:?}", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub texts: Vec<LabeledText>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, texts: Vec<LabeledText>) -> Result<Self> {
        let corpus = Corpus {
            name: name.into(),
            texts,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for t in &self.texts {
            t.validate()?;
            if !seen.insert(t.id.as_str()) {
                return Err(Error::data(format!("duplicate text id {:?} in corpus {:?}", t.id, self.name)));
            }
        }
        let with = self.texts.iter().filter(|t| t.has_prosody()).count();
        if with != 0 && with != self.texts.len() {
            return Err(Error::data(format!(
                "corpus {:?}: prosody present in {with} of {} texts (must be all or none)",
                self.name,
                self.texts.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn has_prosody(&self) -> bool {
        !self.texts.is_empty() && self.texts.iter().all(LabeledText::has_prosody)
    }
}
