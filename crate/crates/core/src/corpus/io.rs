use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{labels_from_punctuation, Corpus, Group, Label, LabeledText, PROSODY_DIM};
use crate::error::{Error, Result};

/// Tag assigned to every token of a `tokens`-format file, which carries no PoS column.
pub const UNTAGGED: &str = "UNK";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `token<TAB>tag<TAB>p1 … p13<TAB>label`, `#id` headers, blank-line separated.
    Tsv,
    /// One text per file, space-separated tokens with inline punctuation.
    Tokens,
}

impl CorpusFormat {
    pub fn extension(self) -> &'static str {
        match self {
            CorpusFormat::Tsv => "tsv",
            CorpusFormat::Tokens => "txt",
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "tokens" => Ok(CorpusFormat::Tokens),
            other => Err(format!("unknown corpus format {other:?} (expected tsv or tokens)")),
        }
    }
}

/// Reads a corpus from one file or from every matching file of a directory (sorted by name).
pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == format.extension()))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut texts = Vec::new();
    for file in &files {
        match format {
            CorpusFormat::Tsv => texts.extend(parse_tsv(file, &fs::read_to_string(file)?)?),
            CorpusFormat::Tokens => texts.push(read_text_file(file)?),
        }
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    Corpus::new(name, texts)
}

/// Reads one `tokens`-format transcript; the id is the file stem.
pub fn read_text_file(path: &Path) -> Result<LabeledText> {
    let raw = fs::read_to_string(path)?;
    let (tokens, labels) = labels_from_punctuation(&raw).map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tags = vec![UNTAGGED.to_string(); tokens.len()];
    LabeledText::new(id, tokens, tags, None, labels, Group::Other)
}

struct Pending {
    id: String,
    group: Group,
    line: usize,
    tokens: Vec<String>,
    tags: Vec<String>,
    prosody: Vec<Option<[f64; PROSODY_DIM]>>,
    labels: Vec<Label>,
}

impl Pending {
    fn finish(self, file: &Path) -> Result<LabeledText> {
        let have = self.prosody.iter().filter(|p| p.is_some()).count();
        let prosody = if have == 0 {
            None
        } else if have == self.prosody.len() {
            Some(self.prosody.into_iter().flatten().collect())
        } else {
            return Err(Error::parse(
                file,
                self.line,
                format!("text {:?} mixes rows with and without prosody", self.id),
            ));
        };
        LabeledText::new(self.id, self.tokens, self.tags, prosody, self.labels, self.group)
            .map_err(|e| Error::parse(file, self.line, e.to_string()))
    }
}

fn parse_tsv(file: &Path, content: &str) -> Result<Vec<LabeledText>> {
    let mut texts = Vec::new();
    let mut current: Option<Pending> = None;
    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            if let Some(p) = current.take() {
                texts.push(p.finish(file)?);
            }
            continue;
        }
        if let Some(header) = line.strip_prefix("#id ") {
            if let Some(p) = current.take() {
                texts.push(p.finish(file)?);
            }
            let parts: Vec<&str> = header.split_whitespace().collect();
            let [id, "group", group] = parts.as_slice() else {
                return Err(Error::parse(file, lineno, "expected `#id <text-id> group <CTL|MCI|AD|OTHER>`"));
            };
            let group = group.parse().map_err(|e: String| Error::parse(file, lineno, e))?;
            current = Some(Pending {
                id: id.to_string(),
                group,
                line: lineno,
                tokens: Vec::new(),
                tags: Vec::new(),
                prosody: Vec::new(),
                labels: Vec::new(),
            });
            continue;
        }
        let Some(p) = current.as_mut() else {
            return Err(Error::parse(file, lineno, "token line before any `#id` header"));
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                file,
                lineno,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        }
        let prosody = if cols[2] == "-" {
            None
        } else {
            let values: Vec<&str> = cols[2].split(' ').filter(|s| !s.is_empty()).collect();
            if values.len() != PROSODY_DIM {
                return Err(Error::parse(
                    file,
                    lineno,
                    format!("expected {PROSODY_DIM} prosodic values, found {}", values.len()),
                ));
            }
            let mut v = [0.0f64; PROSODY_DIM];
            for (slot, s) in v.iter_mut().zip(values) {
                *slot = s
                    .parse()
                    .map_err(|_| Error::parse(file, lineno, format!("invalid real {s:?}")))?;
                if !slot.is_finite() {
                    return Err(Error::parse(file, lineno, format!("non-finite prosodic value {s:?}")));
                }
            }
            Some(v)
        };
        let label = cols[3].parse().map_err(|e: String| Error::parse(file, lineno, e))?;
        p.tokens.push(cols[0].to_string());
        p.tags.push(cols[1].to_string());
        p.prosody.push(prosody);
        p.labels.push(label);
    }
    if let Some(p) = current.take() {
        texts.push(p.finish(file)?);
    }
    Ok(texts)
}

/// Shortest scientific rendering with at least 6 significant digits that parses back exactly.
pub fn format_real(v: f64) -> String {
    for precision in 5..17 {
        let s = format!("{v:.precision$e}");
        if s.parse::<f64>().ok() == Some(v) {
            return s;
        }
    }
    format!("{v:.16e}")
}

pub fn text_to_tsv(text: &LabeledText) -> String {
    let mut out = format!("#id {} group {}\n", text.id, text.group);
    for t in 0..text.len() {
        let prosody = match &text.prosody {
            None => "-".to_string(),
            Some(p) => p[t].iter().map(|&v| format_real(v)).collect::<Vec<_>>().join(" "),
        };
        let _ = writeln!(out, "{}\t{}\t{}\t{}", text.tokens[t], text.pos_tags[t], prosody, text.labels[t]);
    }
    out
}

/// CRC-32 of the corpus rendered as TSV, in text order.
pub fn corpus_checksum(corpus: &Corpus) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for text in &corpus.texts {
        h.update(text_to_tsv(text).as_bytes());
    }
    h.finalize()
}

fn text_to_tokens(text: &LabeledText) -> String {
    let mut parts = Vec::with_capacity(text.len() * 2);
    for (tok, label) in text.tokens.iter().zip(&text.labels) {
        parts.push(tok.as_str());
        if *label == Label::B {
            parts.push(".");
        }
    }
    parts.join(" ") + "\n"
}

/// Writes one file per text, named `<id>.<ext>`, into `dir`.
pub fn write_corpus(corpus: &Corpus, dir: &Path, format: CorpusFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(corpus.len());
    for text in &corpus.texts {
        if text.id.is_empty() || text.id.contains(['/', '\\']) || text.id.chars().any(char::is_whitespace) {
            return Err(Error::data(format!("text id {:?} cannot be used as a file name", text.id)));
        }
        let path = dir.join(format!("{}.{}", text.id, format.extension()));
        let body = match format {
            CorpusFormat::Tsv => text_to_tsv(text),
            CorpusFormat::Tokens => text_to_tokens(text),
        };
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "#id t1 group CTL\n\
ela\tPROPESS\t1 2 3 4 5 6 7 8 9 10 11 12 0.25\tNB\n\
correu\tV\t1 2 3 4 5 6 7 8 9 10 11 12 0\tNB\n\
muito\tADV\t1 2 3 4 5 6 7 8 9 10 11 12 0.8\tB\n";

    #[test]
    fn parses_three_line_text() {
        let texts = parse_tsv(Path::new("x.tsv"), SAMPLE).unwrap();
        assert_eq!(texts.len(), 1);
        let t = &texts[0];
        assert_eq!(t.len(), 3);
        assert_eq!(t.group, Group::Ctl);
        assert_eq!(t.labels, [Label::NB, Label::NB, Label::B]);
        assert_eq!(t.prosody.as_ref().unwrap()[2][12], 0.8);
    }

    #[test]
    fn twelve_prosody_columns_rejected() {
        let bad = "#id t1 group CTL\nela\tN\t1 2 3 4 5 6 7 8 9 10 11 12\tNB\n";
        let err = parse_tsv(Path::new("bad.tsv"), bad).unwrap_err().to_string();
        assert!(err.contains("expected 13 prosodic values"), "{err}");
        assert!(err.contains("bad.tsv:2"), "{err}");
    }

    #[test]
    fn unknown_label_rejected() {
        let bad = "#id t1 group CTL\nela\tN\t-\tX\n";
        assert!(matches!(parse_tsv(Path::new("b.tsv"), bad), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_column_rejected() {
        let bad = "#id t1 group CTL\nela\tN\tNB\n";
        assert!(matches!(parse_tsv(Path::new("b.tsv"), bad), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn format_real_keeps_six_digits_and_roundtrips() {
        for v in [1.0, 0.1, -3.25e-7, 1.0 / 3.0, 123456.789, 0.0] {
            let s = format_real(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert!(mantissa.len() >= 6, "{s}");
        }
    }
}
