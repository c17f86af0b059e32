use super::Label;
use crate::error::{Error, Result};

/// Marks that end a sentence. All of them map to the single class [`Label::B`].
pub const BOUNDARY_MARKS: [char; 5] = ['.', '!', '?', ':', ';'];

pub fn is_boundary_mark(c: char) -> bool {
    BOUNDARY_MARKS.contains(&c)
}

fn is_mark(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Splits a whitespace-separated transcript into lowercase words and B/NB labels.
///
/// Punctuation attached to the edges of a word is split off first. A boundary
/// mark labels the word before it as B (runs of marks collapse to one B);
/// other marks are dropped, as are marks before the first word.
pub fn labels_from_punctuation(raw: &str) -> Result<(Vec<String>, Vec<Label>)> {
    let mut tokens: Vec<String> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mark = |c: char, labels: &mut Vec<Label>| {
        if is_boundary_mark(c) {
            if let Some(last) = labels.last_mut() {
                *last = Label::B;
            }
        }
    };
    for chunk in raw.split_whitespace() {
        let start = chunk.find(|c: char| !is_mark(c));
        let Some(start) = start else {
            chunk.chars().for_each(|c| mark(c, &mut labels));
            continue;
        };
        let end = chunk
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_mark(c))
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(chunk.len());
        chunk[..start].chars().for_each(|c| mark(c, &mut labels));
        tokens.push(chunk[start..end].to_lowercase());
        labels.push(Label::NB);
        chunk[end..].chars().for_each(|c| mark(c, &mut labels));
    }
    if tokens.is_empty() {
        return Err(Error::data("transcript has no words after punctuation removal"));
    }
    Ok((tokens, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{B, NB};

    fn run(s: &str) -> (Vec<String>, Vec<Label>) {
        labels_from_punctuation(s).unwrap()
    }

    #[test]
    fn spaced_periods() {
        let (t, l) = run("ela correu . ela caiu .");
        assert_eq!(t, ["ela", "correu", "ela", "caiu"]);
        assert_eq!(l, [NB, B, NB, B]);
    }

    #[test]
    fn exclamation() {
        assert_eq!(run("fim !"), (vec!["fim".to_string()], vec![B]));
    }

    #[test]
    fn no_punctuation() {
        assert_eq!(run("a b c").1, [NB, NB, NB]);
    }

    #[test]
    fn attached_and_collapsed_marks() {
        let (t, l) = run("Ela caiu?! E depois, chorou... Fim;");
        assert_eq!(t, ["ela", "caiu", "e", "depois", "chorou", "fim"]);
        assert_eq!(l, [NB, B, NB, NB, B, B]);
    }

    #[test]
    fn colon_and_semicolon_are_boundaries() {
        assert_eq!(run("disse : vem ; foi").1, [B, B, NB]);
    }

    #[test]
    fn leading_marks_dropped() {
        let (t, l) = run(". , ela foi");
        assert_eq!(t, ["ela", "foi"]);
        assert_eq!(l, [NB, NB]);
    }

    #[test]
    fn internal_punctuation_kept() {
        let (t, _) = run("guarda-chuva d'água 3.5");
        assert_eq!(t, ["guarda-chuva", "d'água", "3.5"]);
    }

    #[test]
    fn punctuation_only_is_error() {
        assert!(labels_from_punctuation(". ! ?").is_err());
        assert!(labels_from_punctuation("   ").is_err());
    }
}
