use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One transcribed locus: a line or label of a page, as read by one
/// transcriber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocusRecord {
    pub folio: String,
    pub page: String,
    pub locus_tag: String,
    pub transcriber: char,
    pub raw_text: String,
    /// 1-based source line, for error messages.
    pub line: usize,
}

/// Character classes used to strip annotation from locus text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerRules {
    pub word_separators: BTreeSet<char>,
    /// Deleted in place; they never split a word.
    pub filler_chars: BTreeSet<char>,
    /// Open/close pairs whose content is dropped (`{plant}`, `<->`).
    pub comment_delimiters: Vec<(char, char)>,
    /// Close the current paragraph; they also separate words.
    pub paragraph_end_markers: BTreeSet<char>,
    pub selected_transcriber: char,
}

impl Default for TokenizerRules {
    fn default() -> Self {
        TokenizerRules {
            word_separators: ['.', ',', '-'].into_iter().collect(),
            filler_chars: ['!', '%'].into_iter().collect(),
            comment_delimiters: vec![('{', '}'), ('<', '>')],
            paragraph_end_markers: ['='].into_iter().collect(),
            selected_transcriber: 'H',
        }
    }
}

impl TokenizerRules {
    /// Uncertain word boundaries (`,`) join their neighbours instead of
    /// splitting them.
    pub fn with_comma_joins(mut self) -> Self {
        if self.word_separators.remove(&',') {
            self.filler_chars.insert(',');
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.word_separators.intersection(&self.filler_chars).next() {
            return Err(Error::arg(format!(
                "character {c:?} is both a word separator and a filler"
            )));
        }
        for &(open, close) in &self.comment_delimiters {
            if open == close {
                return Err(Error::arg(format!(
                    "comment delimiters must differ, got {open:?} twice"
                )));
            }
            for c in [open, close] {
                if self.word_separators.contains(&c)
                    || self.filler_chars.contains(&c)
                    || self.paragraph_end_markers.contains(&c)
                {
                    return Err(Error::arg(format!(
                        "comment delimiter {c:?} overlaps another character class"
                    )));
                }
            }
        }
        if self.selected_transcriber.is_whitespace() {
            return Err(Error::arg("selected transcriber must be a visible character"));
        }
        Ok(())
    }

    /// False for whitespace and every annotation or separator character.
    pub fn is_word_char(&self, c: char) -> bool {
        !(c.is_whitespace()
            || self.word_separators.contains(&c)
            || self.filler_chars.contains(&c)
            || self.paragraph_end_markers.contains(&c)
            || self
                .comment_delimiters
                .iter()
                .any(|&(o, cl)| c == o || c == cl))
    }
}

/// Reads and parses a transcription file.
pub fn read_transcription(path: &Path, rules: &TokenizerRules) -> Result<Vec<LocusRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_transcription(&text, rules)
}

/// Parses the line-oriented interlinear format.
///
/// Data lines look like `<f1r.P1.1;H> fachys.ykal`. Lines starting with `#`
/// are comments; blank lines and bare page headers (`<f1r>`) are skipped.
/// Only records from `rules.selected_transcriber` are returned, in file
/// order.
pub fn parse_transcription(raw: &str, rules: &TokenizerRules) -> Result<Vec<LocusRecord>> {
    let mut out = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let rest = line
            .strip_prefix('<')
            .ok_or_else(|| err(format!("expected a locus tag, found {line:?}")))?;
        let close = rest
            .find('>')
            .ok_or_else(|| err("locus tag has no closing `>`".into()))?;
        let tag = &rest[..close];
        let text = rest[close + 1..].trim();

        let Some((position, transcriber)) = tag.split_once(';') else {
            if !tag.contains('.') {
                // page header such as `<f1r>`
                continue;
            }
            return Err(err(format!("locus tag <{tag}> is missing `;T`")));
        };
        let mut chars = transcriber.chars();
        let (Some(t), None) = (chars.next(), chars.next()) else {
            return Err(err(format!(
                "transcriber code must be one character, got {transcriber:?}"
            )));
        };
        let (page, locus) = position
            .split_once('.')
            .ok_or_else(|| err(format!("locus tag <{tag}> has no locus part")))?;
        if page.is_empty() || locus.is_empty() {
            return Err(err(format!("locus tag <{tag}> has an empty page or locus")));
        }
        if t != rules.selected_transcriber {
            continue;
        }
        out.push(LocusRecord {
            folio: super::folio_of(page).to_string(),
            page: page.to_string(),
            locus_tag: locus.to_string(),
            transcriber: t,
            raw_text: text.to_string(),
            line: lineno,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Piece {
    Token(String),
    ParagraphEnd,
}

/// Splits locus text into tokens and paragraph breaks.
pub(crate) fn scan(raw: &str, rules: &TokenizerRules, locus: &str) -> Result<Vec<Piece>> {
    let mut pieces = Vec::new();
    let mut word = String::new();
    let mut open_comment: Option<char> = None;

    let flush = |word: &mut String, pieces: &mut Vec<Piece>| {
        if !word.is_empty() {
            pieces.push(Piece::Token(std::mem::take(word)));
        }
    };

    for c in raw.chars() {
        if let Some(close) = open_comment {
            if c == close {
                open_comment = None;
            }
            continue;
        }
        if let Some(&(_, close)) = rules.comment_delimiters.iter().find(|(o, _)| *o == c) {
            open_comment = Some(close);
            continue;
        }
        if rules.comment_delimiters.iter().any(|&(_, cl)| cl == c) {
            return Err(Error::Tokenize {
                locus: locus.to_string(),
                message: format!("unbalanced comment delimiter {c:?}"),
            });
        }
        if rules.filler_chars.contains(&c) {
            continue;
        }
        if rules.paragraph_end_markers.contains(&c) {
            flush(&mut word, &mut pieces);
            pieces.push(Piece::ParagraphEnd);
            continue;
        }
        if c.is_whitespace() || rules.word_separators.contains(&c) {
            flush(&mut word, &mut pieces);
            continue;
        }
        word.push(c);
    }
    if let Some(close) = open_comment {
        return Err(Error::Tokenize {
            locus: locus.to_string(),
            message: format!("comment is never closed (expected {close:?})"),
        });
    }
    flush(&mut word, &mut pieces);
    Ok(pieces)
}

/// Removes inline comments and fillers and splits on word separators.
pub fn tokenize_locus(raw_text: &str, rules: &TokenizerRules) -> Result<Vec<String>> {
    tokenize_with_locus(raw_text, rules, "<unknown>")
}

pub(crate) fn tokenize_with_locus(
    raw_text: &str,
    rules: &TokenizerRules,
    locus: &str,
) -> Result<Vec<String>> {
    Ok(scan(raw_text, rules, locus)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Token(t) => Some(t),
            Piece::ParagraphEnd => None,
        })
        .collect())
}
