use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::transcription::{scan, tokenize_with_locus, Piece};
use super::{folio_of, LocusRecord, TokenizerRules};
use crate::{par, rng, Error, Result};

/// How locus text is grouped into documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segmentation {
    Page,
    /// Recto and verso pages of one leaf merged.
    Folio,
    /// Split at paragraph end markers.
    Paragraph,
    /// `n` tokens drawn without replacement from each page.
    FixedWindow { n: usize, seed: u64 },
}

impl fmt::Display for Segmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segmentation::Page => f.write_str("page"),
            Segmentation::Folio => f.write_str("folio"),
            Segmentation::Paragraph => f.write_str("paragraph"),
            Segmentation::FixedWindow { n, seed } => write!(f, "fixed_window({n},{seed})"),
        }
    }
}

impl FromStr for Segmentation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "page" => return Ok(Segmentation::Page),
            "folio" => return Ok(Segmentation::Folio),
            "paragraph" => return Ok(Segmentation::Paragraph),
            _ => {}
        }
        let inner = s
            .strip_prefix("fixed_window(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::arg(format!("unknown segmentation mode {s:?}")))?;
        let (n, seed) = inner
            .split_once(',')
            .ok_or_else(|| Error::arg(format!("fixed_window needs (n,seed), got {s:?}")))?;
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("bad window size in {s:?}")))?;
        if n <= 0 {
            return Err(Error::arg(format!("window size must be positive, got {n}")));
        }
        let seed = seed
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("bad seed in {s:?}")))?;
        Ok(Segmentation::FixedWindow {
            n: n as usize,
            seed,
        })
    }
}

impl Serialize for Segmentation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Segmentation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An ordered token list with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    /// Metadata key. For folio documents this is the first page of the folio.
    pub page: String,
    pub mode: Segmentation,
    pub tokens: Vec<String>,
}

/// Groups records by key in first-appearance order.
fn group_by<'a>(
    records: &'a [LocusRecord],
    key: impl Fn(&LocusRecord) -> &str,
) -> Vec<(String, Vec<&'a LocusRecord>)> {
    let mut groups: Vec<(String, Vec<&LocusRecord>)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for r in records {
        let k = key(r);
        let slot = *index.entry(k.to_string()).or_insert_with(|| {
            groups.push((k.to_string(), Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(r);
    }
    groups
}

fn locus_label(r: &LocusRecord) -> String {
    format!("{}.{}", r.page, r.locus_tag)
}

fn group_tokens(recs: &[&LocusRecord], rules: &TokenizerRules) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    for r in recs {
        tokens.extend(tokenize_with_locus(&r.raw_text, rules, &locus_label(r))?);
    }
    Ok(tokens)
}

/// Segments parsed records into documents.
///
/// Pages are processed independently (in parallel when enabled); the window
/// sampler for each page is seeded from the global seed and the page id, so
/// the output does not depend on scheduling. Documents that end up empty are
/// dropped, as are pages shorter than the window in fixed-window mode.
pub fn segment_documents(
    records: &[LocusRecord],
    rules: &TokenizerRules,
    mode: Segmentation,
) -> Result<Vec<Document>> {
    rules.validate()?;
    let docs: Vec<Document> = match mode {
        Segmentation::Page => {
            let pages = group_by(records, |r| &r.page);
            let built = par::map_slice(&pages, |(page, recs)| {
                group_tokens(recs, rules).map(|tokens| Document {
                    id: page.clone(),
                    page: page.clone(),
                    mode,
                    tokens,
                })
            });
            built.into_iter().collect::<Result<_>>()?
        }
        Segmentation::Folio => {
            let folios = group_by(records, |r| folio_of(&r.page));
            let built = par::map_slice(&folios, |(folio, recs)| {
                group_tokens(recs, rules).map(|tokens| Document {
                    id: folio.clone(),
                    page: recs[0].page.clone(),
                    mode,
                    tokens,
                })
            });
            built.into_iter().collect::<Result<_>>()?
        }
        Segmentation::Paragraph => {
            let pages = group_by(records, |r| &r.page);
            let built = par::map_slice(&pages, |(page, recs)| paragraphs(page, recs, rules));
            let mut docs = Vec::new();
            for d in built {
                docs.extend(d?);
            }
            docs
        }
        Segmentation::FixedWindow { n, seed } => {
            if n == 0 {
                return Err(Error::arg("window size must be positive"));
            }
            let pages = group_by(records, |r| &r.page);
            let built = par::map_slice(&pages, |(page, recs)| -> Result<Option<Document>> {
                let tokens = group_tokens(recs, rules)?;
                if tokens.len() < n {
                    return Ok(None);
                }
                let mut rng = rng::seeded(rng::derive_seed(seed, page));
                let mut picks = index::sample(&mut rng, tokens.len(), n).into_vec();
                picks.sort_unstable();
                Ok(Some(Document {
                    id: format!("{page}#w{n}"),
                    page: page.clone(),
                    mode,
                    tokens: picks.into_iter().map(|i| tokens[i].clone()).collect(),
                }))
            });
            let mut docs = Vec::new();
            for d in built {
                if let Some(d) = d? {
                    docs.push(d);
                }
            }
            docs
        }
    };
    Ok(docs.into_iter().filter(|d| !d.tokens.is_empty()).collect())
}

fn paragraphs(page: &str, recs: &[&LocusRecord], rules: &TokenizerRules) -> Result<Vec<Document>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    let close = |current: &mut Vec<String>, out: &mut Vec<Document>| {
        if !current.is_empty() {
            out.push(Document {
                id: format!("{page}#p{}", out.len() + 1),
                page: page.to_string(),
                mode: Segmentation::Paragraph,
                tokens: std::mem::take(current),
            });
        }
    };
    for r in recs {
        for piece in scan(&r.raw_text, rules, &locus_label(r))? {
            match piece {
                Piece::Token(t) => current.push(t),
                Piece::ParagraphEnd => close(&mut current, &mut out),
            }
        }
    }
    close(&mut current, &mut out);
    Ok(out)
}

/// Writes one JSON object per document.
pub fn write_jsonl<W: Write>(docs: &[Document], mut w: W) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")
            .map_err(|e| Error::io("<jsonl output>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<jsonl input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        docs.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(docs)
}
