//! Vocabulary construction, bag-of-words counts and tf-idf weights.
//!
//! `w(t,d) = count(t,d) * log10(N / df(t))`, with raw term frequency and no
//! smoothing unless the options ask for it.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::linalg::DenseMatrix;
use crate::{par, Error, Result};

/// Sorted list of terms; column `i` of every matrix is `terms[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms, sorting and de-duplicating them.
    pub fn from_terms<I: IntoIterator<Item = String>>(terms: I) -> Self {
        let mut terms: Vec<String> = terms.into_iter().collect();
        terms.sort();
        terms.dedup();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { terms, index }
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }
}

/// Every token with corpus frequency `>= min_count`.
pub fn build_vocabulary(docs: &[Document], min_count: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::arg("empty corpus"));
    }
    if min_count == 0 {
        return Err(Error::arg("min_count must be at least 1"));
    }
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        for t in &d.tokens {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let vocab = Vocabulary::from_terms(
        freq.into_iter()
            .filter(|&(_, c)| c >= min_count)
            .map(|(t, _)| t.to_string()),
    );
    if vocab.is_empty() {
        return Err(Error::invalid("empty vocabulary"));
    }
    Ok(vocab)
}

/// Document-term counts, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    pub doc_ids: Vec<String>,
    pub vocab: Vocabulary,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl CountMatrix {
    pub fn from_rows(doc_ids: Vec<String>, vocab: Vocabulary, rows: Vec<Vec<u32>>) -> Result<Self> {
        if rows.len() != doc_ids.len() {
            return Err(Error::arg("one doc id per row required"));
        }
        let cols = vocab.len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::arg("every row must have one entry per vocabulary term"));
        }
        Ok(CountMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
            doc_ids,
            vocab,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.rows
    }

    pub fn n_terms(&self) -> usize {
        self.cols
    }

    pub fn get(&self, d: usize, t: usize) -> u32 {
        self.data[d * self.cols + t]
    }

    pub fn row(&self, d: usize) -> &[u32] {
        &self.data[d * self.cols..(d + 1) * self.cols]
    }

    pub fn total(&self) -> u64 {
        self.data.iter().map(|&c| u64::from(c)).sum()
    }

    /// Number of documents containing each term.
    pub fn document_frequency(&self) -> Vec<usize> {
        let mut df = vec![0usize; self.cols];
        for d in 0..self.rows {
            for (slot, &c) in df.iter_mut().zip(self.row(d)) {
                if c > 0 {
                    *slot += 1;
                }
            }
        }
        df
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|&c| f64::from(c)).collect(),
        )
        .expect("counts are finite")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "doc_id,{}", self.vocab.terms().join(","))?;
        for d in 0..self.rows {
            let cells: Vec<String> = self.row(d).iter().map(u32::to_string).collect();
            writeln!(w, "{},{}", self.doc_ids[d], cells.join(","))?;
        }
        Ok(())
    }
}

/// Counts vocabulary terms per document; out-of-vocabulary tokens are
/// ignored.
pub fn bow_matrix(docs: &[Document], vocab: &Vocabulary) -> Result<CountMatrix> {
    if docs.is_empty() {
        return Err(Error::arg("empty document list"));
    }
    if vocab.is_empty() {
        return Err(Error::arg("empty vocabulary"));
    }
    let rows: Vec<Vec<u32>> = par::map_slice(docs, |d| {
        let mut row = vec![0u32; vocab.len()];
        for t in &d.tokens {
            if let Some(i) = vocab.id(t) {
                row[i] += 1;
            }
        }
        row
    });
    for (d, row) in docs.iter().zip(&rows) {
        if row.iter().all(|&c| c == 0) {
            log::warn!("document {} has no in-vocabulary tokens", d.id);
        }
    }
    CountMatrix::from_rows(
        docs.iter().map(|d| d.id.clone()).collect(),
        vocab.clone(),
        rows,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfidfOptions {
    /// Replace `count` by `1 + log10(count)` for nonzero counts.
    pub log_tf: bool,
    /// Scale each row to unit Euclidean norm.
    pub l2_normalize: bool,
}

/// tf-idf weights, same shape and labels as the counts they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub doc_ids: Vec<String>,
    pub vocab: Vocabulary,
    pub weights: DenseMatrix,
}

impl WeightMatrix {
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        self.weights.write_csv(w, Some(&self.doc_ids), self.vocab.terms())
    }
}

pub fn tfidf_transform(counts: &CountMatrix) -> WeightMatrix {
    tfidf_with(counts, TfidfOptions::default())
}

pub fn tfidf_with(counts: &CountMatrix, opts: TfidfOptions) -> WeightMatrix {
    let n = counts.n_docs() as f64;
    let idf: Vec<f64> = counts
        .document_frequency()
        .into_iter()
        .map(|df| if df == 0 { 0.0 } else { (n / df as f64).log10() })
        .collect();
    let mut weights = DenseMatrix::zeros(counts.n_docs(), counts.n_terms());
    par::for_each_row_mut(weights.as_mut_slice(), counts.n_terms(), |d, row| {
        for ((w, &c), &idf) in row.iter_mut().zip(counts.row(d)).zip(&idf) {
            if c > 0 {
                let tf = if opts.log_tf {
                    1.0 + f64::from(c).log10()
                } else {
                    f64::from(c)
                };
                *w = tf * idf;
            }
        }
        if opts.l2_normalize {
            let norm = crate::linalg::norm(row);
            if norm > 0.0 {
                row.iter_mut().for_each(|w| *w /= norm);
            }
        }
    });
    WeightMatrix {
        doc_ids: counts.doc_ids.clone(),
        vocab: counts.vocab.clone(),
        weights,
    }
}

/// Shortcut: vocabulary, counts and weights in one go.
pub fn vectorize(docs: &[Document], min_count: usize, opts: TfidfOptions) -> Result<(CountMatrix, WeightMatrix)> {
    let vocab = build_vocabulary(docs, min_count)?;
    let counts = bow_matrix(docs, &vocab)?;
    let weights = tfidf_with(&counts, opts);
    Ok((counts, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Segmentation;

    fn doc(id: &str, tokens: &[&str]) -> Document {
        Document {
            id: id.into(),
            page: id.into(),
            mode: Segmentation::Page,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn vocabulary_examples() {
        let docs = [doc("d1", &["a", "b"]), doc("d2", &["b"])];
        assert_eq!(build_vocabulary(&docs, 1).unwrap().terms(), ["a", "b"]);
        assert_eq!(build_vocabulary(&docs, 2).unwrap().terms(), ["b"]);
        let err = build_vocabulary(&docs, 3).unwrap_err();
        assert!(err.to_string().contains("empty vocabulary"));
        assert!(build_vocabulary(&[], 1).is_err());
    }

    #[test]
    fn bow_examples() {
        let vocab = Vocabulary::from_terms(["a".to_string(), "b".to_string()]);
        let m = bow_matrix(&[doc("d", &["a", "a", "b"]), doc("o", &["zz"])], &vocab).unwrap();
        assert_eq!(m.row(0), &[2, 1]);
        assert_eq!(m.row(1), &[0, 0]);
        assert!(bow_matrix(&[], &vocab).is_err());
    }

    #[test]
    fn tfidf_direct_evaluation() {
        // N = 10, one document holds the term three times
        let mut rows = vec![vec![1u32, 0]; 10];
        rows[0] = vec![1, 3];
        let ids = (0..10).map(|i| format!("d{i}")).collect();
        let vocab = Vocabulary::from_terms(["rare".to_string(), "common".to_string()]);
        let counts = CountMatrix::from_rows(ids, vocab, rows).unwrap();
        let w = tfidf_transform(&counts);
        // columns are sorted: common, rare
        assert!((w.weights.get(0, 1) - 3.0).abs() < 1e-15);
        for d in 0..10 {
            assert_eq!(w.weights.get(d, 0), 0.0);
        }
    }

    #[test]
    fn options() {
        let docs = [doc("d1", &["a", "a", "a", "a", "a", "a", "a", "a", "a", "a", "b"]), doc("d2", &["b"])];
        let (counts, _) = vectorize(&docs, 1, TfidfOptions::default()).unwrap();
        let lt = tfidf_with(&counts, TfidfOptions { log_tf: true, l2_normalize: false });
        assert!((lt.weights.get(0, 0) - 2.0 * 2f64.log10()).abs() < 1e-15);
        let l2 = tfidf_with(&counts, TfidfOptions { log_tf: false, l2_normalize: true });
        assert!((l2.weights.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_is_stable() {
        let docs = [doc("d1", &["b", "a"]), doc("d2", &["b"])];
        let (counts, weights) = vectorize(&docs, 1, TfidfOptions::default()).unwrap();
        let mut c = Vec::new();
        counts.write_csv(&mut c).unwrap();
        assert_eq!(String::from_utf8(c).unwrap(), "doc_id,a,b\nd1,1,1\nd2,0,1\n");
        let mut a = Vec::new();
        let mut b = Vec::new();
        weights.write_csv(&mut a).unwrap();
        weights.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            String::from_utf8(a).unwrap(),
            "doc_id,a,b\nd1,0.301029995664,0\nd2,0,0\n"
        );
    }
}
