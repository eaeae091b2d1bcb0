//! LSA and NMF topic models over tf-idf weights, plus the topic assignment
//! and top-term reports shared by every model kind.

use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, DenseMatrix};
use crate::vectorize::{Vocabulary, WeightMatrix};
use crate::{numfmt, par, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lsa,
    Nmf,
    Lda,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lsa => "lsa",
            ModelKind::Nmf => "nmf",
            ModelKind::Lda => "lda",
        }
    }

    /// LSA factors are sign-indefinite; comparisons use magnitudes.
    fn signed(self) -> bool {
        self == ModelKind::Lsa
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsa" => Ok(ModelKind::Lsa),
            "nmf" => Ok(ModelKind::Nmf),
            "lda" => Ok(ModelKind::Lda),
            _ => Err(Error::arg(format!("unknown model {s:?} (expected lda, lsa or nmf)"))),
        }
    }
}

/// A fitted document-topic / topic-term factor pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicModel {
    pub kind: ModelKind,
    pub k: usize,
    pub seed: Option<u64>,
    pub doc_ids: Vec<String>,
    pub vocab: Vocabulary,
    /// `N x k`.
    pub doc_topic: DenseMatrix,
    /// `k x V`.
    pub topic_term: DenseMatrix,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    kind: ModelKind,
    k: usize,
    seed: Option<u64>,
    doc_ids: Vec<String>,
    vocabulary: Vec<String>,
    doc_topic: Vec<Vec<f64>>,
    topic_term: Vec<Vec<f64>>,
}

fn rounded(m: &DenseMatrix) -> Vec<Vec<f64>> {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(numfmt::round12).collect())
        .collect()
}

impl DocTopicModel {
    pub fn to_json(&self) -> Result<String> {
        let j = ModelJson {
            kind: self.kind,
            k: self.k,
            seed: self.seed,
            doc_ids: self.doc_ids.clone(),
            vocabulary: self.vocab.terms().to_vec(),
            doc_topic: rounded(&self.doc_topic),
            topic_term: rounded(&self.topic_term),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: ModelJson = serde_json::from_str(text)?;
        let vocab = Vocabulary::from_terms(j.vocabulary.iter().cloned());
        if vocab.terms() != j.vocabulary.as_slice() {
            return Err(Error::invalid("model vocabulary must be sorted and unique"));
        }
        let doc_topic = DenseMatrix::from_rows(&j.doc_topic)?;
        let topic_term = DenseMatrix::from_rows(&j.topic_term)?;
        let model = DocTopicModel {
            kind: j.kind,
            k: j.k,
            seed: j.seed,
            doc_ids: j.doc_ids,
            vocab,
            doc_topic,
            topic_term,
        };
        model.check_shapes()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.doc_ids.len();
        if self.doc_topic.shape() != (n, self.k) && !(n == 0 && self.doc_topic.rows() == 0) {
            return Err(Error::invalid(format!(
                "doc_topic is {:?}, expected ({n}, {})",
                self.doc_topic.shape(),
                self.k
            )));
        }
        if self.topic_term.shape() != (self.k, self.vocab.len()) {
            return Err(Error::invalid(format!(
                "topic_term is {:?}, expected ({}, {})",
                self.topic_term.shape(),
                self.k,
                self.vocab.len()
            )));
        }
        Ok(())
    }
}

/// Latent semantic analysis: `doc_topic = U·diag(S)`, `topic_term = Vᵀ`, so
/// their product is the rank-k SVD reconstruction of the weights.
pub fn lsa_fit(w: &WeightMatrix, k: usize) -> Result<DocTopicModel> {
    let (n, v) = w.weights.shape();
    if k == 0 || k > n.min(v) {
        return Err(Error::arg(format!("k must be in 1..={}, got {k}", n.min(v))));
    }
    if w.weights.as_slice().iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("all-zero weight matrix".into()));
    }
    let svd = linalg::truncated_svd(&w.weights, k, linalg::DEFAULT_TOL, linalg::DEFAULT_MAX_ITER)?;
    let mut doc_topic = svd.u;
    for i in 0..n {
        for (x, s) in doc_topic.row_mut(i).iter_mut().zip(&svd.s) {
            *x *= s;
        }
    }
    Ok(DocTopicModel {
        kind: ModelKind::Lsa,
        k,
        seed: None,
        doc_ids: w.doc_ids.clone(),
        vocab: w.vocab.clone(),
        doc_topic,
        topic_term: svd.v.transpose(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmfConfig {
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the relative objective decrease falls below this. Zero
    /// runs all `max_iter` iterations.
    pub tol: f64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        NmfConfig {
            seed: 0,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

const NMF_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NmfFit {
    pub model: DocTopicModel,
    /// Objective `‖A − W·H‖_F²` at initialization and after every iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// Squared Frobenius residual `‖A − W·Htᵀ‖²`, summed row by row.
fn nmf_objective(a: &DenseMatrix, w: &DenseMatrix, ht: &DenseMatrix) -> f64 {
    let per_row = par::map_indices(a.rows(), |d| {
        let wr = w.row(d);
        a.row(d)
            .iter()
            .enumerate()
            .map(|(t, &x)| {
                let r = x - linalg::dot(wr, ht.row(t));
                r * r
            })
            .sum::<f64>()
    });
    per_row.into_iter().sum()
}

/// `MᵀM` for a tall matrix, accumulated in row order.
fn small_gram(m: &DenseMatrix) -> DenseMatrix {
    let k = m.cols();
    let mut g = DenseMatrix::zeros(k, k);
    for i in 0..m.rows() {
        let r = m.row(i);
        for a in 0..k {
            for b in 0..k {
                let v = g.get(a, b) + r[a] * r[b];
                g.set(a, b, v);
            }
        }
    }
    g
}

/// `x ← x ∘ num / (x·gram + eps)` row by row.
fn multiplicative_step(x: &mut DenseMatrix, num: &DenseMatrix, gram: &DenseMatrix) {
    let k = x.cols();
    let current = x.clone();
    par::for_each_row_mut(x.as_mut_slice(), k, |i, row| {
        let xr = current.row(i);
        let nr = num.row(i);
        for (j, out) in row.iter_mut().enumerate() {
            let denom: f64 = (0..k).map(|l| xr[l] * gram.get(l, j)).sum();
            *out = xr[j] * nr[j] / (denom + NMF_EPS);
        }
    });
}

/// Nonnegative matrix factorization with Lee-Seung multiplicative updates
/// for the Frobenius objective.
///
/// Factors start uniform on (0,1) scaled by `sqrt(mean(A)/k)`. The objective
/// is non-increasing from one iteration to the next.
pub fn nmf_fit(w: &WeightMatrix, k: usize, cfg: &NmfConfig) -> Result<NmfFit> {
    let a = &w.weights;
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if !(cfg.tol >= 0.0 && cfg.tol.is_finite()) {
        return Err(Error::arg(format!("tolerance must be finite and nonnegative, got {}", cfg.tol)));
    }
    if let Some(pos) = a.as_slice().iter().position(|&x| x < 0.0) {
        return Err(Error::arg(format!(
            "negative entry at ({}, {})",
            pos / a.cols(),
            pos % a.cols()
        )));
    }
    let (n, v) = a.shape();
    if n == 0 || v == 0 {
        return Err(Error::arg("empty weight matrix"));
    }
    let mean = a.as_slice().iter().sum::<f64>() / (n * v) as f64;
    let scale = (mean / k as f64).sqrt();
    let mut r = rng::seeded(cfg.seed);
    let mut draw = |rows: usize| {
        DenseMatrix::from_vec(
            rows,
            k,
            (0..rows * k).map(|_| r.random::<f64>() * scale).collect(),
        )
        .expect("finite init")
    };
    let mut wm = draw(n);
    // H is kept transposed (V x k) so every product splits by long rows.
    let mut ht = draw(v);
    let at = a.transpose();

    let mut objective = vec![nmf_objective(a, &wm, &ht)];
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let atw = at.matmul(&wm);
        multiplicative_step(&mut ht, &atw, &small_gram(&wm));
        let aht = a.matmul(&ht);
        multiplicative_step(&mut wm, &aht, &small_gram(&ht));

        let obj = nmf_objective(a, &wm, &ht);
        let prev = *objective.last().expect("initial objective");
        objective.push(obj);
        if cfg.tol > 0.0 && (prev <= 0.0 || (prev - obj) / prev < cfg.tol) {
            break;
        }
    }
    Ok(NmfFit {
        model: DocTopicModel {
            kind: ModelKind::Nmf,
            k,
            seed: Some(cfg.seed),
            doc_ids: w.doc_ids.clone(),
            vocab: w.vocab.clone(),
            doc_topic: wm,
            topic_term: ht.transpose(),
        },
        objective,
        iterations,
    })
}

/// One topic index per document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub doc_ids: Vec<String>,
    pub topics: Vec<usize>,
}

impl TopicAssignment {
    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn topic_of(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids
            .iter()
            .position(|d| d == doc_id)
            .map(|i| self.topics[i])
    }

    /// Documents per topic.
    pub fn sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![0; k];
        for &t in &self.topics {
            sizes[t] += 1;
        }
        sizes
    }
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(row: &[f64], magnitude: bool) -> usize {
    let key = |x: f64| if magnitude { x.abs() } else { x };
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if key(x) > key(row[best]) {
            best = i;
        }
    }
    best
}

/// Argmax over each `doc_topic` row (absolute values for LSA).
pub fn assign_topics(model: &DocTopicModel) -> TopicAssignment {
    let topics = (0..model.doc_topic.rows())
        .map(|i| argmax(model.doc_topic.row(i), model.kind.signed()))
        .collect();
    TopicAssignment {
        doc_ids: model.doc_ids.clone(),
        topics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopTerm {
    pub term: String,
    pub weight: f64,
}

/// The `n` heaviest terms of every topic, heaviest first; ties go to the
/// earlier vocabulary entry. LSA ranks by magnitude.
pub fn top_terms(model: &DocTopicModel, n: usize) -> Vec<Vec<TopTerm>> {
    let signed = model.kind.signed();
    (0..model.topic_term.rows())
        .map(|topic| {
            let row = model.topic_term.row(topic);
            let key = |x: f64| if signed { x.abs() } else { x };
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| key(row[b]).total_cmp(&key(row[a])).then(a.cmp(&b)));
            idx.into_iter()
                .take(n)
                .map(|t| TopTerm {
                    term: model.vocab.term(t).to_string(),
                    weight: row[t],
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(rows: &[Vec<f64>]) -> WeightMatrix {
        let v = rows[0].len();
        WeightMatrix {
            doc_ids: (0..rows.len()).map(|i| format!("d{i}")).collect(),
            vocab: Vocabulary::from_terms((0..v).map(|i| format!("t{i:02}"))),
            weights: DenseMatrix::from_rows(rows).unwrap(),
        }
    }

    fn model(kind: ModelKind, doc_topic: &[Vec<f64>], topic_term: &[Vec<f64>]) -> DocTopicModel {
        let terms = ["a", "b", "c"].map(String::from);
        DocTopicModel {
            kind,
            k: doc_topic[0].len(),
            seed: None,
            doc_ids: (0..doc_topic.len()).map(|i| format!("d{i}")).collect(),
            vocab: Vocabulary::from_terms(terms.into_iter().take(topic_term[0].len())),
            doc_topic: DenseMatrix::from_rows(doc_topic).unwrap(),
            topic_term: DenseMatrix::from_rows(topic_term).unwrap(),
        }
    }

    #[test]
    fn assignment_examples() {
        let m = model(ModelKind::Nmf, &[vec![0.1, 0.7, 0.2], vec![0.5, 0.5, 0.0]], &[vec![1.0], vec![1.0], vec![1.0]]);
        assert_eq!(assign_topics(&m).topics, vec![1, 0]);
        let lsa = model(ModelKind::Lsa, &[vec![0.3, -0.9]], &[vec![1.0], vec![1.0]]);
        assert_eq!(assign_topics(&lsa).topics, vec![1]);
    }

    #[test]
    fn top_term_examples() {
        let m = model(ModelKind::Nmf, &[vec![1.0]], &[vec![0.0, 5.0, 3.0]]);
        let names = |n| -> Vec<String> { top_terms(&m, n)[0].iter().map(|t| t.term.clone()).collect() };
        assert_eq!(names(2), ["b", "c"]);
        assert_eq!(names(10).len(), 3);
        let tie = model(ModelKind::Nmf, &[vec![1.0]], &[vec![2.0, 2.0, 2.0]]);
        let t: Vec<_> = top_terms(&tie, 3)[0].iter().map(|t| t.term.as_str().to_string()).collect();
        assert_eq!(t, ["a", "b", "c"]);
        let lsa = model(ModelKind::Lsa, &[vec![1.0]], &[vec![0.1, -4.0, 3.0]]);
        assert_eq!(top_terms(&lsa, 1)[0][0].term, "b");
    }

    #[test]
    fn lsa_identical_and_disjoint_documents() {
        let w = weights(&[vec![1.0, 2.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 3.0]]);
        let m = lsa_fit(&w, 2).unwrap();
        assert!(m.doc_topic.row(0).iter().zip(m.doc_topic.row(1)).all(|(a, b)| (a - b).abs() < 1e-12));

        let w = weights(&[vec![1.0, 2.0, 0.0, 0.0], vec![0.0, 0.0, 3.0, 1.0]]);
        let m = lsa_fit(&w, 2).unwrap();
        let d = linalg::dot(m.doc_topic.row(0), m.doc_topic.row(1));
        assert!(d.abs() < 1e-8);
        assert!(lsa_fit(&w, 3).is_err());
        assert!(matches!(lsa_fit(&weights(&[vec![0.0, 0.0]]), 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn lsa_product_is_rank_k_reconstruction() {
        let w = weights(&[
            vec![1.0, 0.0, 2.0, 0.5],
            vec![0.0, 3.0, 0.0, 1.0],
            vec![2.0, 1.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.0, 4.0],
        ]);
        let m = lsa_fit(&w, 4).unwrap();
        let prod = m.doc_topic.matmul(&m.topic_term);
        assert!(prod.max_abs_diff(&w.weights) < 1e-8);
    }

    #[test]
    fn nmf_rank_one_is_recovered() {
        let w = weights(&[vec![3.0, 0.0, 1.0], vec![6.0, 0.0, 2.0]]);
        let fit = nmf_fit(&w, 1, &NmfConfig::default()).unwrap();
        assert!(*fit.objective.last().unwrap() <= 1e-6, "{:?}", fit.objective.last());
    }

    #[test]
    fn nmf_argument_errors() {
        assert!(nmf_fit(&weights(&[vec![1.0, -1.0]]), 1, &NmfConfig::default()).is_err());
        assert!(nmf_fit(&weights(&[vec![1.0, 1.0]]), 0, &NmfConfig::default()).is_err());
    }

    #[test]
    fn nmf_is_deterministic_and_nonnegative() {
        let w = weights(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 1.0], vec![2.0, 1.0, 0.0]]);
        let cfg = NmfConfig { seed: 9, ..NmfConfig::default() };
        let a = nmf_fit(&w, 2, &cfg).unwrap();
        let b = nmf_fit(&w, 2, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert!(a.model.doc_topic.as_slice().iter().all(|&x| x >= 0.0));
        assert!(a.model.topic_term.as_slice().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn json_round_trip() {
        let m = model(ModelKind::Nmf, &[vec![0.25, 0.75]], &[vec![0.1, 0.2, 0.3], vec![1.0 / 3.0, 0.0, 1.0]]);
        let text = m.to_json().unwrap();
        assert!(text.contains("\"kind\": \"nmf\""));
        let back = DocTopicModel::from_json(&text).unwrap();
        assert_eq!(back.doc_topic, m.doc_topic);
        assert!((back.topic_term.get(1, 0) - 1.0 / 3.0).abs() < 1e-12);
    }
}
