//! Latent Dirichlet allocation by collapsed Gibbs sampling over
//! bag-of-words counts.
//!
//! One chain, strictly sequential, seeded: the same counts and config give
//! the same model bit for bit. After burn-in, `theta` and `phi` estimates
//! from every `sample_lag`-th sweep are averaged.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::factor::{DocTopicModel, ModelKind};
use crate::linalg::DenseMatrix;
use crate::vectorize::CountMatrix;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric doc-topic prior.
    pub alpha: f64,
    /// Symmetric topic-term prior.
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 6,
            alpha: 0.1,
            beta: 0.01,
            iterations: 1000,
            burn_in: 500,
            sample_lag: 10,
            seed: 0,
        }
    }
}

impl LdaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::arg("k must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::arg("alpha and beta must be positive"));
        }
        if self.iterations <= self.burn_in {
            return Err(Error::arg("iterations must exceed burn_in"));
        }
        if self.sample_lag == 0 {
            return Err(Error::arg("sample_lag must be at least 1"));
        }
        Ok(())
    }
}

/// Topic assignments of every token plus the tallies derived from them.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'a> {
    counts: &'a CountMatrix,
    cfg: LdaConfig,
    doc: Vec<u32>,
    word: Vec<u32>,
    z: Vec<u32>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
    rng: rng::Rng,
    weights: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    /// Expands counts into token positions (document order, then term order)
    /// and draws a uniform initial topic for each.
    pub fn new(counts: &'a CountMatrix, cfg: LdaConfig) -> Result<Self> {
        cfg.validate()?;
        if counts.total() == 0 {
            return Err(Error::arg("corpus has no tokens"));
        }
        let (n, v, k) = (counts.n_docs(), counts.n_terms(), cfg.k);
        let mut doc = Vec::new();
        let mut word = Vec::new();
        for d in 0..n {
            for (t, &c) in counts.row(d).iter().enumerate() {
                for _ in 0..c {
                    doc.push(d as u32);
                    word.push(t as u32);
                }
            }
        }
        let mut rng = rng::seeded(cfg.seed);
        let z: Vec<u32> = (0..doc.len()).map(|_| rng.random_range(0..k as u32)).collect();
        let mut s = GibbsSampler {
            counts,
            cfg,
            doc,
            word,
            z,
            n_dk: vec![0; n * k],
            n_kw: vec![0; k * v],
            n_k: vec![0; k],
            rng,
            weights: vec![0.0; k],
        };
        s.tally();
        Ok(s)
    }

    fn tally(&mut self) {
        let (n_dk, n_kw, n_k) = self.recount();
        self.n_dk = n_dk;
        self.n_kw = n_kw;
        self.n_k = n_k;
    }

    fn recount(&self) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
        let k = self.cfg.k;
        let v = self.counts.n_terms();
        let mut n_dk = vec![0; self.counts.n_docs() * k];
        let mut n_kw = vec![0; k * v];
        let mut n_k = vec![0; k];
        for ((&d, &w), &z) in self.doc.iter().zip(&self.word).zip(&self.z) {
            n_dk[d as usize * k + z as usize] += 1;
            n_kw[z as usize * v + w as usize] += 1;
            n_k[z as usize] += 1;
        }
        (n_dk, n_kw, n_k)
    }

    /// True when the running tables equal a fresh tally of the assignments.
    pub fn counts_consistent(&self) -> bool {
        let (n_dk, n_kw, n_k) = self.recount();
        n_dk == self.n_dk && n_kw == self.n_kw && n_k == self.n_k
    }

    pub fn n_tokens(&self) -> usize {
        self.z.len()
    }

    /// Unnormalized full conditional of token `i` with that token removed
    /// from the tallies: `(n_dk + α)(n_kw + β)/(n_k + Vβ)`.
    fn conditional_into(&mut self, i: usize) {
        let k = self.cfg.k;
        let v = self.counts.n_terms();
        let vb = v as f64 * self.cfg.beta;
        let d = self.doc[i] as usize;
        let w = self.word[i] as usize;
        for j in 0..k {
            let ndk = f64::from(self.n_dk[d * k + j]);
            let nkw = f64::from(self.n_kw[j * v + w]);
            let nk = f64::from(self.n_k[j]);
            self.weights[j] = (ndk + self.cfg.alpha) * (nkw + self.cfg.beta) / (nk + vb);
        }
    }

    fn remove(&mut self, i: usize) {
        let (k, v) = (self.cfg.k, self.counts.n_terms());
        let (d, w, z) = (self.doc[i] as usize, self.word[i] as usize, self.z[i] as usize);
        self.n_dk[d * k + z] -= 1;
        self.n_kw[z * v + w] -= 1;
        self.n_k[z] -= 1;
    }

    fn insert(&mut self, i: usize, z: usize) {
        let (k, v) = (self.cfg.k, self.counts.n_terms());
        let (d, w) = (self.doc[i] as usize, self.word[i] as usize);
        self.z[i] = z as u32;
        self.n_dk[d * k + z] += 1;
        self.n_kw[z * v + w] += 1;
        self.n_k[z] += 1;
    }

    /// Normalized full conditional of token `i` given every other token.
    /// Leaves the sampler state unchanged.
    pub fn conditional(&mut self, i: usize) -> Vec<f64> {
        let z = self.z[i] as usize;
        self.remove(i);
        self.conditional_into(i);
        self.insert(i, z);
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    /// One pass over every token position.
    pub fn sweep(&mut self) {
        for i in 0..self.z.len() {
            self.remove(i);
            self.conditional_into(i);
            let total: f64 = self.weights.iter().sum();
            let u = self.rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = self.cfg.k - 1;
            for (j, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = j;
                    break;
                }
            }
            self.insert(i, pick);
        }
    }

    /// Point estimate of the document-topic distributions.
    pub fn theta(&self) -> DenseMatrix {
        let (n, k) = (self.counts.n_docs(), self.cfg.k);
        let ka = k as f64 * self.cfg.alpha;
        let mut m = DenseMatrix::zeros(n, k);
        for d in 0..n {
            let nd: u32 = self.n_dk[d * k..(d + 1) * k].iter().sum();
            for j in 0..k {
                m.set(d, j, (f64::from(self.n_dk[d * k + j]) + self.cfg.alpha) / (f64::from(nd) + ka));
            }
        }
        m
    }

    /// Point estimate of the topic-term distributions.
    pub fn phi(&self) -> DenseMatrix {
        let (k, v) = (self.cfg.k, self.counts.n_terms());
        let vb = v as f64 * self.cfg.beta;
        let mut m = DenseMatrix::zeros(k, v);
        for j in 0..k {
            for w in 0..v {
                m.set(j, w, (f64::from(self.n_kw[j * v + w]) + self.cfg.beta) / (f64::from(self.n_k[j]) + vb));
            }
        }
        m
    }
}

fn accumulate(sum: &mut DenseMatrix, x: &DenseMatrix) {
    for (s, v) in sum.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *s += v;
    }
}

/// Runs the sampler and averages post-burn-in estimates.
pub fn lda_fit(counts: &CountMatrix, cfg: &LdaConfig) -> Result<DocTopicModel> {
    if counts.n_docs() == 0 {
        return Err(Error::arg("empty corpus"));
    }
    let mut s = GibbsSampler::new(counts, *cfg)?;
    let mut theta = DenseMatrix::zeros(counts.n_docs(), cfg.k);
    let mut phi = DenseMatrix::zeros(cfg.k, counts.n_terms());
    let mut samples = 0usize;
    for sweep in 1..=cfg.iterations {
        s.sweep();
        if sweep > cfg.burn_in && (sweep - cfg.burn_in) % cfg.sample_lag == 0 {
            accumulate(&mut theta, &s.theta());
            accumulate(&mut phi, &s.phi());
            samples += 1;
        }
    }
    if samples == 0 {
        accumulate(&mut theta, &s.theta());
        accumulate(&mut phi, &s.phi());
        samples = 1;
    }
    let inv = 1.0 / samples as f64;
    theta.as_mut_slice().iter_mut().for_each(|x| *x *= inv);
    phi.as_mut_slice().iter_mut().for_each(|x| *x *= inv);
    log::debug!("lda: {samples} samples averaged, perplexity {:.3}", {
        let m = DocTopicModel {
            kind: ModelKind::Lda,
            k: cfg.k,
            seed: Some(cfg.seed),
            doc_ids: counts.doc_ids.clone(),
            vocab: counts.vocab.clone(),
            doc_topic: theta.clone(),
            topic_term: phi.clone(),
        };
        perplexity(&m, counts).unwrap_or(f64::NAN)
    });
    Ok(DocTopicModel {
        kind: ModelKind::Lda,
        k: cfg.k,
        seed: Some(cfg.seed),
        doc_ids: counts.doc_ids.clone(),
        vocab: counts.vocab.clone(),
        doc_topic: theta,
        topic_term: phi,
    })
}

/// `exp(−Σ log Σ_k θ_dk φ_kw / total tokens)`.
pub fn perplexity(model: &DocTopicModel, counts: &CountMatrix) -> Result<f64> {
    if model.vocab.terms() != counts.vocab.terms() {
        return Err(Error::invalid("model and counts use different vocabularies"));
    }
    if model.doc_topic.rows() != counts.n_docs() {
        return Err(Error::invalid("model and counts cover different documents"));
    }
    let total = counts.total();
    if total == 0 {
        return Err(Error::arg("no tokens to evaluate"));
    }
    let mut loglik = 0.0;
    for d in 0..counts.n_docs() {
        let theta = model.doc_topic.row(d);
        for (w, &c) in counts.row(d).iter().enumerate() {
            if c == 0 {
                continue;
            }
            let p: f64 = (0..model.k).map(|j| theta[j] * model.topic_term.get(j, w)).sum();
            loglik += f64::from(c) * p.ln();
        }
    }
    Ok((-loglik / total as f64).exp())
}
