//! Generators, oracles and the reproduction harness shared by the
//! integration and acceptance targets.
#![allow(dead_code)]

use std::path::PathBuf;

use folio_topics::corpus::{self, Document, ExclusionPolicy, LocusRecord, MetadataTable, Segmentation, TokenizerRules};
use folio_topics::factor::{self, ModelKind, TopicAssignment};
use folio_topics::linalg::DenseMatrix;
use folio_topics::mca::{CategoryTable, Indicator};
use folio_topics::pipeline::{self, InputConfig, McaConfig, ModelConfig};
use folio_topics::stats;
use folio_topics::vectorize::{self, CountMatrix, TfidfOptions, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
pub const PERMUTATION_DRAWS: usize = 10_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn metadata_path() -> PathBuf {
    workspace_root().join(pipeline::REFERENCE_METADATA)
}

pub fn sample_input() -> InputConfig {
    InputConfig {
        transcription: workspace_root().join(pipeline::SAMPLE_TRANSCRIPTION),
        metadata: metadata_path(),
    }
}

/// `FOLIO_TOPICS_TRANSCRIPTION` if set, else the checked-in reference
/// snapshot if present.
pub fn reference_input() -> Option<InputConfig> {
    let path = std::env::var_os("FOLIO_TOPICS_TRANSCRIPTION")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join(pipeline::REFERENCE_TRANSCRIPTION));
    path.is_file().then(|| InputConfig {
        transcription: path,
        metadata: metadata_path(),
    })
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_nonnegative(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(0.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn vocabulary(n: usize) -> Vocabulary {
    Vocabulary::from_terms((0..n).map(|i| format!("w{i:02}")))
}

pub fn weights_of(m: DenseMatrix) -> vectorize::WeightMatrix {
    vectorize::WeightMatrix {
        doc_ids: labels("d", m.rows()),
        vocab: vocabulary(m.cols()),
        weights: m,
    }
}

/// Documents drawn from one of two topics with disjoint vocabularies
/// (terms `0..half` and `half..2*half`). Returns the counts and each
/// document's generating topic.
pub fn two_topic_corpus(seed: u64, docs: usize, half: usize, length: usize) -> (CountMatrix, Vec<usize>) {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(docs);
    let mut topics = Vec::with_capacity(docs);
    for d in 0..docs {
        let topic = d % 2;
        let mut row = vec![0u32; 2 * half];
        for _ in 0..length {
            row[topic * half + r.random_range(0..half)] += 1;
        }
        rows.push(row);
        topics.push(topic);
    }
    let counts = CountMatrix::from_rows(labels("d", docs), vocabulary(2 * half), rows).unwrap();
    (counts, topics)
}

/// Random counts over `terms` with every document nonempty.
pub fn random_counts(seed: u64, docs: usize, terms: usize) -> CountMatrix {
    let mut r = rng(seed);
    let rows = (0..docs)
        .map(|_| {
            let mut row: Vec<u32> = (0..terms).map(|_| r.random_range(0..4)).collect();
            row[r.random_range(0..terms)] += 1;
            row
        })
        .collect();
    CountMatrix::from_rows(labels("d", docs), vocabulary(terms), rows).unwrap()
}

/// A table of `q` variables, each with 2..=5 categories that all occur.
pub fn random_category_table(seed: u64) -> CategoryTable {
    let mut r = rng(seed);
    let q = r.random_range(2..=5);
    let n = r.random_range(20..=60);
    let sizes: Vec<usize> = (0..q).map(|_| r.random_range(2..=5)).collect();
    let columns: Vec<Vec<String>> = sizes
        .iter()
        .map(|&s| {
            let mut col: Vec<usize> = (0..n).map(|i| if i < s { i } else { r.random_range(0..s) }).collect();
            for i in (1..n).rev() {
                col.swap(i, r.random_range(0..=i));
            }
            col.into_iter().map(|c| format!("c{c}")).collect()
        })
        .collect();
    let values = (0..n).map(|i| columns.iter().map(|c| c[i].clone()).collect()).collect();
    CategoryTable::new(labels("v", q), labels("r", n), values).unwrap()
}

/// Pearson chi-square of the indicator matrix divided by its grand total.
pub fn chi_square_inertia(ind: &Indicator) -> f64 {
    let z = &ind.matrix;
    let (n, j) = z.shape();
    let row: Vec<f64> = (0..n).map(|i| z.row(i).iter().sum()).collect();
    let col: Vec<f64> = (0..j).map(|c| (0..n).map(|i| z.get(i, c)).sum()).collect();
    let grand: f64 = row.iter().sum();
    let mut chi2 = 0.0;
    for i in 0..n {
        for c in 0..j {
            let e = row[i] * col[c] / grand;
            chi2 += (z.get(i, c) - e).powi(2) / e;
        }
    }
    chi2 / grand
}

/// The best agreement between two labelings over all relabelings of `b`,
/// as a fraction of items. Exhaustive; only for small label counts.
pub fn matched_accuracy(a: &[usize], b: &[usize], k: usize) -> f64 {
    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }
    permutations(k)
        .iter()
        .map(|perm| a.iter().zip(b).filter(|(&x, &y)| perm[y] == x).count())
        .max()
        .unwrap_or(0) as f64
        / a.len() as f64
}

/// One verdict of the reproduction harness.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

/// A parsed corpus that the reproduction criteria segment and fit
/// repeatedly.
pub struct Corpus {
    pub metadata: MetadataTable,
    pub records: Vec<LocusRecord>,
    pub rules: TokenizerRules,
}

impl Corpus {
    pub fn load(input: &InputConfig) -> folio_topics::Result<Self> {
        let rules = TokenizerRules::default();
        Ok(Corpus {
            metadata: corpus::load_metadata(&input.metadata)?,
            records: corpus::read_transcription(&input.transcription, &rules)?,
            rules,
        })
    }

    pub fn documents(&self, mode: Segmentation, policy: ExclusionPolicy) -> folio_topics::Result<Vec<Document>> {
        let docs = corpus::segment_documents(&self.records, &self.rules, mode)?;
        corpus::apply_exclusions(docs, &self.metadata, policy)
    }

    pub fn fit(&self, docs: &[Document], kind: ModelKind, k: usize, seed: u64) -> folio_topics::Result<TopicAssignment> {
        let (counts, weights) = vectorize::vectorize(docs, 1, TfidfOptions::default())?;
        let config = ModelConfig {
            kind,
            k,
            ..ModelConfig::default()
        };
        let (model, _) = pipeline::fit_model(&config, seed, &counts, &weights)?;
        Ok(factor::assign_topics(&model))
    }

    fn language(&self, page: &str) -> corpus::Language {
        self.metadata.get(page).expect("metadata checked by exclusions").language
    }
}

fn tally(hits: usize, needed: usize, lines: &[String]) -> Outcome {
    Outcome {
        passed: hits >= needed,
        detail: format!("{hits}/{} seeds (need {needed}): {}", lines.len(), lines.join("; ")),
    }
}

/// Two-topic NMF on pages against Currier language labels.
pub fn currier_split(c: &Corpus) -> folio_topics::Result<Outcome> {
    let docs: Vec<Document> = c
        .documents(Segmentation::Page, ExclusionPolicy::PageAnalysis)?
        .into_iter()
        .filter(|d| c.language(&d.page) != corpus::Language::Unknown)
        .collect();
    let language: Vec<usize> = stats::encode_labels(&docs.iter().map(|d| c.language(&d.page).as_str()).collect::<Vec<_>>());
    let mut lines = Vec::new();
    let mut hits = 0;
    for seed in SEEDS {
        let topics = c.fit(&docs, ModelKind::Nmf, 2, seed)?.topics;
        let r = stats::permutation_test(&topics, &language, PERMUTATION_DRAWS, seed, stats::adjusted_rand_index)?;
        if r.p_value < 0.01 {
            hits += 1;
        }
        lines.push(format!("seed {seed} ARI {:.3} p {:.4}", r.observed, r.p_value));
    }
    Ok(tally(hits, 4, &lines))
}

/// `subject=astrological` has `hand=4` among its three nearest category
/// points in the MCA over topic, hand, language and subject.
pub fn astrology_hand4(c: &Corpus) -> folio_topics::Result<Outcome> {
    let docs = c.documents(Segmentation::Page, ExclusionPolicy::PageAnalysis)?;
    let config = McaConfig::default();
    let mut lines = Vec::new();
    let mut hits = 0;
    for seed in SEEDS {
        let assignment = c.fit(&docs, ModelKind::Nmf, 6, seed)?;
        let table = pipeline::document_categories(&docs, &c.metadata, &assignment)?;
        let model = pipeline::fit_mca(&config, &table)?.expect("variables configured");
        let astro = model
            .category_index("subject", "astrological")
            .expect("astrological pages present");
        let near: Vec<String> = model.neighbors(astro).iter().take(3).map(|n| n.label.name()).collect();
        if near.iter().any(|n| n == "hand=4") {
            hits += 1;
        }
        lines.push(format!("seed {seed} [{}]", near.join(" ")));
    }
    Ok(tally(hits, 4, &lines))
}

/// Default six-topic LDA puts a strict majority of pages in one topic.
pub fn lda_dominance(c: &Corpus) -> folio_topics::Result<Outcome> {
    let docs = c.documents(Segmentation::Page, ExclusionPolicy::PageAnalysis)?;
    let mut lines = Vec::new();
    let mut hits = 0;
    for seed in SEEDS {
        let sizes = c.fit(&docs, ModelKind::Lda, 6, seed)?.sizes(6);
        let largest = *sizes.iter().max().unwrap();
        if 2 * largest > docs.len() {
            hits += 1;
        }
        lines.push(format!("seed {seed} largest {largest}/{}", docs.len()));
    }
    Ok(tally(hits, 3, &lines))
}

/// Per-seed agreement between page and window assignments.
pub struct Subsampling {
    /// Seeds where the 40-word agreement beats the null 99th percentile.
    pub above_null: usize,
    /// Seeds where the 20-word agreement is below the 40-word one.
    pub ordered: usize,
    pub lines: Vec<String>,
}

impl Subsampling {
    pub fn outcome(&self) -> Outcome {
        Outcome {
            passed: self.above_null == SEEDS.len() && self.ordered >= 4,
            detail: format!(
                "40-word above null on {}/5 (need 5), 20-word below 40-word on {}/5 (need 4): {}",
                self.above_null,
                self.ordered,
                self.lines.join("; ")
            ),
        }
    }
}

pub fn subsampling(c: &Corpus) -> folio_topics::Result<Subsampling> {
    let pages = c.documents(Segmentation::Page, ExclusionPolicy::PageAnalysis)?;
    let mut s = Subsampling {
        above_null: 0,
        ordered: 0,
        lines: Vec::new(),
    };
    for seed in SEEDS {
        let full = c.fit(&pages, ModelKind::Nmf, 6, seed)?;
        let mut agreement = Vec::new();
        for n in [40, 20] {
            let docs = c.documents(Segmentation::FixedWindow { n, seed }, ExclusionPolicy::FixedWindowAnalysis)?;
            let window = c.fit(&docs, ModelKind::Nmf, 6, seed)?;
            let (a, b): (Vec<usize>, Vec<usize>) = docs
                .iter()
                .zip(&window.topics)
                .filter_map(|(d, &t)| full.topic_of(&d.page).map(|f| (f, t)))
                .unzip();
            agreement.push(stats::permutation_test(&a, &b, PERMUTATION_DRAWS, seed, stats::adjusted_rand_index)?);
        }
        let (w40, w20) = (&agreement[0], &agreement[1]);
        if w40.observed > w40.null_q99 {
            s.above_null += 1;
        }
        if w20.observed < w40.observed {
            s.ordered += 1;
        }
        s.lines.push(format!(
            "seed {seed} ARI40 {:.3} (null q99 {:.3}) ARI20 {:.3}",
            w40.observed, w40.null_q99, w20.observed
        ));
    }
    Ok(s)
}

/// Window assignments agree with page assignments beyond chance, and
/// shorter windows agree less.
pub fn subsampling_robustness(c: &Corpus) -> folio_topics::Result<Outcome> {
    Ok(subsampling(c)?.outcome())
}

/// Runs `preset` into two fresh directories and compares the trees.
pub fn identical_runs(preset: &str, input: InputConfig) -> folio_topics::Result<Outcome> {
    let config = pipeline::preset(preset, input, 0)?;
    let tmp = tempfile::tempdir().map_err(|e| folio_topics::Error::io("tempdir", e))?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline::run_pipeline(&config, &a, Some(preset))?;
    pipeline::run_pipeline(&config, &b, Some(preset))?;
    let (ta, tb) = (tree(&a), tree(&b));
    let differing: Vec<&String> = ta
        .iter()
        .zip(&tb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| &x.0)
        .collect();
    Ok(Outcome {
        passed: ta.len() == tb.len() && differing.is_empty(),
        detail: format!("{} files, {} differ {:?}", ta.len(), differing.len(), differing),
    })
}

/// Every file under `root` as (relative path, bytes), sorted by path.
pub fn tree(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
