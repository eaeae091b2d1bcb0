//! End-to-end runs: corpus → vectorize → model → assignments and top terms
//! → MCA → projection → graphs, then reports written atomically.

mod config;
mod manifest;
mod report;
pub mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{
    default_input, preset, ExclusionConfig, GraphConfig, InputConfig, McaConfig, ModelConfig, OutputConfig,
    ProjectionConfig, RunConfig, SegmentConfig, VectorizeConfig, MCA_VARIABLES, PRESETS, REFERENCE_METADATA,
    REFERENCE_TRANSCRIPTION, SAMPLE_TRANSCRIPTION,
};
pub use manifest::{sha256_hex, FileDigest, RunManifest};
pub use report::{emit_reports, summary_text, TOPIC_NOTE};

use crate::corpus::{self, Document, MetadataTable};
use crate::factor::{self, DocTopicModel, ModelKind, TopTerm, TopicAssignment};
use crate::graph::{self, CategoryGraph};
use crate::linalg::DenseMatrix;
use crate::mca::{self, CategoryTable, McaModel};
use crate::project::{self, Projection, ProjectionMethod, TsneConfig};
use crate::vectorize::{self, CountMatrix, WeightMatrix};
use crate::{lda, Error, Result};

/// In-memory results of every stage.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    /// With every seed filled in.
    pub config: RunConfig,
    pub metadata: MetadataTable,
    pub documents: Vec<Document>,
    pub counts: CountMatrix,
    pub weights: WeightMatrix,
    pub model: DocTopicModel,
    pub assignment: TopicAssignment,
    pub top_terms: Vec<Vec<TopTerm>>,
    /// One row per document: topic, hand, language, subject, quire.
    pub categories: CategoryTable,
    pub mca: Option<McaModel>,
    pub projection: Projection,
    pub graphs: Vec<CategoryGraph>,
    /// Scalar diagnostics (objective, perplexity, KL, inertias).
    pub stats: BTreeMap<String, f64>,
    /// Wall-clock seconds per stage, in execution order.
    pub timings: Vec<(&'static str, f64)>,
}

fn stage<T>(name: &'static str, timings: &mut Vec<(&'static str, f64)>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })?;
    let secs = start.elapsed().as_secs_f64();
    log::info!("stage {name}: {secs:.3}s");
    timings.push((name, secs));
    Ok(out)
}

/// Categorical labels of each document, in document order.
pub fn document_categories(
    docs: &[Document],
    meta: &MetadataTable,
    assignment: &TopicAssignment,
) -> Result<CategoryTable> {
    let values = docs
        .iter()
        .zip(&assignment.topics)
        .map(|(d, &t)| {
            let m = meta
                .get(&d.page)
                .ok_or_else(|| Error::invalid(format!("no metadata for page {}", d.page)))?;
            Ok(vec![
                t.to_string(),
                m.hand.to_string(),
                m.language.as_str().to_string(),
                m.subject.as_str().to_string(),
                m.quire.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    CategoryTable::new(
        MCA_VARIABLES.map(String::from).to_vec(),
        docs.iter().map(|d| d.id.clone()).collect(),
        values,
    )
}

/// Parses, segments and filters the corpus.
pub fn load_corpus(config: &RunConfig) -> Result<(MetadataTable, Vec<Document>)> {
    let meta = corpus::load_metadata(&config.input.metadata)?;
    let records = corpus::read_transcription(&config.input.transcription, &config.tokenizer)?;
    let docs = corpus::segment_documents(&records, &config.tokenizer, config.segment.mode)?;
    let docs = corpus::apply_exclusions(docs, &meta, config.exclusions.policy)?;
    if docs.is_empty() {
        return Err(Error::invalid("no documents left after exclusions"));
    }
    Ok((meta, docs))
}

/// Fits the configured model. Returns the model and its diagnostics.
pub fn fit_model(
    config: &ModelConfig,
    seed: u64,
    counts: &CountMatrix,
    weights: &WeightMatrix,
) -> Result<(DocTopicModel, BTreeMap<String, f64>)> {
    let mut stats = BTreeMap::new();
    let model = match config.kind {
        ModelKind::Lsa => factor::lsa_fit(weights, config.k)?,
        ModelKind::Nmf => {
            let fit = factor::nmf_fit(weights, config.k, &config.nmf(seed))?;
            stats.insert("nmf.iterations".into(), fit.iterations as f64);
            stats.insert("nmf.objective".into(), *fit.objective.last().expect("initial objective"));
            fit.model
        }
        ModelKind::Lda => {
            let model = lda::lda_fit(counts, &config.lda(seed))?;
            stats.insert("lda.perplexity".into(), lda::perplexity(&model, counts)?);
            model
        }
    };
    Ok((model, stats))
}

/// MCA over the configured variables. Variables with a single observed
/// category carry no information and are dropped with a warning.
pub fn fit_mca(config: &McaConfig, categories: &CategoryTable) -> Result<Option<McaModel>> {
    if config.variables.is_empty() {
        return Ok(None);
    }
    let mut keep = Vec::new();
    for v in &config.variables {
        let idx = categories.variable_index(v)?;
        if categories.categories(idx).len() < 2 {
            log::warn!("MCA: variable `{v}` has a single category here; dropped");
        } else {
            keep.push(v.as_str());
        }
    }
    if keep.len() < 2 {
        return Err(Error::Degenerate(format!(
            "MCA needs two variables with at least two categories; usable: {}",
            if keep.is_empty() { "none".to_string() } else { keep.join(", ") }
        )));
    }
    let table = categories.select(&keep)?;
    let m = mca::mca_fit_at_most(&mca::build_indicator(&table)?, config.dims)?;
    if m.dims() < config.dims {
        log::warn!(
            "MCA: only {} axes carry inertia; reporting {} of the {} requested",
            m.principal_inertias.len(),
            m.dims(),
            config.dims
        );
    }
    Ok(Some(m))
}

/// Projects the rows of `x` to the plane with the configured method.
pub fn project_rows(method: ProjectionMethod, tsne: &TsneConfig, x: &DenseMatrix) -> Result<Projection> {
    match method {
        ProjectionMethod::Pca => project::pca_project(x, 2.min(x.cols())),
        ProjectionMethod::Tsne => project::tsne_project(x, tsne),
    }
}

/// Runs every stage in memory. Input files are read; nothing is written.
pub fn execute(config: &RunConfig) -> Result<RunArtifacts> {
    let mut timings = Vec::new();
    let config = config.resolved();
    stage("config", &mut timings, || config.validate())?;
    let (metadata, documents) = stage("corpus", &mut timings, || load_corpus(&config))?;
    let (counts, weights) = stage("vectorize", &mut timings, || {
        vectorize::vectorize(&documents, config.vectorize.min_count, config.vectorize.tfidf())
    })?;
    let (model, mut stats) = stage("model", &mut timings, || fit_model(&config.model, config.model_seed(), &counts, &weights))?;
    let (assignment, top_terms, categories) = stage("assign", &mut timings, || {
        let assignment = factor::assign_topics(&model);
        let top = factor::top_terms(&model, config.output.top_n);
        let categories = document_categories(&documents, &metadata, &assignment)?;
        Ok((assignment, top, categories))
    })?;
    let mca = stage("mca", &mut timings, || fit_mca(&config.mca, &categories))?;
    let projection = stage("project", &mut timings, || project_rows(config.projection.method, &config.tsne(), &model.doc_topic))?;
    let graphs = stage("graph", &mut timings, || {
        let mut out = config
            .graphs
            .pairs
            .iter()
            .map(|[a, b]| graph::build_category_graph(&categories, a, b))
            .collect::<Result<Vec<_>>>()?;
        if config.graphs.composite {
            out.push(graph::build_composite_graph(&categories, "topic", "subject", "hand")?);
        }
        Ok(out)
    })?;

    stats.insert("corpus.documents".into(), documents.len() as f64);
    stats.insert("corpus.terms".into(), counts.n_terms() as f64);
    stats.insert("corpus.tokens".into(), counts.total() as f64);
    if let Some(m) = &mca {
        stats.insert("mca.total_inertia".into(), m.total_inertia);
        for (a, l) in m.principal_inertias.iter().take(m.dims()).enumerate() {
            stats.insert(format!("mca.inertia_{}", a + 1), *l);
        }
    }
    if let Some(kl) = projection.kl_final {
        stats.insert("tsne.kl".into(), kl);
    }
    for (a, v) in projection.explained_variance.iter().enumerate() {
        stats.insert(format!("pca.explained_{}", a + 1), *v);
    }
    Ok(RunArtifacts {
        config,
        metadata,
        documents,
        counts,
        weights,
        model,
        assignment,
        top_terms,
        categories,
        mca,
        projection,
        graphs,
        stats,
        timings,
    })
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map_or("run".into(), |n| n.to_string_lossy().into_owned());
    out.with_file_name(format!(".{name}.partial"))
}

/// Executes the run and writes all artifacts to `out`. Outputs are built in
/// a sibling staging directory and renamed into place only on success, so a
/// failed run leaves no partial tree. An existing `out` is replaced only if
/// it holds a previous run (a `manifest.json`).
pub fn run_pipeline(config: &RunConfig, out: &Path, preset: Option<&str>) -> Result<RunManifest> {
    if out.exists() && !out.join("manifest.json").is_file() {
        return Err(Error::arg(format!(
            "{} exists and is not a previous run directory; refusing to replace it",
            out.display()
        )));
    }
    let artifacts = execute(config)?;
    let staging = staging_dir(out);
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    let written = (|| {
        std::fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        let files = emit_reports(&artifacts, &staging).map_err(|e| Error::Stage {
            stage: "report",
            source: Box::new(e),
        })?;
        let manifest = RunManifest::build(&artifacts, preset, &staging, &files)?;
        manifest.write(&staging.join("manifest.json"))?;
        if out.exists() {
            std::fs::remove_dir_all(out).map_err(|e| Error::io(out, e))?;
        }
        std::fs::rename(&staging, out).map_err(|e| Error::io(out, e))?;
        Ok(manifest)
    })();
    if written.is_err() && staging.exists() {
        let _ = std::fs::remove_dir_all(&staging);
    }
    written
}
