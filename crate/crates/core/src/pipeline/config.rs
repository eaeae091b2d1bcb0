use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{ExclusionPolicy, Segmentation, TokenizerRules};
use crate::factor::{ModelKind, NmfConfig};
use crate::lda::LdaConfig;
use crate::project::{ProjectionMethod, TsneConfig};
use crate::vectorize::TfidfOptions;
use crate::{Error, Result};

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 9] = [
    "analysis1",
    "analysis2",
    "analysis3",
    "analysis4a",
    "analysis4b",
    "analysis5",
    "analysis6",
    "networks",
    "default",
];

pub const SAMPLE_TRANSCRIPTION: &str = "data/sample/transcription.evt";
pub const REFERENCE_TRANSCRIPTION: &str = "data/reference/transcription.evt";
pub const REFERENCE_METADATA: &str = "data/reference/metadata.csv";

/// Everything a run depends on besides the input bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Stage seeds default to this.
    pub seed: u64,
    pub input: InputConfig,
    #[serde(default)]
    pub tokenizer: TokenizerRules,
    #[serde(default)]
    pub segment: SegmentConfig,
    #[serde(default)]
    pub exclusions: ExclusionConfig,
    #[serde(default)]
    pub vectorize: VectorizeConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub projection: ProjectionConfig,
    #[serde(default)]
    pub mca: McaConfig,
    #[serde(default)]
    pub graphs: GraphConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub transcription: PathBuf,
    pub metadata: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentConfig {
    pub mode: Segmentation,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig { mode: Segmentation::Page }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExclusionConfig {
    pub policy: ExclusionPolicy,
}

impl Default for ExclusionConfig {
    fn default() -> Self {
        ExclusionConfig {
            policy: ExclusionPolicy::PageAnalysis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizeConfig {
    pub min_count: usize,
    pub log_tf: bool,
    pub l2_normalize: bool,
}

impl Default for VectorizeConfig {
    fn default() -> Self {
        VectorizeConfig {
            min_count: 1,
            log_tf: false,
            l2_normalize: false,
        }
    }
}

impl VectorizeConfig {
    pub fn tfidf(&self) -> TfidfOptions {
        TfidfOptions {
            log_tf: self.log_tf,
            l2_normalize: self.l2_normalize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub k: usize,
    /// Falls back to the run seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub max_iter: usize,
    pub tol: f64,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let nmf = NmfConfig::default();
        let lda = LdaConfig::default();
        ModelConfig {
            kind: ModelKind::Nmf,
            k: 6,
            seed: None,
            max_iter: nmf.max_iter,
            tol: nmf.tol,
            alpha: lda.alpha,
            beta: lda.beta,
            iterations: lda.iterations,
            burn_in: lda.burn_in,
            sample_lag: lda.sample_lag,
        }
    }
}

impl ModelConfig {
    pub fn nmf(&self, seed: u64) -> NmfConfig {
        NmfConfig {
            seed,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    pub fn lda(&self, seed: u64) -> LdaConfig {
        LdaConfig {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            burn_in: self.burn_in,
            sample_lag: self.sample_lag,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    pub method: ProjectionMethod,
    /// t-SNE settings; `tsne.seed` is replaced by the run seed unless
    /// `seed` is set here.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tsne: TsneConfig,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            method: ProjectionMethod::Tsne,
            seed: None,
            tsne: TsneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McaConfig {
    /// Any of `topic`, `hand`, `language`, `subject`, `quire`.
    pub variables: Vec<String>,
    pub dims: usize,
    pub benzecri: bool,
    /// Nearest category points listed per category.
    pub neighbors: usize,
}

impl Default for McaConfig {
    fn default() -> Self {
        McaConfig {
            variables: ["topic", "hand", "language", "subject"].map(String::from).to_vec(),
            dims: 2,
            benzecri: false,
            neighbors: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Bipartite graphs to build, as `[var_a, var_b]`.
    pub pairs: Vec<[String; 2]>,
    /// Also build the hand to subject-topic graph.
    pub composite: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            pairs: vec![["hand".into(), "topic".into()]],
            composite: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub top_n: usize,
    /// Adds wall-clock stage timings to the manifest, which makes it differ
    /// between otherwise identical runs.
    pub record_timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            top_n: 20,
            record_timings: false,
        }
    }
}

pub const MCA_VARIABLES: [&str; 5] = ["topic", "hand", "language", "subject", "quire"];

impl RunConfig {
    pub fn new(input: InputConfig, seed: u64) -> Self {
        RunConfig {
            seed,
            input,
            tokenizer: TokenizerRules::default(),
            segment: SegmentConfig::default(),
            exclusions: ExclusionConfig::default(),
            vectorize: VectorizeConfig::default(),
            model: ModelConfig::default(),
            projection: ProjectionConfig::default(),
            mca: McaConfig::default(),
            graphs: GraphConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn model_seed(&self) -> u64 {
        self.model.seed.unwrap_or(self.seed)
    }

    pub fn projection_seed(&self) -> u64 {
        self.projection.seed.unwrap_or(self.seed)
    }

    pub fn tsne(&self) -> TsneConfig {
        TsneConfig {
            seed: self.projection_seed(),
            ..self.projection.tsne
        }
    }

    /// Fills every defaulted seed so the serialized form is explicit.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        c.model.seed = Some(self.model_seed());
        c.projection.seed = Some(self.projection_seed());
        c.projection.tsne.seed = self.projection_seed();
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.tokenizer.validate()?;
        if self.model.k == 0 {
            return Err(Error::arg("model.k must be at least 1"));
        }
        if self.model.kind == ModelKind::Lda {
            self.model.lda(0).validate()?;
        }
        if self.vectorize.min_count == 0 {
            return Err(Error::arg("vectorize.min_count must be at least 1"));
        }
        if self.output.top_n == 0 {
            return Err(Error::arg("output.top_n must be at least 1"));
        }
        let known = |v: &str| MCA_VARIABLES.contains(&v);
        if let Some(v) = self.mca.variables.iter().find(|v| !known(v)) {
            return Err(Error::arg(format!(
                "unknown MCA variable `{v}` (allowed: {})",
                MCA_VARIABLES.join(", ")
            )));
        }
        if !self.mca.variables.is_empty() && self.mca.variables.len() < 2 {
            return Err(Error::arg("MCA needs at least two variables"));
        }
        if let Some(v) = self.graphs.pairs.iter().flatten().find(|v| !known(v)) {
            return Err(Error::arg(format!("unknown graph variable `{v}`")));
        }
        for path in [&self.input.transcription, &self.input.metadata] {
            if !path.is_file() {
                return Err(Error::arg(format!("input file {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative input paths are taken from the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut c.input.transcription, &mut c.input.metadata] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }
}

/// The reference transcription when present under `root`, else the bundled
/// synthetic sample.
pub fn default_input(root: &Path) -> InputConfig {
    let reference = root.join(REFERENCE_TRANSCRIPTION);
    let transcription = if reference.is_file() {
        reference
    } else {
        log::warn!(
            "{} not found; using the synthetic sample corpus",
            reference.display()
        );
        root.join(SAMPLE_TRANSCRIPTION)
    };
    InputConfig {
        transcription,
        metadata: root.join(REFERENCE_METADATA),
    }
}

/// A named analysis. `default` is the page-level six-topic NMF run.
pub fn preset(name: &str, input: InputConfig, seed: u64) -> Result<RunConfig> {
    let mut c = RunConfig::new(input, seed);
    let vars = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match name {
        "analysis1" => c.model.kind = ModelKind::Lda,
        "analysis2" => c.model.kind = ModelKind::Lsa,
        "analysis3" | "default" => {}
        "analysis4a" | "analysis4b" => {
            let n = if name == "analysis4a" { 40 } else { 20 };
            c.segment.mode = Segmentation::FixedWindow { n, seed };
            c.exclusions.policy = ExclusionPolicy::FixedWindowAnalysis;
        }
        "analysis5" => {
            c.model.k = 5;
            c.mca.variables = vars(&["topic", "hand"]);
        }
        "analysis6" => {
            c.model.k = 2;
            c.mca.variables = vars(&["topic", "language"]);
        }
        "networks" => {
            c.graphs.pairs = [["hand", "subject"], ["topic", "subject"], ["hand", "topic"]]
                .iter()
                .map(|[a, b]| [a.to_string(), b.to_string()])
                .collect();
            c.graphs.composite = true;
        }
        other => {
            return Err(Error::arg(format!(
                "unknown preset `{other}` (available: {})",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input() -> InputConfig {
        InputConfig {
            transcription: "t.evt".into(),
            metadata: "m.csv".into(),
        }
    }

    #[test]
    fn presets_follow_the_analyses() {
        let a6 = preset("analysis6", input(), 0).unwrap();
        assert_eq!((a6.model.kind, a6.model.k), (ModelKind::Nmf, 2));
        assert_eq!(a6.mca.variables, ["topic", "language"]);
        let a4 = preset("analysis4a", input(), 3).unwrap();
        assert_eq!(a4.segment.mode, Segmentation::FixedWindow { n: 40, seed: 3 });
        assert_eq!(a4.exclusions.policy, ExclusionPolicy::FixedWindowAnalysis);
        assert_eq!(preset("analysis1", input(), 0).unwrap().model.kind, ModelKind::Lda);
        assert!(preset("analysis9", input(), 0).is_err());
    }

    #[test]
    fn toml_round_trip_is_explicit() {
        let c = preset("networks", input(), 5).unwrap().resolved();
        let text = c.to_toml().unwrap();
        assert!(text.contains("seed = 5"));
        assert!(text.contains("mode = \"page\""));
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn minimal_toml_takes_defaults() {
        let c = RunConfig::from_toml("seed = 1\n[input]\ntranscription = \"a\"\nmetadata = \"b\"\n").unwrap();
        assert_eq!(c.model.k, 6);
        assert_eq!(c.tokenizer, TokenizerRules::default());
        assert!(RunConfig::from_toml("seed = 1\nbogus = 2\n[input]\ntranscription = \"a\"\nmetadata = \"b\"\n").is_err());
    }
}
