//! Command-line front end: corpus tokenization, model fitting, MCA,
//! projection, category graphs and full preset runs.

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use folio_topics::corpus::{self, read_jsonl, write_jsonl, Document, Segmentation, TokenizerRules};
use folio_topics::factor::{self, DocTopicModel, ModelKind};
use folio_topics::graph::{build_category_graph, build_composite_graph, export_dot, export_graphml};
use folio_topics::mca::CategoryTable;
use folio_topics::numfmt;
use folio_topics::pipeline::{
    self, default_input, document_categories, svg, InputConfig, McaConfig,
    RunConfig, RunManifest, TOPIC_NOTE,
};
use folio_topics::project::{ProjectionMethod, TsneConfig};
use folio_topics::vectorize::{self, TfidfOptions};
use folio_topics::{Error, Result};

#[derive(Parser)]
#[command(name = "folio-topics", version, about = "Topic models and correspondence analysis for manuscript transcriptions")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a transcription into documents (JSON lines).
    Tokenize(TokenizeArgs),
    /// Fit a topic model to tokenized documents.
    Fit(FitArgs),
    /// Multiple correspondence analysis of topics against page metadata.
    Mca(McaArgs),
    /// Project documents' topic vectors to the plane.
    Project(ProjectArgs),
    /// Category networks from page metadata and optional topics.
    Graph(GraphArgs),
    /// Run a whole analysis from a preset name, a config file or a manifest.
    Run(RunArgs),
    /// Print a run's summary and check its outputs against the manifest.
    Report(ReportArgs),
}

#[derive(Args)]
struct CorpusArgs {
    /// Run config whose tokenizer and segmentation settings apply.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transcriber code to keep.
    #[arg(long)]
    transcriber: Option<char>,
    /// Treat `,` as joining words instead of separating them.
    #[arg(long)]
    comma_joins: bool,
}

#[derive(Args)]
struct TokenizeArgs {
    #[arg(long)]
    transcription: PathBuf,
    /// page, folio, paragraph or fixed_window(n,seed).
    #[arg(long)]
    mode: Option<Segmentation>,
    /// Fixed-window seed, replacing the one in `--mode`.
    #[arg(long)]
    seed: Option<u64>,
    /// Metadata CSV; with it, `--exclude` can be applied.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// none, page_analysis or fixed_window_analysis.
    #[arg(long, requires = "metadata")]
    exclude: Option<corpus::ExclusionPolicy>,
    /// Output file (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Args)]
struct FitArgs {
    /// Tokenized documents from `tokenize`.
    #[arg(long)]
    tokens: PathBuf,
    /// Run config whose model settings apply.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    top_n: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TopicInputs {
    #[arg(long)]
    model: PathBuf,
    /// Documents the model was fitted on (for their pages).
    #[arg(long)]
    tokens: PathBuf,
    #[arg(long)]
    metadata: PathBuf,
}

#[derive(Args)]
struct McaArgs {
    #[command(flatten)]
    inputs: TopicInputs,
    /// Comma-separated subset of topic, hand, language, subject, quire.
    #[arg(long, value_delimiter = ',', default_value = "topic,hand,language,subject")]
    variables: Vec<String>,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Also report Benzécri-corrected inertias.
    #[arg(long)]
    benzecri: bool,
    #[arg(long, default_value_t = 5)]
    neighbors: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    inputs: TopicInputs,
    #[arg(long, default_value = "tsne")]
    method: ProjectionMethod,
    #[arg(long, default_value_t = 10.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 100.0)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    metadata: PathBuf,
    /// Model and tokens supplying the `topic` variable.
    #[arg(long, requires = "tokens")]
    model: Option<PathBuf>,
    #[arg(long)]
    tokens: Option<PathBuf>,
    /// Variable pair such as `hand,subject`; repeatable.
    #[arg(long = "pair", value_parser = parse_pair)]
    pairs: Vec<[String; 2]>,
    /// Also build the hand to subject-topic graph (needs a model).
    #[arg(long, requires = "model")]
    composite: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Preset name, `.toml` config or `manifest.json` of an earlier run.
    target: Option<String>,
    /// Config file (alternative to the positional target).
    #[arg(long, conflicts_with = "target")]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Run seed for presets and configs.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    transcription: Option<PathBuf>,
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// Root for the bundled data files used by presets.
    #[arg(long, default_value = ".")]
    data_root: PathBuf,
    /// Store per-stage wall-clock timings in the manifest.
    #[arg(long)]
    record_timings: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory written by `run`.
    dir: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<[String; 2], String> {
    match s.split(',').map(str::trim).collect::<Vec<_>>()[..] {
        [a, b] if !a.is_empty() && !b.is_empty() => Ok([a.to_string(), b.to_string()]),
        _ => Err(format!("expected two variables separated by a comma, got {s:?}")),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().map_or(String::new(), |e| e.to_string_lossy().into_owned())
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn tokenizer_rules(args: &CorpusArgs) -> Result<(TokenizerRules, Option<RunConfig>)> {
    let config = args.config.as_deref().map(RunConfig::load).transpose()?;
    let mut rules = config.as_ref().map(|c| c.tokenizer.clone()).unwrap_or_default();
    if let Some(t) = args.transcriber {
        rules.selected_transcriber = t;
    }
    if args.comma_joins {
        rules = rules.with_comma_joins();
    }
    rules.validate()?;
    Ok((rules, config))
}

fn read_docs(path: &Path) -> Result<Vec<Document>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(f))
}

fn tokenize(args: TokenizeArgs) -> Result<()> {
    let (rules, config) = tokenizer_rules(&args.corpus)?;
    let mut mode = args
        .mode
        .or(config.as_ref().map(|c| c.segment.mode))
        .unwrap_or(Segmentation::Page);
    if let (Segmentation::FixedWindow { seed, .. }, Some(s)) = (&mut mode, args.seed) {
        *seed = s;
    }
    let records = corpus::read_transcription(&args.transcription, &rules)?;
    let mut docs = corpus::segment_documents(&records, &rules, mode)?;
    if let Some(meta) = &args.metadata {
        let meta = corpus::load_metadata(meta)?;
        let policy = args
            .exclude
            .or(config.as_ref().map(|c| c.exclusions.policy))
            .unwrap_or(corpus::ExclusionPolicy::None);
        docs = corpus::apply_exclusions(docs, &meta, policy)?;
    }
    let mut buf = Vec::new();
    write_jsonl(&docs, &mut buf)?;
    match &args.out {
        Some(p) => write_atomic(p, &buf)?,
        None => std::io::stdout().write_all(&buf).map_err(|e| Error::io("<stdout>", e))?,
    }
    log::info!("{} documents", docs.len());
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let config = args.config.as_deref().map(RunConfig::load).transpose()?;
    let mut model_cfg = config.as_ref().map(|c| c.model.clone()).unwrap_or_default();
    let (tfidf, min_count) = config
        .as_ref()
        .map_or((TfidfOptions::default(), 1), |c| (c.vectorize.tfidf(), c.vectorize.min_count));
    if let Some(kind) = args.model {
        model_cfg.kind = kind;
    }
    if let Some(k) = args.k {
        model_cfg.k = k;
    }
    let seed = args
        .seed
        .or(model_cfg.seed)
        .or(config.as_ref().map(|c| c.seed))
        .unwrap_or(0);
    let docs = read_docs(&args.tokens)?;
    let (counts, weights) = vectorize::vectorize(&docs, min_count, tfidf)?;
    let (model, stats) = pipeline::fit_model(&model_cfg, seed, &counts, &weights)?;
    let mut json = model.to_json()?;
    json.push('\n');
    write_atomic(&args.out.join("model.json"), json.as_bytes())?;

    let assignment = factor::assign_topics(&model);
    let mut topics = String::from("doc_id,topic\n");
    for (id, t) in assignment.doc_ids.iter().zip(&assignment.topics) {
        topics.push_str(&format!("{id},{t}\n"));
    }
    write_atomic(&args.out.join("topics.csv"), topics.as_bytes())?;

    let mut top = String::from("topic,rank,term,weight\n");
    for (t, terms) in factor::top_terms(&model, args.top_n).iter().enumerate() {
        for (r, term) in terms.iter().enumerate() {
            top.push_str(&format!("{t},{},{},{}\n", r + 1, term.term, numfmt::g12(term.weight)));
        }
    }
    write_atomic(&args.out.join("top_terms.csv"), top.as_bytes())?;

    println!("{TOPIC_NOTE}");
    let sizes = assignment.sizes(model.k);
    for (t, n) in sizes.iter().enumerate() {
        println!("topic {t}: {n} documents");
    }
    for (k, v) in stats {
        println!("{k}: {}", numfmt::g12(v));
    }
    Ok(())
}

/// Model, its documents and their metadata joined into one category table.
fn topic_table(inputs: &TopicInputs) -> Result<(DocTopicModel, Vec<Document>, CategoryTable)> {
    let model = DocTopicModel::load(&inputs.model)?;
    let docs = read_docs(&inputs.tokens)?;
    let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    if ids != model.doc_ids.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::invalid(format!(
            "documents in {} do not match the model's {} documents",
            inputs.tokens.display(),
            model.doc_ids.len()
        )));
    }
    let meta = corpus::load_metadata(&inputs.metadata)?;
    let assignment = factor::assign_topics(&model);
    let table = document_categories(&docs, &meta, &assignment)?;
    Ok((model, docs, table))
}

fn mca(args: McaArgs) -> Result<()> {
    let (_, _, table) = topic_table(&args.inputs)?;
    let cfg = McaConfig {
        variables: args.variables,
        dims: args.dims,
        benzecri: args.benzecri,
        neighbors: args.neighbors,
    };
    let m = pipeline::fit_mca(&cfg, &table)?.expect("variables given");
    let csv = |f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<Vec<u8>> {
        let mut b = Vec::new();
        f(&mut b).map_err(|e| Error::io("<buffer>", e))?;
        Ok(b)
    };
    write_atomic(&args.out.join("category_coords.csv"), &csv(&|w| m.write_category_csv(w))?)?;
    write_atomic(&args.out.join("row_coords.csv"), &csv(&|w| m.write_row_csv(w))?)?;
    write_atomic(&args.out.join("inertia.csv"), &csv(&|w| m.write_inertia_csv(w, cfg.benzecri))?)?;
    write_atomic(&args.out.join("neighbors.csv"), &csv(&|w| m.write_neighbors_csv(w, cfg.neighbors))?)?;
    let mut vars: Vec<String> = Vec::new();
    for c in &m.columns {
        if !vars.contains(&c.variable) {
            vars.push(c.variable.clone());
        }
    }
    let names: Vec<String> = m.columns.iter().map(|c| c.name()).collect();
    let cc = &m.category_coords;
    let points: Vec<svg::Point> = m
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| svg::Point {
            x: cc.get(i, 0),
            y: if cc.cols() > 1 { cc.get(i, 1) } else { 0.0 },
            group: vars.iter().position(|v| *v == c.variable).unwrap_or(0),
            label: Some(names[i].as_str()),
        })
        .collect();
    write_atomic(&args.out.join("mca.svg"), svg::scatter(&points, &vars, "MCA category map", "").as_bytes())?;
    for (a, l) in m.principal_inertias.iter().take(m.dims()).enumerate() {
        println!("dim{}: inertia {} ({:.1}%)", a + 1, numfmt::g12(*l), 100.0 * l / m.total_inertia);
    }
    Ok(())
}

fn project(args: ProjectArgs) -> Result<()> {
    let (model, docs, table) = topic_table(&args.inputs)?;
    let tsne = TsneConfig {
        perplexity: args.perplexity,
        iterations: args.iterations,
        learning_rate: args.learning_rate,
        seed: args.seed,
        ..TsneConfig::default()
    };
    let p = pipeline::project_rows(args.method, &tsne, &model.doc_topic)?;
    let (hand, lang, subj) = (
        table.variable_index("hand")?,
        table.variable_index("language")?,
        table.variable_index("subject")?,
    );
    let topic = table.variable_index("topic")?;
    let y = |i: usize| if p.coords.cols() > 1 { p.coords.get(i, 1) } else { 0.0 };
    let mut out = format!(
        "# method={} perplexity={} iterations={} learning_rate={} seed={}\n",
        args.method,
        numfmt::g12(args.perplexity),
        args.iterations,
        numfmt::g12(args.learning_rate),
        args.seed
    );
    out.push_str("doc_id,x,y,assigned_topic,hand,language,subject\n");
    for (i, (d, row)) in docs.iter().zip(&table.values).enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            d.id,
            numfmt::g12(p.coords.get(i, 0)),
            numfmt::g12(y(i)),
            row[topic],
            row[hand],
            row[lang],
            row[subj]
        ));
    }
    write_atomic(&args.out.join("projection.csv"), out.as_bytes())?;
    let topics = factor::assign_topics(&model).topics;
    let points: Vec<svg::Point> = (0..docs.len())
        .map(|i| svg::Point {
            x: p.coords.get(i, 0),
            y: y(i),
            group: topics[i],
            label: None,
        })
        .collect();
    let legend: Vec<String> = (0..model.k).map(|t| format!("topic {t}")).collect();
    let svg = svg::scatter(&points, &legend, "documents by assigned topic", &format!("method={}", args.method));
    write_atomic(&args.out.join("projection.svg"), svg.as_bytes())?;
    if let Some(kl) = p.kl_final {
        println!("final KL divergence: {}", numfmt::g12(kl));
    }
    for (a, v) in p.explained_variance.iter().enumerate() {
        println!("component {}: {:.1}% of variance", a + 1, 100.0 * v);
    }
    Ok(())
}

fn graph(args: GraphArgs) -> Result<()> {
    let meta = corpus::load_metadata(&args.metadata)?;
    let table = match (&args.model, &args.tokens) {
        (Some(model), Some(tokens)) => {
            topic_table(&TopicInputs {
                model: model.clone(),
                tokens: tokens.clone(),
                metadata: args.metadata.clone(),
            })?
            .2
        }
        _ => CategoryTable::new(
            ["hand", "language", "subject", "quire"].map(String::from).to_vec(),
            meta.rows().iter().map(|r| r.page.clone()).collect(),
            meta.rows()
                .iter()
                .map(|r| {
                    vec![
                        r.hand.to_string(),
                        r.language.as_str().to_string(),
                        r.subject.as_str().to_string(),
                        r.quire.to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    let pairs: Vec<[String; 2]> = if args.pairs.is_empty() {
        vec![["hand".into(), "subject".into()]]
    } else {
        args.pairs
    };
    let mut graphs = pairs
        .iter()
        .map(|[a, b]| build_category_graph(&table, a, b))
        .collect::<Result<Vec<_>>>()?;
    if args.composite {
        graphs.push(build_composite_graph(&table, "topic", "subject", "hand")?);
    }
    for g in &graphs {
        let stem = g.file_stem();
        write_atomic(&args.out.join(format!("{stem}.dot")), export_dot(g).as_bytes())?;
        write_atomic(&args.out.join(format!("{stem}.graphml")), export_graphml(g).as_bytes())?;
        println!("{stem}: {} nodes, {} edges, {} pages", g.nodes.len(), g.edges.len(), g.total_weight());
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let target = match (&args.target, &args.config) {
        (Some(t), None) => t.clone(),
        (None, Some(c)) => c.to_string_lossy().into_owned(),
        _ => return Err(Error::arg("give a preset name, a config file or a manifest")),
    };
    let (mut config, preset) = if target.ends_with(".json") {
        let m = RunManifest::load(Path::new(&target))?;
        let changed = m.changed_inputs()?;
        if !changed.is_empty() {
            log::warn!("inputs changed since the manifest was written: {}", changed.join(", "));
        }
        (m.config, m.preset)
    } else if target.ends_with(".toml") || Path::new(&target).is_file() {
        (RunConfig::load(Path::new(&target))?, None)
    } else {
        let mut input = default_input(&args.data_root);
        if let Some(t) = &args.transcription {
            input.transcription = t.clone();
        }
        if let Some(m) = &args.metadata {
            input.metadata = m.clone();
        }
        (pipeline::preset(&target, input, args.seed.unwrap_or(0))?, Some(target.clone()))
    };
    if preset.is_none() || target.ends_with(".json") {
        if let Some(s) = args.seed {
            config.seed = s;
            config.model.seed = None;
            config.projection.seed = None;
        }
        let InputConfig { transcription, metadata } = &mut config.input;
        if let Some(t) = &args.transcription {
            *transcription = t.clone();
        }
        if let Some(m) = &args.metadata {
            *metadata = m.clone();
        }
    }
    config.output.record_timings |= args.record_timings;
    let manifest = pipeline::run_pipeline(&config, &args.out, preset.as_deref())?;
    let summary = std::fs::read_to_string(args.out.join("summary.txt")).map_err(|e| Error::io(&args.out, e))?;
    print!("{summary}");
    println!("wrote {} files to {}", manifest.outputs.len() + 1, args.out.display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let manifest = RunManifest::load(&args.dir.join("manifest.json"))?;
    let summary = args.dir.join("summary.txt");
    print!("{}", std::fs::read_to_string(&summary).map_err(|e| Error::io(&summary, e))?);
    let mut bad = Vec::new();
    for (file, digest) in &manifest.outputs {
        let p = args.dir.join(file);
        let ok = std::fs::read(&p).is_ok_and(|b| pipeline::sha256_hex(&b) == *digest);
        if !ok {
            bad.push(file.as_str());
        }
    }
    if bad.is_empty() {
        println!("all {} outputs match the manifest", manifest.outputs.len());
        Ok(())
    } else {
        Err(Error::invalid(format!("outputs differ from the manifest: {}", bad.join(", "))))
    }
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with other validation failures; 2 is
    // reserved for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Tokenize(a) => tokenize(a),
        Command::Fit(a) => fit(a),
        Command::Mca(a) => mca(a),
        Command::Project(a) => project(a),
        Command::Graph(a) => graph(a),
        Command::Run(a) => run(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
