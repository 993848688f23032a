//! `hgoe` — command-line front end: build hypergraph indexes, inspect
//! them, run single queries or topic batches with the random-walk or
//! inverted-index engines, evaluate TREC runs, and generate synthetic
//! collections.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hgoe::baseline::{
    build_document_index, build_entity_index, mlt_query, more_like_this_completion, score_bm25,
    score_tfidf, EntityIndex, InvertedIndex, BM25_B, BM25_K1, MLT_TOP_TERMS,
};
use hgoe::corpus::{
    load_corpus_strict, load_qrels, load_topics, preprocess, save_corpus, save_qrels, save_topics,
    QrelSet, Topic, TopicKind,
};
use hgoe::eval::{aggregate, load_run, wilcoxon_signed_rank, EvalReport};
use hgoe::indexer::{build_index, load_embeddings, load_synsets, profile_documents, Extension};
use hgoe::ranking::{RankedList, Searcher};
use hgoe::synth::{generate, write_embeddings, write_synsets, SynthConfig};
use hgoe::{Hypergraph, IndexConfig, RwsParams, TargetKind};

#[derive(Parser)]
#[command(
    name = "hgoe",
    about = "Entity-oriented search over a term/entity/document hypergraph",
    version
)]
struct Cli {
    /// Plain key=value configuration file; explicit flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a hypergraph index from a corpus.
    Index(IndexArgs),
    /// Print keyword profiles for a corpus as JSON lines.
    ExtractKeywords(ExtractArgs),
    /// Print node/edge statistics of a saved index.
    Stats(StatsArgs),
    /// Run a single query and print the ranking.
    Search(SearchArgs),
    /// Run all topics of a task and write a TREC run file.
    Batch(BatchArgs),
    /// Score a run file against qrels.
    Eval(EvalArgs),
    /// Generate a deterministic synthetic collection.
    GenSynthetic(GenArgs),
}

#[derive(Args)]
struct IndexOptions {
    /// Keyword cutoff ratio in (0, 1].
    #[arg(long)]
    ratio: Option<f64>,
    /// Co-occurrence window for keyword extraction.
    #[arg(long)]
    window: Option<usize>,
    /// Index every distinct term instead of the keyword profile.
    #[arg(long)]
    full_text: bool,
}

impl IndexOptions {
    fn to_config(&self, file: &KeyValueConfig) -> Result<IndexConfig> {
        let mut config = IndexConfig::default();
        config.ratio = self
            .ratio
            .or(file.get("ratio")?)
            .unwrap_or(config.ratio);
        config.window = self
            .window
            .or(file.get("window")?)
            .unwrap_or(config.window);
        config.full_text = self.full_text || file.get("full_text")?.unwrap_or(false);
        Ok(config)
    }
}

#[derive(Args)]
struct IndexArgs {
    /// Corpus file (JSON lines).
    #[arg(long)]
    corpus: PathBuf,
    /// Output index file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    options: IndexOptions,
    /// Index extensions: `syns:FILE`, `context:FILE[,K[,THRESHOLD]]`,
    /// `tfbins:N`. Repeatable.
    #[arg(long = "extend")]
    extend: Vec<String>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    options: IndexOptions,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    index: PathBuf,
    /// Emit a JSON record instead of the aligned table.
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Engine {
    Hgoe,
    Tfidf,
    Bm25,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::Hgoe => "hgoe",
            Engine::Tfidf => "tfidf",
            Engine::Bm25 => "bm25",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Task {
    /// Ad hoc document retrieval (keyword topics).
    Docs,
    /// Ad hoc entity retrieval (keyword topics).
    Entities,
    /// Related entity finding (single-entity topics).
    Ref,
    /// Entity list completion (entity-set topics).
    Elc,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Docs => "docs",
            Task::Entities => "entities",
            Task::Ref => "ref",
            Task::Elc => "elc",
        }
    }

    fn topic_kind(self) -> TopicKind {
        match self {
            Task::Docs | Task::Entities => TopicKind::Keyword,
            Task::Ref => TopicKind::Entity,
            Task::Elc => TopicKind::EntitySet,
        }
    }
}

#[derive(Args)]
struct RwsArgs {
    /// Random-walk length.
    #[arg(long)]
    walk_length: Option<usize>,
    /// Walks per seed node.
    #[arg(long)]
    repeats: Option<u32>,
    /// Expand term seeds to adjacent entities.
    #[arg(long)]
    expansion: bool,
    /// Ignore hyperedge direction.
    #[arg(long)]
    undirected: bool,
    /// Pick edges proportionally to weight.
    #[arg(long)]
    weighted: bool,
    /// Master seed for the walk generators.
    #[arg(long)]
    rng_seed: Option<u64>,
}

impl RwsArgs {
    fn to_params(&self, file: &KeyValueConfig) -> Result<RwsParams> {
        let mut params = RwsParams::default();
        params.walk_length = self
            .walk_length
            .or(file.get("walk_length")?)
            .unwrap_or(params.walk_length);
        params.repeats = self
            .repeats
            .or(file.get("repeats")?)
            .unwrap_or(params.repeats);
        params.expansion = self.expansion || file.get("expansion")?.unwrap_or(false);
        params.directed = !(self.undirected || file.get("undirected")?.unwrap_or(false));
        params.weighted = self.weighted || file.get("weighted")?.unwrap_or(false);
        params.rng_seed = self
            .rng_seed
            .or(file.get("rng_seed")?)
            .unwrap_or(params.rng_seed);
        Ok(params)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Engine::Hgoe)]
    engine: Engine,
    #[arg(long, value_enum)]
    task: Task,
    /// Hypergraph index (hgoe engine).
    #[arg(long)]
    index: Option<PathBuf>,
    /// Corpus file (tfidf/bm25 engines build their index from it).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Keyword query (docs/entities tasks).
    #[arg(long)]
    query: Option<String>,
    /// Input entity; repeatable (ref/elc tasks).
    #[arg(long = "entity")]
    entities: Vec<String>,
    /// Print at most this many results.
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[command(flatten)]
    rws: RwsArgs,
    #[command(flatten)]
    options: IndexOptions,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long, value_enum, default_value_t = Engine::Hgoe)]
    engine: Engine,
    #[arg(long, value_enum)]
    task: Task,
    #[arg(long)]
    topics: PathBuf,
    /// TREC run output file; per-query timing lands in `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Run tag written in the last TREC column.
    #[arg(long)]
    tag: Option<String>,
    #[command(flatten)]
    rws: RwsArgs,
    #[command(flatten)]
    options: IndexOptions,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Rank cutoff for P@k and NDCG@k.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Second run file; adds a paired Wilcoxon test on per-topic AP.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Emit JSON records instead of the aligned table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 200)]
    docs: usize,
    #[arg(long, default_value_t = 50)]
    entities: usize,
    /// Topics per task.
    #[arg(long, default_value_t = 20)]
    topics: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// `key = value` configuration file, `#` comments allowed.
#[derive(Default)]
struct KeyValueConfig {
    values: BTreeMap<String, String>,
}

impl KeyValueConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), idx + 1))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KeyValueConfig { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| anyhow!("config key {key}: unparseable value {raw:?}")),
        }
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let file_config = match &cli.config {
        Some(path) => KeyValueConfig::load(path)?,
        None => KeyValueConfig::default(),
    };
    let threads = cli.threads.or(file_config.get("threads")?).unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring thread pool")?;
    }
    match cli.command {
        Command::Index(args) => cmd_index(args, &file_config),
        Command::ExtractKeywords(args) => cmd_extract(args, &file_config),
        Command::Stats(args) => cmd_stats(args),
        Command::Search(args) => cmd_search(args, &file_config),
        Command::Batch(args) => cmd_batch(args, &file_config),
        Command::Eval(args) => cmd_eval(args),
        Command::GenSynthetic(args) => cmd_gen_synthetic(args),
    }
}

fn parse_extensions(
    specs: &[String],
    config: &mut IndexConfig,
) -> Result<(Option<Vec<Vec<String>>>, Option<BTreeMap<String, Vec<f64>>>)> {
    let mut synsets = None;
    let mut embeddings = None;
    for spec in specs {
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| anyhow!("extension {spec:?}: expected NAME:ARGS"))?;
        match name {
            "syns" => {
                synsets = Some(load_synsets(rest)?);
                config.extensions.insert(Extension::Syns);
            }
            "context" => {
                let mut parts = rest.split(',');
                let path = parts
                    .next()
                    .filter(|p| !p.is_empty())
                    .ok_or_else(|| anyhow!("context extension requires an embeddings file"))?;
                if let Some(k) = parts.next() {
                    config.context_k = k.parse().context("context neighbour count")?;
                }
                if let Some(threshold) = parts.next() {
                    config.context_threshold =
                        threshold.parse().context("context similarity threshold")?;
                }
                embeddings = Some(load_embeddings(path)?);
                config.extensions.insert(Extension::Context);
            }
            "tfbins" => {
                config.tf_bins = rest.parse().context("tf bin count")?;
                config.extensions.insert(Extension::TfBins);
            }
            other => bail!("unknown extension {other:?} (expected syns, context or tfbins)"),
        }
    }
    Ok((synsets, embeddings))
}

fn cmd_index(args: IndexArgs, file_config: &KeyValueConfig) -> Result<()> {
    let mut config = args.options.to_config(file_config)?;
    let (synsets, embeddings) = parse_extensions(&args.extend, &mut config)?;
    let docs = load_corpus_strict(&args.corpus)?;
    let started = Instant::now();
    let (graph, report) = build_index(&docs, &config, synsets.as_deref(), embeddings.as_ref())?;
    graph.save(&args.out)?;
    let stats = graph.stats();
    println!(
        "indexed {} documents in {:.1}s -> {}",
        report.docs_indexed,
        started.elapsed().as_secs_f64(),
        args.out.display()
    );
    println!(
        "nodes: {}  edges: {}  empty docs: {}  degenerate docs: {}",
        stats.total_nodes, stats.total_edges, report.empty_documents, report.degenerate_documents
    );
    if report.synonym_edges + report.context_edges + report.tf_bin_edges > 0 {
        println!(
            "extension edges: {} synonym, {} context, {} tf-bin ({} small bins skipped)",
            report.synonym_edges,
            report.context_edges,
            report.tf_bin_edges,
            report.skipped_small_bins
        );
    }
    Ok(())
}

fn cmd_extract(args: ExtractArgs, file_config: &KeyValueConfig) -> Result<()> {
    let config = args.options.to_config(file_config)?;
    let docs = load_corpus_strict(&args.corpus)?;
    let profiles = profile_documents(&docs, &config)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    for profile in &profiles {
        serde_json::to_writer(&mut out, profile)?;
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let graph = Hypergraph::load(&args.index)?;
    let stats = graph.stats();
    if args.json {
        println!("{}", serde_json::to_string(&stats)?);
        return Ok(());
    }
    println!("{:<16} {:>10}", "nodes", stats.total_nodes);
    for (kind, count) in &stats.nodes_by_kind {
        println!("  {kind:<14} {count:>10}");
    }
    println!("{:<16} {:>10}", "edges", stats.total_edges);
    for (kind, count) in &stats.edges_by_kind {
        println!("  {kind:<14} {count:>10}");
    }
    println!("{:<16} {:>10}", "degenerate", stats.degenerate_document_edges);
    Ok(())
}

/// Everything a query needs, prepared once per invocation.
enum Backend {
    Hgoe(Hypergraph, RwsParams),
    Inverted {
        engine: Engine,
        /// Keyword-profile index over documents (docs task).
        documents: Option<InvertedIndex>,
        /// Virtual-document index over entities (other tasks).
        entities: Option<EntityIndex>,
    },
}

impl Backend {
    fn prepare(
        engine: Engine,
        task: Task,
        index: Option<&Path>,
        corpus: Option<&Path>,
        rws: &RwsParams,
        config: &IndexConfig,
    ) -> Result<Backend> {
        match engine {
            Engine::Hgoe => {
                let path = index
                    .ok_or_else(|| anyhow!("the hgoe engine requires --index"))?;
                Ok(Backend::Hgoe(Hypergraph::load(path)?, rws.clone()))
            }
            Engine::Tfidf | Engine::Bm25 => {
                let path = corpus.ok_or_else(|| {
                    anyhow!("the {} engine requires --corpus to build its index", engine.name())
                })?;
                let docs = load_corpus_strict(path)?;
                let ratio = config.effective_ratio();
                let (documents, entities) = match task {
                    Task::Docs => {
                        let profiles = profile_documents(&docs, config)?;
                        (Some(build_document_index(&profiles)?), None)
                    }
                    Task::Entities | Task::Ref | Task::Elc => {
                        (None, Some(build_entity_index(&docs, ratio, config.window)?))
                    }
                };
                Ok(Backend::Inverted { engine, documents, entities })
            }
        }
    }

    fn query(&self, topic_id: &str, task: Task, query: &str, entities: &[String]) -> Result<RankedList> {
        match self {
            Backend::Hgoe(graph, params) => {
                let searcher = Searcher::new(graph, params.clone());
                let list = match task {
                    Task::Docs => searcher.ad_hoc_document_retrieval(topic_id, query)?,
                    Task::Entities => searcher.ad_hoc_entity_retrieval(topic_id, query)?,
                    Task::Ref => searcher.related_entity_finding(topic_id, &entities[0])?,
                    Task::Elc => searcher.entity_list_completion(topic_id, entities)?,
                };
                Ok(list)
            }
            Backend::Inverted { engine, documents, entities: entity_index } => match task {
                Task::Docs => {
                    let index = documents.as_ref().expect("document index prepared");
                    let terms = preprocess(query);
                    Ok(score_inverted(*engine, topic_id, &terms, index, TargetKind::DocumentEdge))
                }
                Task::Entities => {
                    let entity_index = entity_index.as_ref().expect("entity index prepared");
                    let terms = preprocess(query);
                    Ok(score_inverted(
                        *engine,
                        topic_id,
                        &terms,
                        &entity_index.index,
                        TargetKind::EntityNode,
                    ))
                }
                Task::Ref | Task::Elc => {
                    let entity_index = entity_index.as_ref().expect("entity index prepared");
                    more_like_this(*engine, topic_id, entities, entity_index)
                }
            },
        }
    }
}

fn score_inverted(
    engine: Engine,
    topic_id: &str,
    terms: &[String],
    index: &InvertedIndex,
    target: TargetKind,
) -> RankedList {
    match engine {
        Engine::Tfidf => score_tfidf(topic_id, terms, index, target),
        Engine::Bm25 => score_bm25(topic_id, terms, index, target, BM25_K1, BM25_B),
        Engine::Hgoe => unreachable!("hgoe handled by the hypergraph backend"),
    }
}

/// More-like-this for either inverted-index scorer: the query is always
/// the pooled top-IDF profile terms; the engine picks the final scorer.
fn more_like_this(
    engine: Engine,
    topic_id: &str,
    entities: &[String],
    entity_index: &EntityIndex,
) -> Result<RankedList> {
    if engine == Engine::Bm25 {
        let (list, unresolved) =
            more_like_this_completion(topic_id, entities, entity_index, MLT_TOP_TERMS)?;
        for entity in unresolved {
            eprintln!("warning: topic {topic_id}: entity {entity:?} not in the entity index");
        }
        return Ok(list);
    }
    // TF-IDF variant: same term selection, different final scorer.
    let (query, unresolved) = mlt_query(entities, entity_index, MLT_TOP_TERMS)?;
    for entity in unresolved {
        eprintln!("warning: topic {topic_id}: entity {entity:?} not in the entity index");
    }
    let mut list = score_tfidf(topic_id, &query, &entity_index.index, TargetKind::EntityNode);
    list.entries.retain(|(item, _)| !entities.contains(item));
    Ok(list)
}

fn cmd_search(args: SearchArgs, file_config: &KeyValueConfig) -> Result<()> {
    let params = args.rws.to_params(file_config)?;
    let config = args.options.to_config(file_config)?;
    let (query, entities) = query_inputs(args.task, args.query.as_deref(), &args.entities)?;
    let backend = Backend::prepare(
        args.engine,
        args.task,
        args.index.as_deref(),
        args.corpus.as_deref(),
        &params,
        &config,
    )?;
    let started = Instant::now();
    let list = backend.query("query", args.task, &query, &entities)?;
    let elapsed = started.elapsed();
    if list.is_empty() {
        println!("no results");
    }
    for (rank, (item, score)) in list.entries.iter().take(args.top).enumerate() {
        println!("{:>4}  {score:.8}  {item}", rank + 1);
    }
    eprintln!("{} results in {:.1} ms", list.entries.len(), elapsed.as_secs_f64() * 1e3);
    Ok(())
}

/// Validate task/input compatibility and normalize the two query forms.
fn query_inputs(task: Task, query: Option<&str>, entities: &[String]) -> Result<(String, Vec<String>)> {
    match task {
        Task::Docs | Task::Entities => {
            let query = query
                .ok_or_else(|| anyhow!("task {} requires --query", task.name()))?;
            if !entities.is_empty() {
                bail!("task {} takes --query, not --entity", task.name());
            }
            Ok((query.to_string(), Vec::new()))
        }
        Task::Ref => {
            if query.is_some() || entities.len() != 1 {
                bail!("task ref takes exactly one --entity and no --query");
            }
            Ok((String::new(), entities.to_vec()))
        }
        Task::Elc => {
            if query.is_some() || entities.is_empty() {
                bail!("task elc takes one or more --entity and no --query");
            }
            Ok((String::new(), entities.to_vec()))
        }
    }
}

fn topic_inputs(topic: &Topic) -> (String, Vec<String>) {
    (
        topic.keyword_query.clone().unwrap_or_default(),
        topic.entities.clone(),
    )
}

fn cmd_batch(args: BatchArgs, file_config: &KeyValueConfig) -> Result<()> {
    let params = args.rws.to_params(file_config)?;
    let config = args.options.to_config(file_config)?;
    let backend = Backend::prepare(
        args.engine,
        args.task,
        args.index.as_deref(),
        args.corpus.as_deref(),
        &params,
        &config,
    )?;
    let topics = load_topics(&args.topics)?;
    let wanted = args.task.topic_kind();
    let selected: Vec<&Topic> = topics.iter().filter(|t| t.kind == wanted).collect();
    let skipped = topics.len() - selected.len();

    let tag = args
        .tag
        .clone()
        .unwrap_or_else(|| format!("{}-{}", args.engine.name(), args.task.name()));
    let file = File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    let mut per_topic_ms: BTreeMap<String, f64> = BTreeMap::new();
    for topic in &selected {
        let (query, entities) = topic_inputs(topic);
        let started = Instant::now();
        let list = backend.query(&topic.topic_id, args.task, &query, &entities)?;
        per_topic_ms.insert(topic.topic_id.clone(), started.elapsed().as_secs_f64() * 1e3);
        list.write_trec(&mut out, &tag)?;
    }
    out.flush()?;

    let avg_ms = if per_topic_ms.is_empty() {
        0.0
    } else {
        per_topic_ms.values().sum::<f64>() / per_topic_ms.len() as f64
    };
    let meta = serde_json::json!({
        "engine": args.engine.name(),
        "task": args.task.name(),
        "tag": tag,
        "topics": selected.len(),
        "topics_skipped_other_kind": skipped,
        "rng_seed": params.rng_seed,
        "avg_ms_per_query": avg_ms,
        "per_topic_ms": per_topic_ms,
    });
    let meta_path = meta_path(&args.out);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
        .with_context(|| format!("writing {}", meta_path.display()))?;
    println!(
        "{} topics -> {} ({:.1} ms/query avg, {} skipped for kind)",
        selected.len(),
        args.out.display(),
        avg_ms,
        skipped
    );
    Ok(())
}

fn meta_path(run: &Path) -> PathBuf {
    let mut name = run.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    run.with_file_name(name)
}

fn report_with_timing(run_path: &Path, report: &mut EvalReport) {
    let path = meta_path(run_path);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(meta) = serde_json::from_str::<serde_json::Value>(&text) {
            report.avg_time_per_query_ms = meta["avg_ms_per_query"].as_f64();
        }
    }
}

fn print_report(label: &str, report: &EvalReport) {
    println!("run: {label}");
    println!(
        "{:<14} {:>8} {:>8} {:>8}",
        "topic", "AP", format!("P@{}", report.k), format!("NDCG@{}", report.k)
    );
    for topic in &report.per_topic {
        println!(
            "{:<14} {:>8.4} {:>8.4} {:>8.4}",
            topic.topic_id, topic.ap, topic.p_at_k, topic.ndcg_at_k
        );
    }
    println!(
        "MAP {:.4}  GMAP {:.4}  P@{} {:.4}  NDCG@{} {:.4}",
        report.map, report.gmap, report.k, report.mean_p_at_k, report.k, report.mean_ndcg_at_k
    );
    if let Some(ms) = report.avg_time_per_query_ms {
        println!("avg time/query: {ms:.1} ms");
    }
}

fn report_json(label: &str, report: &EvalReport) -> serde_json::Value {
    serde_json::json!({
        "run": label,
        "k": report.k,
        "map": report.map,
        "gmap": report.gmap,
        "mean_p_at_k": report.mean_p_at_k,
        "mean_ndcg_at_k": report.mean_ndcg_at_k,
        "avg_ms_per_query": report.avg_time_per_query_ms,
        "per_topic": report.per_topic.iter().map(|t| {
            serde_json::json!({
                "topic": t.topic_id,
                "ap": t.ap,
                "p_at_k": t.p_at_k,
                "ndcg_at_k": t.ndcg_at_k,
                "judged": t.judged,
            })
        }).collect::<Vec<_>>(),
    })
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let qrels = QrelSet::from_qrels(load_qrels(&args.qrels)?);
    let run = load_run(&args.run)?;
    let mut report = aggregate(&run, &qrels, args.k);
    report_with_timing(&args.run, &mut report);

    let comparison = match &args.compare {
        Some(path) => {
            let other = load_run(path)?;
            let mut other_report = aggregate(&other, &qrels, args.k);
            report_with_timing(path, &mut other_report);
            let a: Vec<f64> = report.per_topic.iter().map(|t| t.ap).collect();
            let b: Vec<f64> = other_report.per_topic.iter().map(|t| t.ap).collect();
            let test = wilcoxon_signed_rank(&a, &b)?;
            Some((path.display().to_string(), other_report, test))
        }
        None => None,
    };

    if args.json {
        let mut record = serde_json::Map::new();
        record.insert("primary".into(), report_json(&args.run.display().to_string(), &report));
        if let Some((label, other_report, test)) = &comparison {
            record.insert("comparison".into(), report_json(label, other_report));
            record.insert(
                "wilcoxon".into(),
                serde_json::json!({
                    "statistic": test.statistic,
                    "p_value": test.p_value,
                    "n_nonzero": test.n_nonzero,
                    "degenerate": test.degenerate,
                }),
            );
        }
        println!("{}", serde_json::to_string(&serde_json::Value::Object(record))?);
        return Ok(());
    }

    print_report(&args.run.display().to_string(), &report);
    if let Some((label, other_report, test)) = comparison {
        println!();
        print_report(&label, &other_report);
        println!();
        if test.degenerate {
            println!("wilcoxon: all AP differences are zero");
        } else {
            println!(
                "wilcoxon signed-rank on AP: statistic {:.1}, two-sided p {:.6} (n={})",
                test.statistic, test.p_value, test.n_nonzero
            );
        }
    }
    Ok(())
}

fn cmd_gen_synthetic(args: GenArgs) -> Result<()> {
    let collection = generate(&SynthConfig {
        docs: args.docs,
        entities: args.entities,
        topics_per_task: args.topics,
        seed: args.seed,
    })?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    save_corpus(args.out.join("corpus.jsonl"), collection.documents.iter())?;
    for (task, set) in &collection.tasks {
        save_topics(args.out.join(format!("topics-{task}.jsonl")), set.topics.iter())?;
        save_qrels(args.out.join(format!("qrels-{task}.txt")), set.qrels.iter())?;
    }
    write_synsets(args.out.join("synsets.txt"), &collection.synsets)?;
    write_embeddings(args.out.join("embeddings.txt"), &collection.embeddings)?;
    println!(
        "wrote {} documents, {} tasks x {} topics to {}",
        collection.documents.len(),
        collection.tasks.len(),
        args.topics,
        args.out.display()
    );
    Ok(())
}
