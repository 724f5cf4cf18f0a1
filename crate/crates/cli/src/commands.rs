use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relsearch_core::graph::{graph_stats, BipartiteGraph};
use relsearch_core::matching::DEFAULT_MIN_SIMILARITY;
use relsearch_core::pipeline::run_pipeline;
use relsearch_core::relex::{self, ClassifierKind, DECISION_THRESHOLD};
use relsearch_core::search::{SearchOptions, SearchResponse, DEFAULT_EVIDENCE_LIMIT};
use relsearch_core::{BinaryLabel, CorpusSource, Execution, InvertedIndex, PipelineConfig, SearchEngine, SimRankParams};

use crate::api;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "relsearch", version, about = "Build and query a chemical–protein relation index")]
pub struct Cli {
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Machine,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index from an annotated corpus or a ChemProt directory.
    Build(BuildArgs),
    /// Print summary statistics of the index's entity graph.
    Stats(StatsArgs),
    /// Answer one query against an index.
    Query(QueryArgs),
    /// Serve the JSON search API.
    Serve(ServeArgs),
    /// Score a predictions file against gold labels.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// JSON-lines corpus of documents and entity mentions.
    #[arg(long, required_unless_present = "chemprot_dir", conflicts_with = "chemprot_dir")]
    pub corpus: Option<PathBuf>,
    /// Gold label sidecar for --corpus (doc, sentence, chem mention, protein mention, 0/1).
    #[arg(long, requires = "corpus")]
    pub gold: Option<PathBuf>,
    /// Directory with ChemProt abstracts, entities and relations files.
    #[arg(long)]
    pub chemprot_dir: Option<PathBuf>,
    /// oracle, cue-baseline or external.
    #[arg(long, default_value = "oracle")]
    pub classifier: String,
    /// Score sidecar for the external classifier.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Output index file.
    #[arg(long)]
    pub index: PathBuf,
    /// Store similar-entity lists in the index instead of computing them on demand.
    #[arg(long)]
    pub precompute_simrank: bool,
    #[arg(long, default_value_t = SimRankParams::default().decay)]
    pub simrank_c: f64,
    /// Write the classifier's scores for every pair to this file.
    #[arg(long)]
    pub export_predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Minimum trigram similarity for a fuzzy match.
    #[arg(long, default_value_t = DEFAULT_MIN_SIMILARITY)]
    pub min_similarity: f64,
    /// SimRank decay constant.
    #[arg(long, default_value_t = SimRankParams::default().decay)]
    pub simrank_c: f64,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    pub query: String,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Number of similar entities.
    #[arg(short, long, default_value_t = 5)]
    pub k: usize,
    /// Evidence sentences to skip per partner.
    #[arg(long, default_value_t = 0)]
    pub offset: usize,
    /// Evidence sentences shown per partner.
    #[arg(long, default_value_t = DEFAULT_EVIDENCE_LIMIT)]
    pub limit: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: IpAddr,
    /// Directory of static client assets served under /.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score sidecar to evaluate.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Gold label sidecar.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Build(args) => build(args, exec, out),
        Command::Stats(args) => stats(args, exec, out),
        Command::Query(args) => query(args, exec, out),
        Command::Serve(args) => serve(args, exec),
        Command::Eval(args) => eval(args, out),
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Data(format!("write failed: {e}"))
}

fn write_rows(out: &mut dyn Write, rows: &[(&str, String)], format: Format) -> Result<(), CliError> {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    for (k, v) in rows {
        match format {
            Format::Text => writeln!(out, "{k:<width$}  {v}"),
            Format::Machine => writeln!(out, "{k}\t{v}"),
        }
        .map_err(io_err)?;
    }
    Ok(())
}

fn simrank_params(c: f64) -> Result<SimRankParams, CliError> {
    let params = SimRankParams { decay: c, ..SimRankParams::default() };
    params.validate()?;
    Ok(params)
}

fn build(args: BuildArgs, exec: Execution, out: &mut dyn Write) -> Result<(), CliError> {
    let classifier: ClassifierKind = args.classifier.parse()?;
    let source = match (args.corpus, args.chemprot_dir) {
        (Some(corpus), None) => CorpusSource::Annotated { corpus, gold: args.gold },
        (None, Some(dir)) => CorpusSource::ChemProt { dir },
        _ => return Err(CliError::Config("give exactly one of --corpus and --chemprot-dir".into())),
    };
    let mut config = PipelineConfig::new(source, classifier);
    config.predictions = args.predictions;
    config.index_path = Some(args.index);
    config.simrank = simrank_params(args.simrank_c)?;
    config.precompute_similar = args.precompute_simrank;
    config.exec = exec;
    let output = run_pipeline(&config)?;
    if let Some(path) = args.export_predictions {
        let file = File::create(&path).map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        relex::write_scores_tsv(&mut w, &output.predictions).and_then(|_| w.flush()).map_err(io_err)?;
    }
    write_rows(out, &output.report.rows(), args.format)
}

fn stats(args: StatsArgs, exec: Execution, out: &mut dyn Write) -> Result<(), CliError> {
    let index = InvertedIndex::load(&args.index)?;
    let graph = BipartiteGraph::from_index(&index)?;
    let stats = graph_stats(&graph, exec);
    let rows: Vec<(&str, String)> = stats.rows().iter().map(|&(k, v)| (k, v.to_string())).collect();
    write_rows(out, &rows, args.format)
}

fn load_engine(args: &EngineArgs, exec: Execution) -> Result<SearchEngine, CliError> {
    if !(0.0..=1.0).contains(&args.min_similarity) {
        return Err(CliError::Config(format!("--min-similarity must lie in [0, 1], got {}", args.min_similarity)));
    }
    let params = simrank_params(args.simrank_c)?;
    let index = InvertedIndex::load(&args.index)?;
    Ok(SearchEngine::new(index, params, exec)?)
}

fn query(args: QueryArgs, exec: Execution, out: &mut dyn Write) -> Result<(), CliError> {
    if args.k == 0 || args.limit == 0 {
        return Err(CliError::Config("-k and --limit must be at least 1".into()));
    }
    let engine = load_engine(&args.engine, exec)?;
    let options = SearchOptions { k: args.k, min_similarity: args.engine.min_similarity, evidence_limit: args.limit, offset: args.offset };
    let response = engine.search(&args.query, &options);
    match args.format {
        Format::Machine => {
            let json = serde_json::to_string(&response).map_err(|e| CliError::Data(e.to_string()))?;
            writeln!(out, "{json}").map_err(io_err)
        }
        Format::Text => render_response(out, &response).map_err(io_err),
    }
}

fn render_response(out: &mut dyn Write, r: &SearchResponse) -> std::io::Result<()> {
    writeln!(out, "query: {}", r.query)?;
    let Some(m) = &r.matched else {
        return writeln!(out, "no entity matched");
    };
    writeln!(out, "matched: {} ({}, class {}, similarity {:.3})", m.canonical, m.etype, m.class_id, m.similarity)?;
    if !m.external_ids.is_empty() {
        writeln!(out, "ids: {}", m.external_ids.join(", "))?;
    }
    writeln!(out)?;
    writeln!(out, "similar:")?;
    if r.similar.is_empty() {
        writeln!(out, "  (none)")?;
    }
    for s in &r.similar {
        writeln!(out, "  {:<30} {:.4}", s.canonical, s.score)?;
    }
    writeln!(out)?;
    writeln!(out, "related:")?;
    if r.related.is_empty() {
        writeln!(out, "  (none)")?;
    }
    for (i, p) in r.related.iter().enumerate() {
        writeln!(out, "  {}. {} ({}) — {} co-mention(s)", i + 1, p.canonical, p.etype, p.co_mention_count)?;
        for e in &p.evidence {
            let link = e.source_url.as_deref().map(|u| format!(" <{u}>")).unwrap_or_default();
            writeln!(out, "     [{}] {}{}", e.doc_id, e.title, link)?;
            writeln!(out, "       {}", e.sentence_text)?;
        }
        let shown = p.offset + p.evidence.len();
        if shown < p.total {
            writeln!(out, "     … {} more", p.total - shown)?;
        }
    }
    Ok(())
}

fn serve(args: ServeArgs, exec: Execution) -> Result<(), CliError> {
    if let Some(dir) = &args.static_dir {
        if !dir.is_dir() {
            return Err(CliError::Config(format!("static directory {} does not exist", dir.display())));
        }
    }
    let engine = Arc::new(load_engine(&args.engine, exec)?);
    let app = api::router(engine, args.engine.min_similarity, args.static_dir.as_deref());
    let addr = SocketAddr::new(args.bind, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Config(format!("cannot start runtime: {e}")))?;
    runtime.block_on(api::serve(app, addr)).map_err(|e| CliError::Config(format!("cannot serve on {addr}: {e}")))
}

fn eval(args: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let predictions: HashMap<_, _> = relex::read_scores_tsv(&args.predictions)?
        .into_iter()
        .map(|(key, score)| (key, if score >= DECISION_THRESHOLD { BinaryLabel::Positive } else { BinaryLabel::Negative }))
        .collect();
    let gold = relex::read_gold_tsv(&args.gold)?;
    let m = relex::evaluate_keyed(&predictions, &gold)?;
    let rows = [
        ("instances", m.total().to_string()),
        ("tp", m.tp.to_string()),
        ("fp", m.fp.to_string()),
        ("fn", m.fn_.to_string()),
        ("tn", m.tn.to_string()),
        ("precision", format!("{:.6}", m.precision)),
        ("recall", format!("{:.6}", m.recall)),
        ("f1", format!("{:.6}", m.f1)),
    ];
    write_rows(out, &rows, args.format)
}
