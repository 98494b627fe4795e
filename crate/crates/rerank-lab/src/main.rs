//! Command-line entry point wiring retrieval, reranking, synthesis, reward
//! scoring, GRPO checks, and evaluation.
//!
//! Exit codes: 0 on success, 2 on validation errors, 3 on backend transport
//! failure.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use rerank_lab::bm25::{self, AnalyzerConfig};
use rerank_lab::data::{self, Query, RunEntry, DEFAULT_RUN_TAG};
use rerank_lab::engine::{
    self, Candidate, EngineError, IdentityBackend, LexicalBackend, OracleBackend, PromptConfig,
    RandomBackend, RankerBackend, Traced, WindowConfig,
};
use rerank_lab::error::BackendError;
use rerank_lab::eval::{self, CallStats};
use rerank_lab::grpo::{self, GrpoConfig};
use rerank_lab::http::{HttpBackend, HttpConfig};
use rerank_lab::metrics::{self, RewardMode};
use rerank_lab::rollout::{self, PromptStyle};
use rerank_lab::synth::{self, FilterOn, SynthConfig};

const EXIT_VALIDATION: u8 = 2;
const EXIT_BACKEND: u8 = 3;

#[derive(Parser)]
#[command(name = "rerank-lab", version, about = "Listwise reranking laboratory")]
struct Cli {
    /// TOML config file. Precedence: flags > config file > RERANK_LAB_* env.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BM25 retrieval: corpus + queries -> TREC run.
    Retrieve(RetrieveArgs),
    /// Sliding-window rerank of a run with a pluggable backend.
    Rerank(RerankArgs),
    /// Expand annotated queries into training instances by resampling.
    Synthesize(SynthesizeArgs),
    /// Score one model response against a training instance.
    Reward(RewardArgs),
    /// Advantages, per-token losses, and objective for a rollout group.
    GrpoCheck(GrpoCheckArgs),
    /// NDCG@k report for a run.
    Evaluate(EvaluateArgs),
    /// Print the embedded prompt templates (or a rendered sample).
    DumpPrompt(DumpPromptArgs),
}

/// Optional settings from the config file / environment.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Settings {
    endpoint: Option<String>,
    model: Option<String>,
    api_key: Option<String>,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
    timeout_secs: Option<u64>,
    attempts: Option<u32>,
    seed: Option<u64>,
    jobs: Option<usize>,
    tag: Option<String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut settings = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Settings::default(),
        };
        fn env_str(key: &str) -> Option<String> {
            std::env::var(key).ok().filter(|v| !v.is_empty())
        }
        fn env_parse<T: std::str::FromStr>(key: &str) -> Option<T> {
            env_str(key).and_then(|v| v.parse().ok())
        }
        settings.endpoint = settings.endpoint.or_else(|| env_str("RERANK_LAB_ENDPOINT"));
        settings.model = settings.model.or_else(|| env_str("RERANK_LAB_MODEL"));
        settings.api_key = settings.api_key.or_else(|| env_str("RERANK_LAB_API_KEY"));
        settings.temperature = settings
            .temperature
            .or_else(|| env_parse("RERANK_LAB_TEMPERATURE"));
        settings.max_tokens = settings
            .max_tokens
            .or_else(|| env_parse("RERANK_LAB_MAX_TOKENS"));
        settings.timeout_secs = settings
            .timeout_secs
            .or_else(|| env_parse("RERANK_LAB_TIMEOUT_SECS"));
        settings.attempts = settings
            .attempts
            .or_else(|| env_parse("RERANK_LAB_ATTEMPTS"));
        settings.seed = settings.seed.or_else(|| env_parse("RERANK_LAB_SEED"));
        settings.jobs = settings.jobs.or_else(|| env_parse("RERANK_LAB_JOBS"));
        settings.tag = settings.tag.or_else(|| env_str("RERANK_LAB_TAG"));
        Ok(settings)
    }
}

#[derive(Args)]
struct RetrieveArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Results per query.
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = bm25::DEFAULT_K1)]
    k1: f64,
    #[arg(long, default_value_t = bm25::DEFAULT_B)]
    b: f64,
    #[arg(long)]
    tag: Option<String>,
    /// Disable Porter stemming.
    #[arg(long)]
    no_stem: bool,
    /// Disable lowercasing.
    #[arg(long)]
    no_lowercase: bool,
}

#[derive(Args)]
struct RerankArgs {
    #[arg(long, required_unless_present = "dump_prompt")]
    run: Option<PathBuf>,
    #[arg(long, required_unless_present = "dump_prompt")]
    corpus: Option<PathBuf>,
    #[arg(long, required_unless_present = "dump_prompt")]
    queries: Option<PathBuf>,
    /// Relevance judgments; required by the oracle backend.
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long, default_value = "oracle")]
    backend: String,
    #[arg(long, default_value_t = 20)]
    window: usize,
    /// Window shift; defaults to half the window.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, default_value_t = 1)]
    passes: usize,
    #[arg(long, default_value = "reasoning")]
    style: String,
    /// Rerank the top this many entries per query.
    #[arg(long, default_value_t = 100)]
    depth: usize,
    #[arg(long, required_unless_present = "dump_prompt")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Write verbatim request/response bodies to this JSONL file.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = rollout::DEFAULT_TRUNCATE_TOKENS)]
    truncate_tokens: usize,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    attempts: Option<u32>,
    #[arg(long)]
    tag: Option<String>,
    /// Print the prompt templates for --style and exit.
    #[arg(long)]
    dump_prompt: bool,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[arg(long)]
    qrels: PathBuf,
    /// First-stage run supplying each query's candidate pool.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Candidates per sampled instance.
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 50)]
    repeats: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Candidate pool depth taken from the run.
    #[arg(long, default_value_t = 100)]
    pool_depth: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    filter_relevant: bool,
    #[arg(long, default_value_t = 0.1)]
    filter_threshold: f64,
    #[arg(long, default_value = "best_achievable")]
    filter_on: String,
}

#[derive(Args)]
struct RewardArgs {
    #[arg(long)]
    qrels: PathBuf,
    /// Training-instance JSONL file (first line is scored).
    #[arg(long)]
    instance: PathBuf,
    /// Raw model response text.
    #[arg(long)]
    response: PathBuf,
    #[arg(long, default_value = "normalized")]
    mode: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
}

#[derive(Args)]
struct GrpoCheckArgs {
    /// Rollout group, one JSON object per line.
    #[arg(long)]
    group: PathBuf,
    #[arg(long, default_value_t = grpo::DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = grpo::DEFAULT_STD_EPSILON)]
    std_epsilon: f64,
    /// Use sample (n-1) standard deviation.
    #[arg(long)]
    sample_std: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Print the JSON report instead of the text table.
    #[arg(long)]
    json: bool,
    /// Also write the JSON report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpPromptArgs {
    #[arg(long, default_value = "reasoning")]
    style: String,
    /// Render a sample window for this query instead of raw templates.
    #[arg(long)]
    query: Option<String>,
    /// Number of placeholder passages in the rendered sample.
    #[arg(long, default_value_t = 3)]
    num: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(EngineError::Backend { .. }) = cause.downcast_ref::<EngineError>() {
            return EXIT_BACKEND;
        }
        if cause.downcast_ref::<BackendError>().is_some() {
            return EXIT_BACKEND;
        }
        if let Some(rerank_lab::Error::Backend(_)) = cause.downcast_ref::<rerank_lab::Error>() {
            return EXIT_BACKEND;
        }
    }
    EXIT_VALIDATION
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Retrieve(args) => cmd_retrieve(args, &settings),
        Command::Rerank(args) => cmd_rerank(args, &settings),
        Command::Synthesize(args) => cmd_synthesize(args, &settings),
        Command::Reward(args) => cmd_reward(args),
        Command::GrpoCheck(args) => cmd_grpo_check(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::DumpPrompt(args) => cmd_dump_prompt(args),
    }
}

fn cmd_retrieve(args: RetrieveArgs, settings: &Settings) -> anyhow::Result<()> {
    if args.k < 1 {
        bail!("--k must be >= 1");
    }
    let corpus = data::load_corpus(&args.corpus)?;
    let queries = data::load_queries(&args.queries)?;
    let analyzer = AnalyzerConfig {
        lowercase: !args.no_lowercase,
        stem: !args.no_stem,
    };
    let index = bm25::build_index(&corpus, analyzer, args.k1, args.b)?;
    let tag = args
        .tag
        .or_else(|| settings.tag.clone())
        .unwrap_or_else(|| DEFAULT_RUN_TAG.to_string());

    let mut entries = Vec::new();
    for query in &queries {
        for (rank, (doc_id, score)) in bm25::search(&index, &query.text, args.k)
            .into_iter()
            .enumerate()
        {
            entries.push(RunEntry {
                query_id: query.query_id.clone(),
                doc_id,
                rank: (rank + 1) as u32,
                score,
                tag: tag.clone(),
            });
        }
    }
    data::write_run(&entries, &args.out)?;
    println!(
        "{}",
        serde_json::json!({
            "queries": queries.len(),
            "entries": entries.len(),
            "k": args.k,
            "k1": args.k1,
            "b": args.b,
            "out": args.out,
        })
    );
    Ok(())
}

enum Backend {
    Oracle,
    Identity,
    Random(RandomBackend),
    Lexical(LexicalBackend),
    Http(Box<HttpBackend>),
}

impl Backend {
    fn as_ranker(&self) -> &dyn RankerBackend {
        match self {
            Backend::Oracle => &OracleBackend,
            Backend::Identity => &IdentityBackend,
            Backend::Random(b) => b,
            Backend::Lexical(b) => b,
            Backend::Http(b) => b.as_ref(),
        }
    }
}

fn cmd_rerank(args: RerankArgs, settings: &Settings) -> anyhow::Result<()> {
    let style: PromptStyle = args.style.parse()?;
    if args.dump_prompt {
        print_templates(style);
        return Ok(());
    }

    let run_path = args.run.as_ref().expect("required by clap");
    let corpus_path = args.corpus.as_ref().expect("required by clap");
    let queries_path = args.queries.as_ref().expect("required by clap");
    let out_path = args.out.as_ref().expect("required by clap");

    let entries = data::load_run(run_path)?;
    if entries.is_empty() {
        bail!("run {} is empty", run_path.display());
    }
    let corpus = data::load_corpus(corpus_path)?;
    let queries: HashMap<String, Query> = data::load_queries(queries_path)?
        .into_iter()
        .map(|q| (q.query_id.clone(), q))
        .collect();
    let qrels = args.qrels.as_ref().map(data::load_qrels).transpose()?;

    let seed = args.seed.or(settings.seed).unwrap_or(7);
    let jobs = args.jobs.or(settings.jobs).unwrap_or(1).max(1);
    let tag = args
        .tag
        .clone()
        .or_else(|| settings.tag.clone())
        .unwrap_or_else(|| DEFAULT_RUN_TAG.to_string());

    let backend = match args.backend.as_str() {
        "oracle" => {
            if qrels.is_none() {
                bail!("--backend oracle requires --qrels");
            }
            Backend::Oracle
        }
        "identity" => Backend::Identity,
        "random" => Backend::Random(RandomBackend { seed }),
        "lexical" => Backend::Lexical(LexicalBackend::new()),
        "http" => {
            let endpoint = args
                .endpoint
                .clone()
                .or_else(|| settings.endpoint.clone())
                .ok_or_else(|| anyhow!("--backend http requires an endpoint (flag, config, or RERANK_LAB_ENDPOINT)"))?;
            let model = args
                .model
                .clone()
                .or_else(|| settings.model.clone())
                .unwrap_or_else(|| "default".to_string());
            Backend::Http(Box::new(HttpBackend::new(HttpConfig {
                endpoint,
                model,
                api_key: settings.api_key.clone(),
                temperature: args.temperature.or(settings.temperature).unwrap_or(0.0),
                max_tokens: args.max_tokens.or(settings.max_tokens).unwrap_or(2048),
                timeout: Duration::from_secs(
                    args.timeout_secs.or(settings.timeout_secs).unwrap_or(60),
                ),
                attempts: args.attempts.or(settings.attempts).unwrap_or(3),
                ..HttpConfig::default()
            })))
        }
        other => bail!("unknown backend {other:?} (expected http|oracle|identity|random|lexical)"),
    };

    let prompt = PromptConfig {
        style,
        truncate_tokens: args.truncate_tokens,
    };

    let groups = data::group_run_by_query(&entries);
    struct QueryOutcome {
        entries: Vec<RunEntry>,
        log: engine::CallLog,
        traces: Vec<engine::TraceRecord>,
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building thread pool")?;

    let outcomes: Vec<QueryOutcome> = pool.install(|| {
        groups
            .par_iter()
            .map(|(query_id, group)| -> anyhow::Result<QueryOutcome> {
                let query = queries.get(query_id).ok_or_else(|| {
                    anyhow!("query {query_id:?} missing from {}", queries_path.display())
                })?;
                let depth = args.depth.min(group.len());
                let head = &group[..depth];
                let tail = &group[depth..];

                let candidates: Vec<Candidate> = head
                    .iter()
                    .map(|e| -> anyhow::Result<Candidate> {
                        let passage = corpus
                            .get(&e.doc_id)
                            .ok_or_else(|| anyhow!("doc {:?} missing from corpus", e.doc_id))?;
                        Ok(Candidate {
                            doc_id: e.doc_id.clone(),
                            text: passage.text.clone(),
                            grade: qrels
                                .as_ref()
                                .map(|q| q.grade_or_zero(query_id, &e.doc_id))
                                .unwrap_or(0),
                        })
                    })
                    .collect::<anyhow::Result<_>>()?;

                // Short candidate lists shrink the window to fit.
                let window = args.window.min(candidates.len()).max(1);
                let stride = args
                    .stride
                    .unwrap_or_else(|| (args.window / 2).max(1))
                    .min(window)
                    .max(1);
                let cfg = WindowConfig {
                    window_size: window,
                    stride,
                    passes: args.passes,
                    top_k: 10,
                };

                let ranker = backend.as_ranker();
                let (perm, log, traces) = if args.trace.is_some() {
                    let traced = Traced::new(ranker);
                    let (perm, log) =
                        engine::slide_rerank(&candidates, query, &cfg, &prompt, &traced)?;
                    (perm, log, traced.into_records())
                } else {
                    let (perm, log) =
                        engine::slide_rerank(&candidates, query, &cfg, &prompt, ranker)?;
                    (perm, log, Vec::new())
                };

                let total = group.len();
                let mut out_entries = Vec::with_capacity(total);
                for (i, &orig) in perm.order().iter().enumerate() {
                    out_entries.push(RunEntry {
                        query_id: query_id.clone(),
                        doc_id: candidates[orig - 1].doc_id.clone(),
                        rank: (i + 1) as u32,
                        score: (total - i) as f64,
                        tag: tag.clone(),
                    });
                }
                for (i, e) in tail.iter().enumerate() {
                    let rank = depth + i + 1;
                    out_entries.push(RunEntry {
                        query_id: query_id.clone(),
                        doc_id: e.doc_id.clone(),
                        rank: rank as u32,
                        score: (total - rank + 1) as f64,
                        tag: tag.clone(),
                    });
                }
                Ok(QueryOutcome {
                    entries: out_entries,
                    log,
                    traces,
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    let mut all_entries = Vec::new();
    let mut merged = engine::CallLog::default();
    let mut traces = Vec::new();
    for outcome in outcomes {
        all_entries.extend(outcome.entries);
        merged.merge(outcome.log);
        traces.extend(outcome.traces);
    }
    data::write_run(&all_entries, out_path)?;

    if let Some(trace_path) = &args.trace {
        let mut body = String::new();
        for record in &traces {
            body.push_str(&serde_json::to_string(record)?);
            body.push('\n');
        }
        data::write_atomic(trace_path, body.as_bytes())?;
    }

    let num_queries = groups.len();
    let stats = CallStats {
        total_calls: merged.total_calls,
        windows_per_query: if merged.total_calls % num_queries == 0 {
            Some(merged.total_calls / num_queries)
        } else {
            None
        },
        repaired_windows: merged.repaired_count(),
    };
    let mut config_echo = serde_json::Map::new();
    config_echo.insert("style".into(), serde_json::to_value(style)?);
    config_echo.insert("window".into(), args.window.into());
    config_echo.insert(
        "stride".into(),
        args.stride.unwrap_or_else(|| (args.window / 2).max(1)).into(),
    );
    config_echo.insert("passes".into(), args.passes.into());
    config_echo.insert("depth".into(), args.depth.into());
    config_echo.insert("truncate_tokens".into(), args.truncate_tokens.into());
    config_echo.insert("jobs".into(), jobs.into());

    // With qrels at hand the reranked run is scored immediately; otherwise
    // only identity and accounting are reported.
    if let Some(qrels) = &qrels {
        let mut report = eval::evaluate_run(&all_entries, qrels, 10)?;
        report.backend = Some(backend.as_ranker().name().to_string());
        report.seed = Some(seed);
        report.calls = Some(stats);
        report.config = config_echo;
        println!("{}", serde_json::to_string(&report)?);
    } else {
        println!(
            "{}",
            serde_json::json!({
                "backend": backend.as_ranker().name(),
                "seed": seed,
                "queries": num_queries,
                "calls": stats,
                "config": config_echo,
                "out": out_path,
            })
        );
    }
    Ok(())
}

fn cmd_synthesize(args: SynthesizeArgs, settings: &Settings) -> anyhow::Result<()> {
    let qrels = data::load_qrels(&args.qrels)?;
    let entries = data::load_run(&args.run)?;
    let corpus = data::load_corpus(&args.corpus)?;
    let queries: HashMap<String, Query> = data::load_queries(&args.queries)?
        .into_iter()
        .map(|q| (q.query_id.clone(), q))
        .collect();
    let seed = args.seed.or(settings.seed).unwrap_or(7);

    let cfg = SynthConfig {
        m: args.m,
        repeats: args.repeats,
        filter_relevant: args.filter_relevant,
        filter_threshold: args.filter_threshold,
        filter_on: args.filter_on.parse::<FilterOn>()?,
        seed,
    };
    cfg.validate()?;

    let groups = data::group_run_by_query(&entries);
    let mut instances = Vec::new();
    let mut produced = 0usize;
    for (query_id, group) in &groups {
        let query = queries
            .get(query_id)
            .ok_or_else(|| anyhow!("query {query_id:?} missing from {}", args.queries.display()))?;
        let pool: Vec<String> = group
            .iter()
            .take(args.pool_depth)
            .map(|e| e.doc_id.clone())
            .collect();
        for doc_id in &pool {
            if corpus.get(doc_id).is_none() {
                bail!("doc {doc_id:?} from the run is missing from the corpus");
            }
        }
        let batch = synth::expand_states(query, &qrels, &pool, &cfg)?;
        produced += cfg.repeats;
        instances.extend(batch);
    }
    synth::write_instances(&instances, &args.out)?;
    println!(
        "{}",
        serde_json::json!({
            "queries": groups.len(),
            "instances": instances.len(),
            "filtered_out": produced - instances.len(),
            "m": cfg.m,
            "repeats": cfg.repeats,
            "seed": seed,
            "filter_on": cfg.filter_on,
            "filter_threshold": cfg.filter_threshold,
            "out": args.out,
        })
    );
    Ok(())
}

fn cmd_reward(args: RewardArgs) -> anyhow::Result<()> {
    let qrels = data::load_qrels(&args.qrels)?;
    let instances = synth::load_instances(&args.instance)?;
    let instance = instances
        .first()
        .ok_or_else(|| anyhow!("{} contains no instances", args.instance.display()))?;
    let response = std::fs::read_to_string(&args.response)
        .with_context(|| format!("reading {}", args.response.display()))?;
    let mode: RewardMode = args.mode.parse()?;

    let cs = instance.candidate_set()?;
    let parsed = rollout::parse_response(&response, cs.len());
    let breakdown = metrics::score_rollout(&parsed, &cs, &qrels, mode, args.k)?;
    println!("{}", serde_json::to_string_pretty(&breakdown)?);
    Ok(())
}

fn cmd_grpo_check(args: GrpoCheckArgs) -> anyhow::Result<()> {
    let group = grpo::load_group(&args.group)?;
    let cfg = GrpoConfig {
        beta: args.beta,
        std_epsilon: args.std_epsilon,
        sample_std: args.sample_std,
    };
    let outcome = grpo::grpo_objective(&group, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let entries = data::load_run(&args.run)?;
    let qrels = data::load_qrels(&args.qrels)?;
    let report = eval::evaluate_run(&entries, &qrels, args.k)?;
    let json = serde_json::to_string_pretty(&report)?;
    if args.json {
        println!("{json}");
    } else {
        print!("{}", report.table());
    }
    if let Some(out) = &args.out {
        data::write_atomic(out, json.as_bytes())?;
    }
    Ok(())
}

fn print_templates(style: PromptStyle) {
    match style {
        PromptStyle::Reasoning => {
            println!("--- system template ---");
            println!("{}", rollout::REASONING_SYSTEM_TEMPLATE);
            println!("--- post template ---");
            println!("{}", rollout::REASONING_POST_TEMPLATE);
        }
        PromptStyle::ZeroShot => {
            println!("--- system template ---");
            println!("{}", rollout::ZERO_SHOT_SYSTEM_TEMPLATE);
            println!("--- post template ---");
            println!("{}", rollout::ZERO_SHOT_POST_TEMPLATE);
        }
    }
}

fn cmd_dump_prompt(args: DumpPromptArgs) -> anyhow::Result<()> {
    let style: PromptStyle = args.style.parse()?;
    match args.query {
        None => print_templates(style),
        Some(text) => {
            if args.num < 1 {
                bail!("--num must be >= 1");
            }
            let query = Query {
                query_id: "sample".into(),
                text,
            };
            let passages: Vec<String> = (1..=args.num)
                .map(|i| format!("(sample passage {i})"))
                .collect();
            let messages =
                rollout::build_messages(&passages, &query, style, rollout::DEFAULT_TRUNCATE_TOKENS);
            println!("{}", serde_json::to_string_pretty(&messages)?);
        }
    }
    Ok(())
}
