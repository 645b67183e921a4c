//! `wn2v`: one subcommand per pipeline stage.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags, missing inputs),
//! 1 on runtime failures.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use wordnet2vec::apsp::{path_length_histogram, run_apsp, write_histogram_csv, ApspConfig};
use wordnet2vec::eval::{
    compare_reports, compare_to_baseline, indomain_report, run_transfer, Alternative, EvalConfig,
    EvalError, EvalReport, Protocol, DEFAULT_METHOD,
};
use wordnet2vec::graph::{build_word_graph, graph_stats, WordGraph};
use wordnet2vec::ingest::{export_tsv, parse_tsv_file, parse_wndb_dir};
use wordnet2vec::learn::{train, FeatureMatrix, LabeledDataset, TrainConfig};
use wordnet2vec::matrix::{open_matrix, UNREACHABLE};
use wordnet2vec::synthetic::{reviews_to_jsonl, toy_wordnet_tsv, SyntheticCorpus};
use wordnet2vec::text::{read_reviews_jsonl, Lemmatizer, UnreachablePolicy, Vectorizer};
use wordnet2vec::vectors::VectorSet;

use config::{FileConfig, Unreachable};

#[derive(Parser)]
#[command(
    name = "wn2v",
    version,
    about = "WordNet distance vectors and sentiment evaluation"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a lexical database and write the simplified word graph.
    BuildGraph(BuildGraphArgs),
    /// Compute all-pairs shortest paths into a matrix file.
    Apsp(ApspArgs),
    /// Summarize a matrix and optionally write its distance histogram.
    Stats(StatsArgs),
    /// Turn reviews into document vectors.
    Vectorize(VectorizeArgs),
    /// Train a logistic-regression model on document vectors.
    Train(TrainArgs),
    /// Run the in-domain or transfer evaluation protocol.
    Evaluate(EvaluateArgs),
    /// Wilcoxon signed-rank test between two reports, or a report and its baseline.
    Test(TestArgs),
    /// Write the bundled toy lexical database as TSV.
    SynthWordnet(SynthWordnetArgs),
    /// Write a synthetic review corpus for the toy database.
    SynthReviews(SynthReviewsArgs),
}

#[derive(Args)]
struct BuildGraphArgs {
    /// Directory holding WNDB data.noun, data.verb, data.adj, data.adv.
    #[arg(long, conflicts_with = "tsv")]
    wordnet: Option<PathBuf>,
    /// Lexical database in TSV interchange format.
    #[arg(long)]
    tsv: Option<PathBuf>,
    /// Output graph cache.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the parsed database as TSV.
    #[arg(long)]
    export_tsv: Option<PathBuf>,
}

#[derive(Args)]
struct ApspArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Source rows per work unit.
    #[arg(long)]
    chunk_size: Option<usize>,
    #[arg(long, env = "WN2V_WORKERS")]
    workers: Option<usize>,
    /// Continue an interrupted run, reusing verified chunks.
    #[arg(long)]
    resume: bool,
    /// Stop after this many chunks, leaving the output resumable.
    #[arg(long)]
    max_chunks: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Write `distance,count` rows here.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(Args)]
struct VectorizeArgs {
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// JSON Lines review files; documents without a domain take the file stem.
    #[arg(long, num_args = 1..)]
    reviews: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Review text is already space-separated lemmas.
    #[arg(long)]
    pre_lemmatized: bool,
    /// Lemmatizer exception lists in WordNet `.exc` format.
    #[arg(long, num_args = 1..)]
    exceptions: Vec<PathBuf>,
    /// `max-plus-one` or a fixed distance to use for unreachable pairs.
    #[arg(long)]
    unreachable: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// L2 strength on non-bias weights (default 1/m).
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    memory_size: Option<usize>,
    /// Skip feature standardization.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, num_args = 1..)]
    vectors: Vec<PathBuf>,
    /// Train on these domains only (default: all).
    #[arg(long, num_args = 1..)]
    domain: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ProtocolArg {
    Indomain,
    Transfer,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, num_args = 1..)]
    vectors: Vec<PathBuf>,
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    /// Training share of each domain for the in-domain protocol.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Split each class separately.
    #[arg(long)]
    stratified: bool,
    /// Method name recorded in the report.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the cells as TSV.
    #[arg(long)]
    tsv: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    report_a: PathBuf,
    /// Second report; without it, report A is tested against its baseline.
    #[arg(long)]
    report_b: Option<PathBuf>,
    #[arg(long, default_value = "two_sided")]
    alternative: Alternative,
    /// Write the test record as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthWordnetArgs {
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthReviewsArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    domain: Option<String>,
}

/// Bad invocation: exits with code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Flag value, else config value; the result must exist on disk.
fn input(
    flag: &str,
    given: Option<PathBuf>,
    configured: Option<PathBuf>,
) -> anyhow::Result<PathBuf> {
    let path = given.or(configured).ok_or_else(|| {
        usage(format!(
            "--{flag} is required (or set it in the config file)"
        ))
    })?;
    check_exists(flag, &path)?;
    Ok(path)
}

fn check_exists(flag: &str, path: &Path) -> anyhow::Result<()> {
    if !path.exists() {
        return Err(usage(format!(
            "--{flag}: '{}' does not exist",
            path.display()
        )));
    }
    Ok(())
}

fn inputs(flag: &str, given: Vec<PathBuf>, configured: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let paths = if given.is_empty() {
        configured.to_vec()
    } else {
        given
    };
    if paths.is_empty() {
        return Err(usage(format!(
            "--{flag} is required (or set it in the config file)"
        )));
    }
    for p in &paths {
        check_exists(flag, p)?;
    }
    Ok(paths)
}

fn output(
    flag: &str,
    given: Option<PathBuf>,
    configured: Option<PathBuf>,
) -> anyhow::Result<PathBuf> {
    let path = given.or(configured).ok_or_else(|| {
        usage(format!(
            "--{flag} is required (or set paths.output_dir in the config file)"
        ))
    })?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating output directory {}", parent.display()))?;
    }
    Ok(path)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 over the canonical JSON of the effective settings and inputs.
fn digest_of(value: &serde_json::Value) -> [u8; 32] {
    Sha256::digest(serde_json::to_vec(value).expect("json serializes")).into()
}

/// Sidecar written next to outputs whose format has no room for it.
#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_digest: String,
    seed: u64,
    settings: &'a serde_json::Value,
}

fn meta_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn write_meta(
    output: &Path,
    command: &str,
    seed: u64,
    settings: &serde_json::Value,
) -> anyhow::Result<()> {
    let meta = Provenance {
        tool: "wn2v",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_digest: hex::encode(digest_of(settings)),
        seed,
        settings,
    };
    let path = meta_path(output);
    std::fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn cmd_build_graph(args: BuildGraphArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let (db, source) = match (args.wordnet, args.tsv) {
        (Some(dir), None) => {
            check_exists("wordnet", &dir)?;
            (parse_wndb_dir(&dir)?, json!({"wordnet": dir}))
        }
        (None, Some(tsv)) => {
            check_exists("tsv", &tsv)?;
            (parse_tsv_file(&tsv)?, json!({"tsv": tsv}))
        }
        (None, None) => match (&cfg.paths.wordnet, &cfg.paths.tsv) {
            (Some(dir), None) => {
                check_exists("wordnet", dir)?;
                (parse_wndb_dir(dir)?, json!({"wordnet": dir}))
            }
            (None, Some(tsv)) => {
                check_exists("tsv", tsv)?;
                (parse_tsv_file(tsv)?, json!({"tsv": tsv}))
            }
            (Some(_), Some(_)) => {
                return Err(usage("config sets both paths.wordnet and paths.tsv"))
            }
            (None, None) => return Err(usage("one of --wordnet or --tsv is required")),
        },
        (Some(_), Some(_)) => unreachable!("clap rejects --wordnet with --tsv"),
    };
    let out = output("out", args.out, cfg.output(&cfg.paths.graph, "graph.wng"))?;
    let g = build_word_graph(&db)?;
    g.save(&out)?;
    let tsv = export_tsv(&db);
    if let Some(path) = args.export_tsv {
        std::fs::write(&path, &tsv).with_context(|| format!("writing {}", path.display()))?;
    }

    let stats = graph_stats(&g);
    let counts = db.counts();
    println!("synsets\t{}", db.synsets().len());
    println!("semantic_relations\t{}", counts.semantic);
    println!("lexical_relations\t{}", counts.lexical);
    println!("nodes\t{}", g.node_count());
    println!("edges\t{}", g.edge_count());
    println!("components\t{}", stats.component_sizes.len());
    println!(
        "largest_component\t{}",
        stats.component_sizes.first().copied().unwrap_or(0)
    );
    println!("graph_fingerprint\t{}", hex::encode(g.fingerprint()));

    let settings = json!({"source": source, "database_sha256": sha256_hex(tsv.as_bytes())});
    write_meta(&out, "build-graph", cfg.seed.unwrap_or(0), &settings)
}

fn cmd_apsp(args: ApspArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let graph_path = input(
        "graph",
        args.graph,
        cfg.output(&cfg.paths.graph, "graph.wng"),
    )?;
    let out = output(
        "out",
        args.out,
        cfg.output(&cfg.paths.matrix, "matrix.wn2v"),
    )?;
    let g = WordGraph::load(&graph_path)?;
    let mut apsp = ApspConfig::new(&out);
    if let Some(c) = args.chunk_size.or(cfg.apsp.chunk_size) {
        apsp.chunk_size = c;
    }
    if let Some(w) = args.workers.or(cfg.apsp.workers) {
        apsp.worker_count = w;
    }
    apsp.resume = args.resume;
    apsp.max_chunks = args.max_chunks;
    log::info!(
        "apsp over {} nodes, chunk size {}, {} workers",
        g.node_count(),
        apsp.chunk_size,
        apsp.worker_count
    );
    let outcome = run_apsp(&g, &apsp)?;
    println!("chunks_total\t{}", outcome.total_chunks);
    println!("chunks_computed\t{}", outcome.computed_chunks);
    println!("chunks_reused\t{}", outcome.reused_chunks);
    if !outcome.complete {
        println!("complete\tfalse");
        eprintln!("matrix incomplete; rerun with --resume to finish");
        return Ok(());
    }
    println!("complete\ttrue");
    println!("max_distance\t{}", outcome.max_distance);
    // Worker count and chunk size do not change the matrix bytes, so they
    // stay out of the digest.
    let settings = json!({"graph_fingerprint": hex::encode(g.fingerprint())});
    write_meta(&out, "apsp", cfg.seed.unwrap_or(0), &settings)
}

fn cmd_stats(args: StatsArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let path = input(
        "matrix",
        args.matrix,
        cfg.output(&cfg.paths.matrix, "matrix.wn2v"),
    )?;
    let m = open_matrix(&path)?;
    let hist = path_length_histogram(&m)?;
    let n = m.node_count() as u64;
    let unreachable = hist.get(&UNREACHABLE).copied().unwrap_or(0);
    let (mut pairs, mut total) = (0u64, 0u64);
    for (&d, &c) in &hist {
        if d != 0 && d != UNREACHABLE {
            pairs += c;
            total += d as u64 * c;
        }
    }
    println!("nodes\t{n}");
    println!("max_distance\t{}", m.max_distance());
    println!("graph_fingerprint\t{}", hex::encode(m.fingerprint()));
    println!("reachable_pairs\t{pairs}");
    println!("unreachable_pairs\t{unreachable}");
    if pairs > 0 {
        println!("mean_distance\t{:.4}", total as f64 / pairs as f64);
    }
    for (d, c) in &hist {
        println!("distance_{d}\t{c}");
    }
    if let Some(out) = args.histogram {
        let out = output("histogram", Some(out), None)?;
        write_histogram_csv(&hist, &out).with_context(|| format!("writing {}", out.display()))?;
        let settings = json!({"graph_fingerprint": hex::encode(m.fingerprint())});
        write_meta(&out, "stats", cfg.seed.unwrap_or(0), &settings)?;
    }
    Ok(())
}

fn parse_unreachable(raw: &Unreachable) -> anyhow::Result<UnreachablePolicy> {
    match raw {
        Unreachable::Fixed(v) => Ok(UnreachablePolicy::Fixed(*v)),
        Unreachable::Named(s) => match s.replace('-', "_").as_str() {
            "max_plus_one" => Ok(UnreachablePolicy::MaxPlusOne),
            other => other.parse().map(UnreachablePolicy::Fixed).map_err(|_| {
                usage(format!(
                    "--unreachable: expected 'max-plus-one' or an integer, got '{s}'"
                ))
            }),
        },
    }
}

fn cmd_vectorize(args: VectorizeArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let matrix_path = input(
        "matrix",
        args.matrix,
        cfg.output(&cfg.paths.matrix, "matrix.wn2v"),
    )?;
    let reviews = inputs("reviews", args.reviews, &cfg.paths.reviews)?;
    let exceptions = if args.exceptions.is_empty() {
        cfg.paths.exceptions.clone()
    } else {
        args.exceptions
    };
    for p in &exceptions {
        check_exists("exceptions", p)?;
    }
    let out = output("out", args.out, cfg.output(&None, "vectors.wndv"))?;
    let policy = match args
        .unreachable
        .map(Unreachable::Named)
        .or(cfg.pipeline.unreachable.clone())
    {
        Some(raw) => parse_unreachable(&raw)?,
        None => UnreachablePolicy::default(),
    };
    let pre_lemmatized = args.pre_lemmatized || cfg.pipeline.pre_lemmatized.unwrap_or(false);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);

    let m = open_matrix(&matrix_path)?;
    let mut lemmatizer = Lemmatizer::new();
    let mut exception_hashes = Vec::new();
    for p in &exceptions {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        lemmatizer.add_exceptions(&text);
        exception_hashes.push(sha256_hex(text.as_bytes()));
    }
    let vectorizer = Vectorizer::new(&m)
        .with_lemmatizer(lemmatizer)
        .with_policy(policy)
        .pre_lemmatized(pre_lemmatized);

    let mut review_hashes = Vec::new();
    let mut batches = Vec::new();
    for path in &reviews {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        review_hashes.push(sha256_hex(&bytes));
        let docs = read_reviews_jsonl(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "default".into());
        batches.push((docs, stem));
    }
    let settings = json!({
        "matrix_fingerprint": hex::encode(m.fingerprint()),
        "reviews_sha256": review_hashes,
        "exceptions_sha256": exception_hashes,
        "unreachable_policy": policy,
        "pre_lemmatized": pre_lemmatized,
        "seed": seed,
    });
    let mut set = VectorSet::new(m.node_count(), *m.fingerprint(), digest_of(&settings), seed);
    let mut unmatched = 0usize;
    for (docs, stem) in &batches {
        let vectors = vectorizer.vectorize_all(docs)?;
        unmatched += vectors
            .iter()
            .filter(|v| v.matched_lemma_count == 0)
            .count();
        set.extend(docs, vectors, stem);
    }
    set.save(&out)?;

    println!("documents\t{}", set.records.len());
    println!("features\t{}", set.n_features);
    println!("unmatched_documents\t{unmatched}");
    for (i, d) in set.domains.iter().enumerate() {
        let n = set
            .records
            .iter()
            .filter(|r| r.domain as usize == i)
            .count();
        println!("domain_{d}\t{n}");
    }
    println!("config_digest\t{}", hex::encode(set.config_digest));
    Ok(())
}

fn train_config(args: &ModelArgs, cfg: &FileConfig, seed: u64) -> TrainConfig {
    let d = TrainConfig::default();
    TrainConfig {
        l2_lambda: args.l2.or(cfg.model.l2_lambda),
        max_iter: args.max_iter.or(cfg.model.max_iter).unwrap_or(d.max_iter),
        tolerance: args
            .tolerance
            .or(cfg.model.tolerance)
            .unwrap_or(d.tolerance),
        memory_size: args
            .memory_size
            .or(cfg.model.memory_size)
            .unwrap_or(d.memory_size),
        standardize: !args.no_standardize && cfg.model.standardize.unwrap_or(d.standardize),
        seed,
    }
}

/// Loads vector files that agree on their matrix; returns the datasets in
/// file then domain order, plus each file's config digest.
fn load_datasets(paths: &[PathBuf]) -> anyhow::Result<(Vec<LabeledDataset>, Vec<String>)> {
    let mut datasets = Vec::new();
    let mut digests = Vec::new();
    let mut reference: Option<([u8; 32], usize)> = None;
    for p in paths {
        let set = VectorSet::load(p)?;
        match reference {
            None => reference = Some((set.matrix_fingerprint, set.n_features)),
            Some(r) if r != (set.matrix_fingerprint, set.n_features) => {
                bail!("{} was vectorized against a different matrix", p.display())
            }
            Some(_) => {}
        }
        digests.push(hex::encode(set.config_digest));
        datasets.extend(set.datasets()?);
    }
    Ok((datasets, digests))
}

fn merge(datasets: &[LabeledDataset], name: &str) -> anyhow::Result<LabeledDataset> {
    let cols = datasets.first().map_or(0, |d| d.features.cols());
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for d in datasets {
        for i in 0..d.len() {
            data.extend_from_slice(d.features.row(i));
        }
        labels.extend_from_slice(&d.labels);
    }
    Ok(LabeledDataset::new(
        FeatureMatrix::new(labels.len(), cols, data),
        labels,
        name,
    )?)
}

fn cmd_train(args: TrainArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let vectors = inputs("vectors", args.vectors, &vectors_default(cfg))?;
    let out = output("out", args.out, cfg.output(&cfg.paths.model, "model.json"))?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let tc = train_config(&args.model, cfg, seed);
    let (datasets, digests) = load_datasets(&vectors)?;
    let selected: Vec<LabeledDataset> = if args.domain.is_empty() {
        datasets
    } else {
        for d in &args.domain {
            if !datasets.iter().any(|ds| &ds.domain == d) {
                return Err(usage(format!(
                    "--domain: no domain named '{d}' in the vectors"
                )));
            }
        }
        datasets
            .into_iter()
            .filter(|ds| args.domain.contains(&ds.domain))
            .collect()
    };
    let names: Vec<&str> = selected.iter().map(|d| d.domain.as_str()).collect();
    let ds = merge(&selected, &names.join("+"))?;
    let mut model = train(&ds, &tc)?;
    let settings = json!({"train": tc, "domains": names, "vectors_digests": digests});
    model.training.config_digest = Some(hex::encode(digest_of(&settings)));
    std::fs::write(&out, serde_json::to_string_pretty(&model)? + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    println!("rows\t{}", ds.len());
    println!("iterations\t{}", model.training.iterations);
    println!("final_loss\t{:.6}", model.training.final_loss);
    println!("converged\t{}", model.training.converged);
    Ok(())
}

fn vectors_default(cfg: &FileConfig) -> Vec<PathBuf> {
    if !cfg.paths.vectors.is_empty() {
        return cfg.paths.vectors.clone();
    }
    cfg.output(&None, "vectors.wndv").into_iter().collect()
}

fn cmd_evaluate(args: EvaluateArgs, cfg: &FileConfig) -> anyhow::Result<()> {
    let vectors = inputs("vectors", args.vectors, &vectors_default(cfg))?;
    let report_path = output(
        "report",
        args.report,
        cfg.output(&cfg.paths.report, "report.json"),
    )?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let protocol = match args.protocol {
        Some(ProtocolArg::Indomain) => Protocol::Indomain,
        Some(ProtocolArg::Transfer) => Protocol::Transfer,
        None => match cfg.eval.protocol.as_deref() {
            None | Some("indomain") => Protocol::Indomain,
            Some("transfer") => Protocol::Transfer,
            Some(other) => return Err(usage(format!("eval.protocol: unknown protocol '{other}'"))),
        },
    };
    let split_ratio = args.split.or(cfg.eval.split_ratio).unwrap_or(0.8);
    if !(split_ratio > 0.0 && split_ratio <= 1.0) {
        return Err(usage(format!("--split: {split_ratio} is outside (0, 1]")));
    }
    let ec = EvalConfig {
        split_ratio,
        seed,
        stratified: args.stratified || cfg.eval.stratified.unwrap_or(false),
        train: train_config(&args.model, cfg, seed),
    };
    let (datasets, digests) = load_datasets(&vectors)?;
    let mut report = match protocol {
        Protocol::Indomain => indomain_report(&datasets, &ec)?,
        Protocol::Transfer => run_transfer(&datasets, &ec)?,
    };
    report.method = args
        .method
        .or(cfg.eval.method.clone())
        .unwrap_or_else(|| DEFAULT_METHOD.to_string());
    let settings = json!({"eval": ec, "protocol": protocol, "vectors_digests": digests});
    report.config_digest = hex::encode(digest_of(&settings));
    match compare_to_baseline(&report, Alternative::TwoSided) {
        Ok(t) => report.tests.push(t),
        Err(EvalError::AllDifferencesZero) => {
            log::warn!("model and baseline tie on every cell; no test recorded")
        }
        Err(e) => return Err(e.into()),
    }
    report.save_json(&report_path)?;
    if let Some(tsv) = args.tsv {
        let tsv = output("tsv", Some(tsv), None)?;
        std::fs::write(&tsv, report.to_tsv())
            .with_context(|| format!("writing {}", tsv.display()))?;
        write_meta(&tsv, "evaluate", seed, &settings)?;
    }
    print!("{}", report.to_tsv());
    for t in &report.tests {
        println!(
            "# {} vs {} ({}): W = {}, p = {:.6}",
            t.method_a, t.method_b, t.alternative, t.statistic, t.p
        );
    }
    Ok(())
}

fn cmd_test(args: TestArgs) -> anyhow::Result<()> {
    check_exists("report-a", &args.report_a)?;
    let a = EvalReport::load_json(&args.report_a)?;
    let record = match args.report_b {
        Some(b_path) => {
            check_exists("report-b", &b_path)?;
            let b = EvalReport::load_json(&b_path)?;
            compare_reports(&a, &b, args.alternative)?
        }
        None => compare_to_baseline(&a, args.alternative)?,
    };
    println!("method_a\tmethod_b\talternative\tn\tW\tp\texact");
    println!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        record.method_a,
        record.method_b,
        record.alternative,
        record.n,
        record.statistic,
        record.p,
        record.exact
    );
    if let Some(out) = args.out {
        let out = output("out", Some(out), None)?;
        std::fs::write(&out, serde_json::to_string_pretty(&record)? + "\n")
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cmd_synth_wordnet(args: SynthWordnetArgs) -> anyhow::Result<()> {
    let out = output("out", Some(args.out), None)?;
    std::fs::write(&out, toy_wordnet_tsv()).with_context(|| format!("writing {}", out.display()))
}

fn cmd_synth_reviews(args: SynthReviewsArgs) -> anyhow::Result<()> {
    let out = output("out", Some(args.out), None)?;
    let reviews =
        SyntheticCorpus::default().generate(args.count, args.seed, args.domain.as_deref());
    std::fs::write(&out, reviews_to_jsonl(&reviews))
        .with_context(|| format!("writing {}", out.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(path) => {
            check_exists("config", path)?;
            FileConfig::load(path).map_err(usage)?
        }
        None => FileConfig::default(),
    };
    match cli.command {
        Command::BuildGraph(a) => cmd_build_graph(a, &cfg),
        Command::Apsp(a) => cmd_apsp(a, &cfg),
        Command::Stats(a) => cmd_stats(a, &cfg),
        Command::Vectorize(a) => cmd_vectorize(a, &cfg),
        Command::Train(a) => cmd_train(a, &cfg),
        Command::Evaluate(a) => cmd_evaluate(a, &cfg),
        Command::Test(a) => cmd_test(a),
        Command::SynthWordnet(a) => cmd_synth_wordnet(a),
        Command::SynthReviews(a) => cmd_synth_reviews(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unreachable_spellings() {
        let named = |s: &str| parse_unreachable(&Unreachable::Named(s.into()));
        assert_eq!(
            named("max-plus-one").unwrap(),
            UnreachablePolicy::MaxPlusOne
        );
        assert_eq!(
            named("max_plus_one").unwrap(),
            UnreachablePolicy::MaxPlusOne
        );
        assert_eq!(named("12").unwrap(), UnreachablePolicy::Fixed(12));
        assert!(named("far").unwrap_err().is::<UsageError>());
    }

    #[test]
    fn meta_sits_beside_output() {
        assert_eq!(
            meta_path(Path::new("out/m.wn2v")),
            PathBuf::from("out/m.wn2v.meta.json")
        );
    }

    #[test]
    fn digest_ignores_key_order() {
        let a = json!({"x": 1, "y": [1, 2]});
        let b: serde_json::Value = serde_json::from_str(r#"{"y":[1,2],"x":1}"#).unwrap();
        assert_eq!(digest_of(&a), digest_of(&b));
    }

    #[test]
    fn argument_surface_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
