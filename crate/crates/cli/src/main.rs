//! Command-line entry point wiring ingestion, training, labeling and
//! analytics into reproducible runs.
//!
//! Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 violated
//! internal invariant.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use anchorex::analytics::{
    default_events, events_in_window, parse_events, power_law_slope, similarity_heatmap,
    similarity_to_csv, timelines_to_csv, topic_timeline, EventMarker, Source, TimelineSeries,
    Weighting,
};
use anchorex::config::parse_config_text;
use anchorex::corex::{self, CorexModel, DocLabel, SeedSet};
use anchorex::corpus::{
    corpus_stats, parse_records, partition, records_to_jsonl, AccountList, CorpusStats,
    DateWindow, Microblog, RecordFormat,
};
use anchorex::fingerprint::fnv1a64;
use anchorex::pipeline::{self, PipelineConfig, SeedMode};
use anchorex::preprocess::{tokenize, vectorize, TokenizerConfig, Vocabulary};
use anchorex::svg;
use anchorex::{Error, Result};

#[derive(Parser)]
#[command(name = "anchorex", version, about = "Two-tier anchored topic modeling over microblog corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a record dump, split it into official/public corpora and write
    /// partition files plus exploratory statistics.
    Ingest(IngestArgs),
    /// Exploratory statistics of a record file (totals, top users, weekly
    /// volume, post lengths, power-law slope).
    Stats(StatsArgs),
    /// Run the full two-tier pipeline over partition files and write all
    /// artifacts (models, labels, seeds, timelines, heatmap, manifest).
    Run(RunArgs),
    /// Label a record file with a fitted model.
    Label(LabelArgs),
    /// Weekly timeline of one topic from labeled documents.
    Timeline(TimelineArgs),
    /// Cross-model topic-similarity heatmap from labeled documents.
    Similarity(SimilarityArgs),
    /// Human-readable summary of a run manifest.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input record file.
    #[arg(long)]
    input: PathBuf,
    /// Input format: jsonl or csv.
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// Tracked-accounts file (one handle per line); defaults to the four
    /// national accounts.
    #[arg(long)]
    officials: Option<PathBuf>,
    /// Study window start (YYYY-MM-DD).
    #[arg(long)]
    window_start: Option<NaiveDate>,
    /// Study window end (YYYY-MM-DD).
    #[arg(long)]
    window_end: Option<NaiveDate>,
    /// Users listed in the stats report.
    #[arg(long, default_value_t = 50)]
    top_n: usize,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: String,
    #[arg(long, default_value_t = 50)]
    top_n: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Official-corpus partition file.
    #[arg(long)]
    official: PathBuf,
    /// Public-corpus partition file.
    #[arg(long)]
    public: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: String,
    /// Curated seed-words file; defaults to the built-in groups.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Flat key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    /// extracted_only or extracted_plus_curated.
    #[arg(long)]
    seed_mode: Option<String>,
    #[arg(long)]
    rng_seed: Option<u64>,
    #[arg(long)]
    anchor_strength: Option<f64>,
    #[arg(long)]
    official_min_df: Option<usize>,
    #[arg(long)]
    public_min_df: Option<usize>,
    #[arg(long)]
    max_vocab: Option<usize>,
    #[arg(long)]
    min_token_len: Option<usize>,
    #[arg(long)]
    window_start: Option<NaiveDate>,
    #[arg(long)]
    window_end: Option<NaiveDate>,
    #[arg(long)]
    officials: Option<PathBuf>,
    /// Event markers file (date,label per line); defaults to the built-in
    /// key dates.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Worker threads hint.
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated artifact groups to emit: csv,svg,manifest.
    #[arg(long, default_value = "csv,svg,manifest")]
    emit: String,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: String,
    #[arg(long)]
    min_token_len: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TimelineArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: String,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    topic: usize,
    /// official or public.
    #[arg(long)]
    source: String,
    #[arg(long)]
    normalized: bool,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    window_start: Option<NaiveDate>,
    #[arg(long)]
    window_end: Option<NaiveDate>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimilarityArgs {
    #[arg(long)]
    official_docs: PathBuf,
    #[arg(long)]
    official_labels: PathBuf,
    #[arg(long)]
    public_docs: PathBuf,
    #[arg(long)]
    public_labels: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: String,
    #[arg(long)]
    topics: usize,
    /// tfidf or tf.
    #[arg(long, default_value = "tfidf")]
    weighting: String,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    manifest: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Run(args) => cmd_run(args),
        Command::Label(args) => cmd_label(args),
        Command::Timeline(args) => cmd_timeline(args),
        Command::Similarity(args) => cmd_similarity(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Io { .. } => 1,
                Error::Config(_) => 2,
                Error::Internal(_) => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn parse_format(name: &str) -> Result<RecordFormat> {
    RecordFormat::from_name(name)
        .ok_or_else(|| Error::config(format!("unknown record format {name:?} (jsonl or csv)")))
}

/// Reads a configuration-domain file (seeds, accounts, events, config),
/// mapping read failures to configuration errors so they exit with code 2.
fn read_config_file(path: &Path, role: &str) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::config(format!("{role} file {}: {e}", path.display())))
}

fn load_records(path: &Path, format: RecordFormat) -> Result<Vec<Microblog>> {
    let outcome = parse_records(path, format)?;
    if outcome.skipped > 0 {
        eprintln!(
            "warning: skipped {} malformed row(s) in {}",
            outcome.skipped,
            path.display()
        );
    }
    Ok(outcome.records)
}

fn load_officials(path: Option<&PathBuf>) -> Result<AccountList> {
    match path {
        Some(p) => AccountList::parse(&read_config_file(p, "accounts")?),
        None => Ok(AccountList::default_tracked()),
    }
}

fn load_window(start: Option<NaiveDate>, end: Option<NaiveDate>, base: DateWindow) -> Result<DateWindow> {
    DateWindow::new(start.unwrap_or(base.start), end.unwrap_or(base.end))
}

fn load_events(path: Option<&PathBuf>) -> Result<Vec<EventMarker>> {
    match path {
        Some(p) => parse_events(&read_config_file(p, "events")?),
        None => Ok(default_events()),
    }
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Prints to stdout, treating a closed pipe (e.g. `| head`) as success.
fn print_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Error::from(e)),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(serde::Serialize)]
struct IngestReport {
    official: usize,
    public: usize,
    dropped: usize,
    skipped_rows: usize,
    stats: CorpusStats,
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let officials = load_officials(args.officials.as_ref())?;
    let window = load_window(args.window_start, args.window_end, DateWindow::study_default())?;
    ensure_dir(&args.out_dir)?;
    let outcome = parse_records(&args.input, format)?;
    if outcome.records.is_empty() {
        eprintln!("warning: no usable records in {}", args.input.display());
    }
    let stats = corpus_stats(&outcome.records, args.top_n);
    let part = partition(outcome.records, &officials, &window);
    if part.official.is_empty() && part.public.is_empty() {
        eprintln!("warning: partition is empty (no post references a tracked account)");
    }
    let report = IngestReport {
        official: part.official.len(),
        public: part.public.len(),
        dropped: part.dropped,
        skipped_rows: outcome.skipped,
        stats,
    };
    write_out(&args.out_dir.join("official.jsonl"), records_to_jsonl(&part.official).as_bytes())?;
    write_out(&args.out_dir.join("public.jsonl"), records_to_jsonl(&part.public).as_bytes())?;
    let json = serde_json::to_string_pretty(&report).expect("report serialization");
    write_out(&args.out_dir.join("stats.json"), json.as_bytes())?;
    print_stdout(&format!(
        "official={} public={} dropped={} skipped_rows={}\n",
        report.official, report.public, report.dropped, report.skipped_rows
    ))
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let records = load_records(&args.input, format)?;
    let stats = corpus_stats(&records, args.top_n);
    let counts: Vec<f64> = stats.top_users.iter().map(|(_, c)| *c as f64).collect();
    let slope = power_law_slope(&counts).ok();
    #[derive(serde::Serialize)]
    struct StatsReport {
        stats: CorpusStats,
        power_law_slope: Option<f64>,
    }
    let json = serde_json::to_string_pretty(&StatsReport {
        stats,
        power_law_slope: slope,
    })
    .expect("stats serialization");
    match &args.out {
        Some(path) => write_out(path, json.as_bytes()),
        None => print_stdout(&format!("{json}\n")),
    }
}

struct EmitFlags {
    csv: bool,
    svg: bool,
    manifest: bool,
}

fn parse_emit(groups: &str) -> Result<EmitFlags> {
    let mut flags = EmitFlags {
        csv: false,
        svg: false,
        manifest: false,
    };
    for item in groups.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "csv" => flags.csv = true,
            "svg" => flags.svg = true,
            "manifest" => flags.manifest = true,
            other => {
                return Err(Error::config(format!(
                    "unknown emit group {other:?} (csv, svg, manifest)"
                )))
            }
        }
    }
    Ok(flags)
}

/// Applies config-file values onto the defaults, then flag overrides.
fn resolve_pipeline_config(args: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &args.config {
        let map = parse_config_text(&read_config_file(path, "config")?)?;
        apply_config_map(&mut cfg, &map)?;
    }
    if let Some(v) = args.topics {
        cfg.n_topics = v;
    }
    if let Some(v) = args.iters {
        cfg.n_iter = v;
    }
    if let Some(v) = args.top_k {
        cfg.top_k = v;
    }
    if let Some(v) = &args.seed_mode {
        cfg.seed_mode = SeedMode::from_name(v)
            .ok_or_else(|| Error::config(format!("unknown seed_mode {v:?}")))?;
    }
    if let Some(v) = args.rng_seed {
        cfg.rng_seed = v;
    }
    if let Some(v) = args.anchor_strength {
        cfg.anchor_strength = v;
    }
    if let Some(v) = args.official_min_df {
        cfg.official_min_df = v;
    }
    if let Some(v) = args.public_min_df {
        cfg.public_min_df = v;
    }
    if let Some(v) = args.max_vocab {
        cfg.max_vocab = v;
    }
    if let Some(v) = args.min_token_len {
        cfg.tokenizer.min_token_len = v;
    }
    if let Some(v) = args.threads {
        cfg.threads = v.max(1);
    }
    cfg.window = load_window(args.window_start, args.window_end, cfg.window)?;
    if args.officials.is_some() {
        cfg.officials = load_officials(args.officials.as_ref())?;
    }
    Ok(cfg)
}

fn apply_config_map(cfg: &mut PipelineConfig, map: &BTreeMap<String, String>) -> Result<()> {
    for (key, value) in map {
        match key.as_str() {
            "n_topics" => cfg.n_topics = parse_num(key, value)?,
            "n_iter" => cfg.n_iter = parse_num(key, value)?,
            "top_k" => cfg.top_k = parse_num(key, value)?,
            "seed_mode" => {
                cfg.seed_mode = SeedMode::from_name(value)
                    .ok_or_else(|| Error::config(format!("unknown seed_mode {value:?}")))?
            }
            "rng_seed" => cfg.rng_seed = parse_num(key, value)?,
            "anchor_strength" => cfg.anchor_strength = parse_num(key, value)?,
            "official_min_df" => cfg.official_min_df = parse_num(key, value)?,
            "public_min_df" => cfg.public_min_df = parse_num(key, value)?,
            "max_vocab" => cfg.max_vocab = parse_num(key, value)?,
            "min_token_len" => cfg.tokenizer.min_token_len = parse_num(key, value)?,
            "lowercase" => cfg.tokenizer.lowercase = parse_bool(key, value)?,
            "strip_urls" => cfg.tokenizer.strip_urls = parse_bool(key, value)?,
            "strip_mentions" => cfg.tokenizer.strip_mentions = parse_bool(key, value)?,
            "keep_hashtag_text" => cfg.tokenizer.keep_hashtag_text = parse_bool(key, value)?,
            "threads" => cfg.threads = parse_num::<usize>(key, value)?.max(1),
            "window_start" => cfg.window.start = parse_date(key, value)?,
            "window_end" => cfg.window.end = parse_date(key, value)?,
            "officials" => cfg.officials = AccountList::new(value.split(','))?,
            other => return Err(Error::config(format!("unknown config key {other:?}"))),
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("config key {key}: bad value {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(Error::config(format!("config key {key}: bad boolean {value:?}"))),
    }
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|_| Error::config(format!("config key {key}: bad date {value:?}")))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let emit = parse_emit(&args.emit)?;
    let cfg = resolve_pipeline_config(&args)?;
    let curated = match &args.seeds {
        Some(path) => SeedSet::parse(&read_config_file(path, "seeds")?)?,
        None => SeedSet::default_curated(),
    };
    let events = events_in_window(&load_events(args.events.as_ref())?, &cfg.window);
    ensure_dir(&args.out_dir)?;

    let official_docs = load_records(&args.official, format)?;
    let public_docs = load_records(&args.public, format)?;
    let result = pipeline::run_two_tier(&official_docs, &public_docs, &curated, &cfg)?;
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }

    let mut outputs: Vec<String> = Vec::new();
    let emit_file = |name: &str, bytes: &[u8], outputs: &mut Vec<String>| -> Result<()> {
        write_out(&args.out_dir.join(name), bytes)?;
        outputs.push(name.to_string());
        Ok(())
    };

    emit_file("official_model.bin", &result.official_model.to_bytes(), &mut outputs)?;
    emit_file("public_model.bin", &result.public_model.to_bytes(), &mut outputs)?;
    emit_file("official_vocab.txt", result.official.vocab.to_text().as_bytes(), &mut outputs)?;
    emit_file("public_vocab.txt", result.public.vocab.to_text().as_bytes(), &mut outputs)?;
    emit_file("extracted_seeds.txt", result.extracted_seeds.to_text().as_bytes(), &mut outputs)?;
    let official_label_csv = corex::labels_to_csv(
        &result.official.matrix.doc_ids,
        &result.official_labels,
    )?;
    emit_file("official_labels.csv", official_label_csv.as_bytes(), &mut outputs)?;
    let public_label_csv =
        corex::labels_to_csv(&result.public.matrix.doc_ids, &result.public_labels)?;
    emit_file("public_labels.csv", public_label_csv.as_bytes(), &mut outputs)?;

    // Timelines and heatmap over the labeled corpora.
    let official_topics: Vec<usize> = result.official_labels.iter().map(|l| l.topic).collect();
    let public_topics: Vec<usize> = result.public_labels.iter().map(|l| l.topic).collect();
    let mut raw_series: Vec<TimelineSeries> = Vec::new();
    let mut normalized_series: Vec<TimelineSeries> = Vec::new();
    for topic in 0..cfg.n_topics {
        for (docs, topics, source) in [
            (&official_docs, &official_topics, Source::Official),
            (&public_docs, &public_topics, Source::Public),
        ] {
            raw_series.push(topic_timeline(docs, topics, topic, source, &cfg.window, false)?);
            normalized_series.push(topic_timeline(docs, topics, topic, source, &cfg.window, true)?);
        }
    }
    let heat = similarity_heatmap(
        &result.official.tokens,
        &official_topics,
        &result.public.tokens,
        &public_topics,
        cfg.n_topics,
        Weighting::TfIdf,
    )?;

    if emit.csv {
        emit_file("timelines.csv", timelines_to_csv(&raw_series).as_bytes(), &mut outputs)?;
        emit_file(
            "timelines_normalized.csv",
            timelines_to_csv(&normalized_series).as_bytes(),
            &mut outputs,
        )?;
        emit_file("heatmap.csv", similarity_to_csv(&heat).as_bytes(), &mut outputs)?;
    }
    if emit.svg {
        for topic in 0..cfg.n_topics {
            let pair: Vec<TimelineSeries> = raw_series
                .iter()
                .filter(|s| s.topic == topic)
                .cloned()
                .collect();
            let chart = svg::line_chart(
                &format!("Topic {topic}: weekly volume, official vs public"),
                &pair,
                &events,
            );
            emit_file(&format!("timeline_topic_{topic:02}.svg"), chart.as_bytes(), &mut outputs)?;
        }
        let heat_svg = svg::heatmap("Official vs public topic similarity", &heat);
        emit_file("heatmap.svg", heat_svg.as_bytes(), &mut outputs)?;
    }
    if emit.manifest {
        let mut manifest = pipeline::build_manifest(&cfg, &curated, &result);
        let hash_input = |role: &str, path: &Path, manifest: &mut pipeline::RunManifest| -> Result<()> {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            manifest
                .input_hashes
                .insert(role.to_string(), format!("{:016x}", fnv1a64(&bytes)));
            Ok(())
        };
        hash_input("official", &args.official, &mut manifest)?;
        hash_input("public", &args.public, &mut manifest)?;
        match &args.seeds {
            Some(path) => hash_input("seeds", path, &mut manifest)?,
            None => {
                manifest.input_hashes.insert(
                    "seeds".to_string(),
                    format!(
                        "builtin:{:016x}",
                        fnv1a64(SeedSet::default_curated().to_text().as_bytes())
                    ),
                );
            }
        }
        if let Some(path) = &args.config {
            hash_input("config", path, &mut manifest)?;
        }
        outputs.push("manifest.json".to_string());
        outputs.sort();
        manifest.outputs = outputs;
        write_out(&args.out_dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    }
    print_stdout(&format!(
        "run complete: {} official docs, {} public docs, {} topics, artifacts in {}\n",
        result.official.matrix.n_docs,
        result.public.matrix.n_docs,
        cfg.n_topics,
        args.out_dir.display()
    ))
}

fn cmd_label(args: LabelArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let model = CorexModel::load(&args.model)?;
    let vocab = Vocabulary::load(&args.vocab)?;
    let records = load_records(&args.input, format)?;
    let mut tokenizer = TokenizerConfig::default();
    if let Some(v) = args.min_token_len {
        tokenizer.min_token_len = v;
    }
    // Vocabulary words are the model's features; never stop-list them.
    let tokenizer = tokenizer.exempting(vocab.words.iter().map(String::as_str));
    let tokens: Vec<Vec<String>> = records.iter().map(|r| tokenize(&r.text, &tokenizer)).collect();
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let matrix = vectorize(&tokens, &ids, &vocab)?;
    let labels = corex::label(&model, &matrix)?;
    let csv = corex::labels_to_csv(&ids, &labels)?;
    write_out(&args.out, csv.as_bytes())?;
    print_stdout(&format!(
        "labeled {} documents -> {}\n",
        labels.len(),
        args.out.display()
    ))
}

/// Joins records with a labels file by doc id; every document must be
/// labeled.
fn join_labels(records: &[Microblog], labels_path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let labeled = corex::labels_from_csv(&text)?;
    let by_id: BTreeMap<&str, DocLabel> =
        labeled.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    records
        .iter()
        .map(|r| {
            by_id
                .get(r.id.as_str())
                .map(|l| l.topic)
                .ok_or_else(|| Error::config(format!("document {} has no label", r.id)))
        })
        .collect()
}

fn cmd_timeline(args: TimelineArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let source = Source::from_name(&args.source)
        .ok_or_else(|| Error::config(format!("unknown source {:?} (official or public)", args.source)))?;
    let window = load_window(args.window_start, args.window_end, DateWindow::study_default())?;
    let events = events_in_window(&load_events(args.events.as_ref())?, &window);
    let records = load_records(&args.docs, format)?;
    let labels = join_labels(&records, &args.labels)?;
    ensure_dir(&args.out_dir)?;
    let series = topic_timeline(&records, &labels, args.topic, source, &window, args.normalized)?;
    let base = format!("timeline_topic_{:02}_{}", args.topic, source.as_str());
    write_out(
        &args.out_dir.join(format!("{base}.csv")),
        timelines_to_csv(std::slice::from_ref(&series)).as_bytes(),
    )?;
    let chart = svg::line_chart(
        &format!("Topic {} weekly volume ({})", args.topic, source.as_str()),
        std::slice::from_ref(&series),
        &events,
    );
    write_out(&args.out_dir.join(format!("{base}.svg")), chart.as_bytes())?;
    print_stdout(&format!("timeline written to {}\n", args.out_dir.join(base).display()))
}

fn cmd_similarity(args: SimilarityArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let weighting = match args.weighting.as_str() {
        "tfidf" => Weighting::TfIdf,
        "tf" => Weighting::TermFrequency,
        other => return Err(Error::config(format!("unknown weighting {other:?} (tfidf or tf)"))),
    };
    let official = load_records(&args.official_docs, format)?;
    let public = load_records(&args.public_docs, format)?;
    let official_labels = join_labels(&official, &args.official_labels)?;
    let public_labels = join_labels(&public, &args.public_labels)?;
    let tokenizer = TokenizerConfig::default();
    let official_tokens: Vec<Vec<String>> =
        official.iter().map(|r| tokenize(&r.text, &tokenizer)).collect();
    let public_tokens: Vec<Vec<String>> =
        public.iter().map(|r| tokenize(&r.text, &tokenizer)).collect();
    ensure_dir(&args.out_dir)?;
    let heat = similarity_heatmap(
        &official_tokens,
        &official_labels,
        &public_tokens,
        &public_labels,
        args.topics,
        weighting,
    )?;
    write_out(&args.out_dir.join("heatmap.csv"), similarity_to_csv(&heat).as_bytes())?;
    let chart = svg::heatmap("Official vs public topic similarity", &heat);
    write_out(&args.out_dir.join("heatmap.svg"), chart.as_bytes())?;
    print_stdout(&format!(
        "heatmap written: mean diagonal {:.4}, mean off-diagonal {:.4}\n",
        heat.mean_diagonal(),
        heat.mean_off_diagonal()
    ))
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    use std::fmt::Write;
    let text = fs::read_to_string(&args.manifest).map_err(|e| Error::io(&args.manifest, e))?;
    let manifest = pipeline::RunManifest::from_json(&text)?;
    let mut out = String::new();
    let c = &manifest.config;
    let _ = writeln!(out, "run configuration");
    let _ = writeln!(out, "  topics {}  iterations {}  top-k {}", c.n_topics, c.n_iter, c.top_k);
    let _ = writeln!(
        out,
        "  seed mode {}  rng seed {}  anchor strength {}",
        c.seed_mode, c.rng_seed, c.anchor_strength
    );
    let _ = writeln!(out, "  window {} .. {}", c.window_start, c.window_end);
    let _ = writeln!(out, "  tracked accounts: {}", c.officials.join(", "));
    let _ = writeln!(
        out,
        "corpora: {} official docs, {} public docs",
        manifest.official_docs, manifest.public_docs
    );
    let _ = writeln!(
        out,
        "tier one: {} iterations, final TC {:.4}",
        manifest.official_tc.iterations, manifest.official_tc.final_tc
    );
    let _ = writeln!(
        out,
        "tier two: {} iterations, final TC {:.4}",
        manifest.public_tc.iterations, manifest.public_tc.final_tc
    );
    let _ = writeln!(out, "extracted keywords per topic:");
    for (g, group) in manifest.extracted_seeds.iter().enumerate() {
        let _ = writeln!(out, "  {g:2}: {}", group.join(", "));
    }
    if !manifest.warnings.is_empty() {
        let _ = writeln!(out, "warnings:");
        for w in &manifest.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    if !manifest.input_hashes.is_empty() {
        let _ = writeln!(out, "input hashes:");
        for (role, hash) in &manifest.input_hashes {
            let _ = writeln!(out, "  {role}: {hash}");
        }
    }
    if !manifest.outputs.is_empty() {
        let _ = writeln!(out, "outputs: {}", manifest.outputs.join(", "));
    }
    print_stdout(&out)
}
