//! Stage bodies, manifest gating and downstream invalidation.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use cherry_annotate::{Roster, Service, VoteLog};
use cherry_core::cluster::{cluster_all_statements, cluster_articles, curate_events};
use cherry_core::dataset::{
    aggregate_annotations, apply_config, cast_all, class_distribution, export_rows, filter_examples, label_counts,
    split_by_events, AnnotationExample, ClassificationConfig, ExportRow, Side, Vote,
};
use cherry_core::detect::{band_summary, correlate, detect_all, evaluate, outlet_scores, Correlation, DetectRun, MetricReport, OutletScore};
use cherry_core::ingest::{fetch_articles, filter_news_only, FetchSpec, IngestError, SourceRegistry};
use cherry_core::model::{load_corpus, save_corpus_with_stages, Corpus, Manifest, Rater};
use cherry_core::report::{bias_band_table, class_distribution_table, configuration_table, correlation_table, sweep_table, SweepCell};
use cherry_core::scoring::{context_article, trim_words, ImportanceScorer};
use cherry_core::textproc::segment_statements;
use cherry_core::CorpusError;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cli::{Cli, Command, SplitArg};
use crate::components;
use crate::config::{RunConfig, ScorerConfig};
use crate::error::CliError;
use crate::io::{read_json, read_jsonl, write_bytes, write_json, write_jsonl};
use crate::lock::CorpusLock;
use crate::report::StageReport;
use crate::stage::{Stage, CORRELATE_FILE, DETECT_FILE, EVALUATE_FILE, EXAMPLES_FILE, REPORTS_DIR, SPLIT_FILE};

/// Loads the configuration named on the command line and runs the command.
pub fn run(cli: &Cli) -> Result<StageReport, CliError> {
    let mut cfg = RunConfig::load(&cli.config).map_err(CliError::invalid)?;
    apply_overrides(&mut cfg, &cli.command);
    run_with(&cfg, &cli.command)
}

fn apply_overrides(cfg: &mut RunConfig, command: &Command) {
    match command {
        Command::BuildDataset { votes, classes } => {
            if let Some(v) = votes {
                cfg.dataset.votes = Some(v.clone());
            }
            if let Some(c) = classes {
                cfg.dataset.classes = *c;
            }
        }
        Command::Evaluate { classes: Some(c), .. } => cfg.dataset.classes = *c,
        Command::Correlate { ratings: Some(r) } => cfg.correlate.ratings = Some(r.clone()),
        Command::Sweep { lengths: Some(l) } => cfg.sweep.lengths = l.clone(),
        Command::ServeAnnotator { bind: Some(b) } => cfg.annotate.bind = b.clone(),
        _ => {}
    }
}

pub fn run_with(cfg: &RunConfig, command: &Command) -> Result<StageReport, CliError> {
    let stage = command.stage();
    let violations = cfg.validate_for(stage);
    if !violations.is_empty() {
        return Err(CliError::Validation(violations));
    }
    let dir = cfg.corpus_dir.as_path();
    let explicit_dataset = match command {
        Command::Evaluate { dataset: Some(d), .. } => Some(d.as_path()),
        _ => None,
    };
    match explicit_dataset {
        Some(d) if !d.is_file() => {
            return Err(CliError::Prerequisite(format!("evaluate needs the dataset {}, which does not exist", d.display())))
        }
        Some(_) => {}
        None => gate(dir, stage)?,
    }
    if stage == Stage::Stats {
        let started = Instant::now();
        let mut report = stats(cfg)?;
        report.duration_ms = started.elapsed().as_millis() as u64;
        return Ok(report);
    }
    let _lock = CorpusLock::acquire(dir)?;
    let started = Instant::now();
    let mut report = match command {
        Command::Ingest => ingest(cfg)?,
        Command::Segment => segment(cfg)?,
        Command::ClusterEvents => cluster_events(cfg)?,
        Command::ClusterStatements => cluster_statement_stage(cfg)?,
        Command::BuildDataset { .. } => build_dataset(cfg)?,
        Command::Detect => detect(cfg)?,
        Command::Evaluate { dataset, predictions, split, .. } => {
            let path = dataset.clone().unwrap_or_else(|| cfg.dataset_path());
            evaluate_stage(cfg, &path, predictions.as_deref(), *split)?
        }
        Command::Correlate { .. } => correlate_stage(cfg)?,
        Command::Sweep { .. } => sweep(cfg)?,
        Command::ServeAnnotator { .. } => serve_annotator(cfg)?,
        Command::Stats => unreachable!("handled above"),
    };
    report.duration_ms = started.elapsed().as_millis() as u64;
    if stage.records() && manifest(dir).is_some() {
        record(dir, stage)?;
    }
    report.save(dir)?;
    Ok(report)
}

fn manifest(dir: &Path) -> Option<Manifest> {
    Manifest::read(dir).ok()
}

/// Fails with the artifact of the earliest stage that has not run.
pub fn gate(dir: &Path, stage: Stage) -> Result<(), CliError> {
    let manifest = manifest(dir);
    for prior in stage.ancestors() {
        let recorded = manifest.as_ref().is_some_and(|m| m.has_stage(prior.name()));
        let present = prior.side_artifacts().iter().all(|f| dir.join(f).is_file());
        if !recorded || !present {
            return Err(CliError::Prerequisite(format!(
                "{stage} needs {} from `{prior}`, which has not run on {}; run `cherry {prior}` first",
                prior.primary_artifact(),
                dir.display()
            )));
        }
    }
    Ok(())
}

/// Stage list after `stage` reruns: everything it invalidates is dropped.
fn stages_after(dir: &Path, stage: Stage) -> Vec<String> {
    let dropped: HashSet<&str> = stage.downstream().iter().map(|s| s.name()).chain([stage.name()]).collect();
    let mut stages: Vec<String> = match (stage, manifest(dir)) {
        (Stage::Ingest, _) | (_, None) => Vec::new(),
        (_, Some(m)) => m.stages.into_iter().filter(|s| !dropped.contains(s.as_str())).collect(),
    };
    stages.push(stage.name().to_string());
    stages
}

/// Removes what downstream stages wrote and records `stage` in the manifest.
fn record(dir: &Path, stage: Stage) -> Result<(), CliError> {
    for d in stage.downstream() {
        for f in d.side_artifacts().iter().copied().chain([format!("{REPORTS_DIR}/{}.json", d.name()).as_str()]) {
            let p = dir.join(f);
            if p.exists() {
                std::fs::remove_file(&p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
            }
        }
    }
    if stage_writes_corpus(stage) {
        // The corpus save already wrote the stage list.
        return Ok(());
    }
    let stages = stages_after(dir, stage);
    let mut m = Manifest::read(dir).map_err(corpus_err)?;
    m.stages = stages;
    m.write(dir).map_err(corpus_err)
}

fn stage_writes_corpus(stage: Stage) -> bool {
    matches!(stage, Stage::Ingest | Stage::Segment | Stage::ClusterEvents | Stage::ClusterStatements)
}

fn corpus_err(e: CorpusError) -> CliError {
    CliError::runtime(e)
}

fn load(dir: &Path) -> Result<Corpus, CliError> {
    load_corpus(dir).map_err(corpus_err)
}

fn save(corpus: &Corpus, dir: &Path, stage: Stage, report: &mut StageReport) -> Result<(), CliError> {
    let stages = stages_after(dir, stage);
    save_corpus_with_stages(corpus, dir, &stages).map_err(corpus_err)?;
    report.artifact(&dir.join(stage.primary_artifact()));
    Ok(())
}

fn ingest(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let registry_path = cfg.registry.as_ref().expect("validated");
    let spec: &FetchSpec = cfg.fetch.as_ref().expect("validated");
    let registry = SourceRegistry::load(registry_path).map_err(ingest_err)?;
    let outcome = fetch_articles(&registry, spec).map_err(ingest_err)?;
    let fetched = outcome.articles.len();
    let articles = filter_news_only(outcome.articles);
    let mut report = StageReport::new("ingest", cfg);
    report
        .input("outlets", registry.outlets.len())
        .input("window", registry.window)
        .output("fetch", &outcome.report)
        .output("articles", articles.len())
        .output("not_news", fetched - articles.len())
        .params(spec);
    let corpus = Corpus {
        collection_window: Some(registry.window),
        outlets: registry.outlets,
        articles,
        ..Corpus::default()
    };
    save(&corpus, &cfg.corpus_dir, Stage::Ingest, &mut report)?;
    Ok(report)
}

fn ingest_err(e: IngestError) -> CliError {
    match e {
        IngestError::NoSources | IngestError::InvalidRegistry(_) | IngestError::InvalidSpec(_) => CliError::invalid(e.to_string()),
        other => CliError::runtime(other),
    }
}

fn segment(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let mut corpus = load(&cfg.corpus_dir)?;
    corpus.statements = corpus.articles.iter().flat_map(segment_statements).collect();
    corpus.events.clear();
    corpus.clusters.clear();
    let mut report = StageReport::new("segment", cfg);
    report.input("articles", corpus.articles.len()).output("statements", corpus.statements.len());
    save(&corpus, &cfg.corpus_dir, Stage::Segment, &mut report)?;
    Ok(report)
}

fn cluster_events(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let mut corpus = load(&cfg.corpus_dir)?;
    let provider = components::embedding(&cfg.embedding)?;
    let mut events = cluster_articles(&corpus.articles, provider.as_ref(), &cfg.cluster.articles).map_err(CliError::runtime)?;
    let found = events.len();
    if let Some(allow) = &cfg.cluster.allow_events {
        let allow: HashSet<String> = allow.iter().cloned().collect();
        events = curate_events(events, &allow).map_err(|e| CliError::invalid(format!("cluster.allow_events: {e}")))?;
    }
    let grouped: usize = events.iter().map(|e| e.article_ids.len()).sum();
    let mut report = StageReport::new("cluster-events", cfg);
    report
        .input("articles", corpus.articles.len())
        .output("events_found", found)
        .output("events", events.len())
        .output("articles_in_events", grouped)
        .output("noise_articles", corpus.articles.len() - grouped)
        .params(json!({"dbscan": cfg.cluster.articles, "embedding": cfg.embedding, "allow_events": cfg.cluster.allow_events}));
    corpus.events = events;
    corpus.clusters.clear();
    save(&corpus, &cfg.corpus_dir, Stage::ClusterEvents, &mut report)?;
    Ok(report)
}

fn cluster_statement_stage(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let mut corpus = load(&cfg.corpus_dir)?;
    let provider = components::embedding(&cfg.embedding)?;
    corpus.clusters = cluster_all_statements(&corpus, provider.as_ref(), &cfg.cluster.statements).map_err(CliError::runtime)?;
    let noise = corpus.clusters.iter().filter(|c| c.singleton_noise).count();
    let mut report = StageReport::new("cluster-statements", cfg);
    report
        .input("events", corpus.events.len())
        .input("statements", corpus.statements.len())
        .output("clusters", corpus.clusters.len())
        .output("singleton_noise", noise)
        .params(json!({"dbscan": cfg.cluster.statements, "embedding": cfg.embedding}));
    save(&corpus, &cfg.corpus_dir, Stage::ClusterStatements, &mut report)?;
    Ok(report)
}

fn build_dataset(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let dir = &cfg.corpus_dir;
    let corpus = load(dir)?;
    let votes_path = cfg.dataset.votes.as_ref().expect("validated");
    let votes: Vec<Vote> = read_jsonl(votes_path)?;
    let config = ClassificationConfig::get(cfg.dataset.classes).map_err(|e| CliError::invalid(e.to_string()))?;

    let contexts: BTreeMap<String, String> = corpus
        .events
        .iter()
        .filter_map(|e| context_article(e, &corpus).map(|a| (e.id.clone(), a.id.clone())))
        .collect();
    let event_of: BTreeMap<&str, &str> = corpus.clusters.iter().map(|c| (c.id.as_str(), c.event_id.as_str())).collect();
    let (usable, no_context): (Vec<Vote>, Vec<Vote>) = votes
        .iter()
        .cloned()
        .partition(|v| event_of.get(v.cluster_id.as_str()).is_none_or(|e| contexts.contains_key(*e)));

    let aggregated = aggregate_annotations(&usable, &corpus.clusters, &contexts).map_err(CliError::runtime)?;
    let voted: HashSet<&str> = usable.iter().map(|v| v.cluster_id.as_str()).collect();
    let kept = filter_examples(aggregated.clone(), cfg.dataset.min_annotators, cfg.dataset.min_agreement);
    let examples = cast_all(&kept, &corpus.clusters).map_err(CliError::runtime)?;
    let classified = apply_config(&examples, &config);
    let split = split_by_events(classified.iter().map(|c| c.example.event_id.as_str()), cfg.dataset.ratio, cfg.seeds.split)
        .map_err(CliError::runtime)?;
    let rows = export_rows(&classified, &split, &corpus).map_err(CliError::runtime)?;

    write_jsonl(&dir.join(EXAMPLES_FILE), &examples)?;
    write_jsonl(&cfg.dataset_path(), &rows)?;
    write_json(&dir.join(SPLIT_FILE), &split)?;

    let mut report = StageReport::new("build-dataset", cfg);
    report
        .input("votes", votes.len())
        .input("clusters", corpus.clusters.len())
        .output("votes_without_context", no_context.len())
        .output("clusters_voted", voted.len())
        .output("majority_ties", voted.len() - aggregated.len())
        .output("clusters_kept", kept.len())
        .output("examples", examples.len())
        .output("rows", rows.len())
        .output("excluded_by_config", examples.len() - rows.len())
        .output("train_rows", split.train_examples)
        .output("test_rows", split.test_examples)
        .output("train_events", split.train_events.len())
        .output("test_events", split.test_events.len())
        .params(json!({"config": config, "dataset": cfg.dataset, "seed": cfg.seeds.split}))
        .artifact(&dir.join(EXAMPLES_FILE))
        .artifact(&cfg.dataset_path())
        .artifact(&dir.join(SPLIT_FILE));
    if !no_context.is_empty() {
        tracing::warn!(count = no_context.len(), "votes on events without a Center article were dropped");
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectOutput {
    pub scorer: String,
    pub run: DetectRun,
    pub outlet_scores: Vec<OutletScore>,
    pub bands: Vec<cherry_core::detect::BandSummary>,
}

fn detect(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let dir = &cfg.corpus_dir;
    let corpus = load(dir)?;
    let scorer = components::scorer(&cfg.scorer, cfg)?;
    let provider = components::embedding(&cfg.embedding)?;
    let summarizer = components::summarizer(cfg)?;
    let run = detect_all(&corpus, scorer.as_ref(), &cfg.context, summarizer.as_deref(), provider.as_ref(), &cfg.detect)
        .map_err(CliError::runtime)?;
    let scores = outlet_scores(&run.reports);
    let bands = band_summary(&scores, &corpus);
    let out = DetectOutput { scorer: cfg.scorer.label(), run, outlet_scores: scores, bands };
    write_json(&dir.join(DETECT_FILE), &out)?;

    let mut report = StageReport::new("detect", cfg);
    report
        .input("events", corpus.events.len())
        .input("statements", corpus.statements.len())
        .output("reports", out.run.reports.len())
        .output("skipped", &out.run.skipped)
        .output("important", out.run.reports.iter().map(|r| r.important.len()).sum::<usize>())
        .output("cherry_picked", out.run.reports.iter().map(|r| r.total_cherry_picked()).sum::<usize>())
        .output("score_failures", out.run.reports.iter().map(|r| r.failures.len()).sum::<usize>())
        .output("outlets", out.outlet_scores.len())
        .params(json!({"scorer": cfg.scorer, "context": cfg.context, "detect": cfg.detect, "embedding": cfg.embedding}))
        .artifact(&dir.join(DETECT_FILE));
    report.table = Some(bias_band_table(&out.bands).to_markdown());
    Ok(report)
}

fn select_rows(rows: Vec<ExportRow>, split: SplitArg) -> Vec<ExportRow> {
    rows.into_iter()
        .filter(|r| match split {
            SplitArg::All => true,
            SplitArg::Train => r.split == Side::Train,
            SplitArg::Test => r.split == Side::Test,
        })
        .collect()
}

fn class_ids(config: u8) -> Result<Vec<u8>, CliError> {
    let c = ClassificationConfig::get(config).map_err(|e| CliError::invalid(e.to_string()))?;
    Ok((1..=c.classes.len() as u8).collect())
}

/// Binary scorers answer class 1 (important) or class 2.
pub fn predict(scorer: &dyn ImportanceScorer, rows: &[ExportRow], context_words: usize) -> Result<Vec<u8>, CliError> {
    let pairs: Vec<(&str, &str)> =
        rows.iter().map(|r| (r.statement_text.as_str(), trim_words(&r.context_text, context_words))).collect();
    let scores = scorer.score_batch(&pairs).map_err(CliError::runtime)?;
    Ok(scores.iter().map(|s| if s.important { 1 } else { 2 }).collect())
}

fn read_predictions(path: &Path) -> Result<Vec<u8>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<u8>().map_err(|e| CliError::Runtime(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub dataset: PathBuf,
    pub split: String,
    pub rows: usize,
    pub predictor: String,
    pub context_words: usize,
    pub config: u8,
    pub classes: Vec<u8>,
    pub report: MetricReport,
}

fn evaluate_stage(cfg: &RunConfig, dataset: &Path, predictions: Option<&Path>, split: SplitArg) -> Result<StageReport, CliError> {
    let rows = select_rows(read_jsonl(dataset)?, split);
    let gold: Vec<u8> = rows.iter().map(|r| r.class).collect();
    let classes = class_ids(cfg.dataset.classes)?;
    let (predicted, predictor) = match predictions {
        Some(p) => (read_predictions(p)?, format!("file {}", p.display())),
        None => {
            let scorer = components::scorer(&cfg.scorer, cfg)?;
            (predict(scorer.as_ref(), &rows, cfg.context.max_words)?, cfg.scorer.label())
        }
    };
    if predicted.len() != gold.len() {
        return Err(CliError::Runtime(format!("{} predictions for {} rows", predicted.len(), gold.len())));
    }
    let metrics = evaluate(&predicted, &gold, &classes).map_err(CliError::runtime)?;
    let split_name = format!("{split:?}").to_lowercase();
    let out = EvaluateOutput {
        dataset: dataset.to_path_buf(),
        split: split_name.clone(),
        rows: rows.len(),
        predictor,
        context_words: cfg.context.max_words,
        config: cfg.dataset.classes,
        classes,
        report: metrics,
    };
    let path = cfg.corpus_dir.join(EVALUATE_FILE);
    write_json(&path, &out)?;
    let mut report = StageReport::new("evaluate", cfg);
    report
        .input("dataset", dataset)
        .input("rows", out.rows)
        .output("accuracy", out.report.accuracy)
        .output("macro_f1", out.report.macro_f1)
        .params(json!({"split": split_name, "predictor": out.predictor, "config": out.config, "context_words": out.context_words}))
        .artifact(&path);
    report.table = Some(configuration_table(&[(out.config, out.report.clone())]).to_markdown());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub source: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<Correlation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn correlate_stage(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let dir = &cfg.corpus_dir;
    let detected: DetectOutput = read_json(&dir.join(DETECT_FILE))?;
    let corpus = load(dir)?;
    let mut sources: Vec<(String, BTreeMap<String, f64>)> = Vec::new();
    for name in &cfg.correlate.raters {
        let rater: Rater = name.parse().map_err(CliError::invalid)?;
        let ratings = corpus
            .outlets
            .iter()
            .filter_map(|o| o.bias_ratings.get(&rater).map(|r| (o.id.clone(), f64::from(*r))))
            .collect();
        sources.push((rater.to_string(), ratings));
    }
    if let Some(p) = &cfg.correlate.ratings {
        let extra: BTreeMap<String, BTreeMap<String, f64>> = read_json(p)?;
        sources.extend(extra);
    }
    let rows: Vec<CorrelationRow> = sources
        .iter()
        .map(|(source, ratings)| match correlate(&detected.outlet_scores, ratings) {
            Ok(c) => CorrelationRow { source: source.clone(), correlation: Some(c), error: None },
            Err(e) => CorrelationRow { source: source.clone(), correlation: None, error: Some(e.to_string()) },
        })
        .collect();
    let path = dir.join(CORRELATE_FILE);
    write_json(&path, &rows)?;
    let ok: Vec<(String, Correlation)> = rows.iter().filter_map(|r| r.correlation.map(|c| (r.source.clone(), c))).collect();
    let mut report = StageReport::new("correlate", cfg);
    report
        .input("outlets", detected.outlet_scores.len())
        .output("sources", rows.len())
        .output("failed", rows.iter().filter(|r| r.error.is_some()).count())
        .output("rows", &rows)
        .params(&cfg.correlate)
        .artifact(&path);
    report.table = Some(correlation_table(&ok).to_markdown());
    Ok(report)
}

/// Every (scorer, length) cell; a failing cell records its error.
pub fn sweep_cells(cfg: &RunConfig, rows: &[ExportRow]) -> Vec<SweepCell> {
    let scorers: Vec<ScorerConfig> =
        if cfg.sweep.scorers.is_empty() { vec![cfg.scorer.clone()] } else { cfg.sweep.scorers.clone() };
    let gold: Vec<u8> = rows.iter().map(|r| r.class).collect();
    let classes = class_ids(cfg.dataset.classes).unwrap_or_else(|_| vec![1, 2]);
    let mut cells = Vec::new();
    for sc in &scorers {
        let label = sc.label();
        let built = components::scorer(sc, cfg);
        for &length in &cfg.sweep.lengths {
            let result = built
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|s| predict(s.as_ref(), rows, length).map_err(|e| e.to_string()))
                .and_then(|p| evaluate(&p, &gold, &classes).map_err(|e| e.to_string()));
            cells.push(match result {
                Ok(m) => SweepCell { scorer: label.clone(), length, accuracy: Some(m.accuracy), macro_f1: Some(m.macro_f1), error: None },
                Err(e) => {
                    tracing::warn!(scorer = %label, length, error = %e, "sweep cell failed");
                    SweepCell { scorer: label.clone(), length, accuracy: None, macro_f1: None, error: Some(e) }
                }
            });
        }
    }
    cells
}

fn sweep(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let dir = &cfg.corpus_dir;
    let rows = select_rows(read_jsonl(&cfg.dataset_path())?, SplitArg::Test);
    let cells = sweep_cells(cfg, &rows);
    let table = sweep_table(&cells);
    write_bytes(&dir.join("sweep.tsv"), table.to_tsv().as_bytes())?;
    write_bytes(&dir.join("sweep.md"), table.to_markdown().as_bytes())?;
    write_json(&dir.join("sweep.json"), &cells)?;
    let mut report = StageReport::new("sweep", cfg);
    report
        .input("rows", rows.len())
        .output("cells", cells.len())
        .output("failed", cells.iter().filter(|c| c.error.is_some()).count())
        .params(&cfg.sweep);
    for f in Stage::Sweep.side_artifacts() {
        report.artifact(&dir.join(f));
    }
    report.table = Some(table.to_markdown());
    Ok(report)
}

fn stats(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let examples: Vec<AnnotationExample> = read_jsonl(&cfg.corpus_dir.join(EXAMPLES_FILE))?;
    let counts = label_counts(&examples);
    let dists: Vec<_> = ClassificationConfig::all().iter().map(|c| class_distribution(&counts, c)).collect();
    let mut report = StageReport::new("stats", cfg);
    report
        .input("examples", examples.len())
        .output("label_counts", counts.iter().map(|(l, n)| (l.code().to_string(), *n)).collect::<BTreeMap<_, _>>())
        .output("distributions", &dists);
    report.table = Some(class_distribution_table(&dists).to_markdown());
    Ok(report)
}

fn serve_annotator(cfg: &RunConfig) -> Result<StageReport, CliError> {
    let corpus = load(&cfg.corpus_dir)?;
    let roster = Roster::load(cfg.annotate.roster.as_ref().expect("validated")).map_err(|e| CliError::invalid(e.to_string()))?;
    let log_path = cfg.votes_log_path();
    let log = VoteLog::open(&log_path).map_err(CliError::runtime)?;
    let service = Arc::new(Service::new(&corpus, roster, log));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(CliError::runtime)?;
    let bind = cfg.annotate.bind.clone();
    let votes = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&bind).await.map_err(|e| CliError::Runtime(format!("{bind}: {e}")))?;
        let addr = listener.local_addr().map_err(CliError::runtime)?;
        println!("listening on http://{addr}");
        use std::io::Write as _;
        let _ = std::io::stdout().flush();
        tokio::select! {
            r = cherry_annotate::serve(listener, service.clone()) => r.map_err(CliError::runtime)?,
            _ = tokio::signal::ctrl_c() => tracing::info!("interrupted, shutting down"),
        }
        Ok::<_, CliError>(service.log().snapshot().len())
    })?;
    let mut report = StageReport::new("serve-annotator", cfg);
    report.input("events", corpus.events.len()).output("votes_logged", votes).artifact(&log_path).params(&cfg.annotate);
    Ok(report)
}
