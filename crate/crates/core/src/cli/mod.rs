//! `simulate`, `analyze` and `report` commands.
//!
//! Exit codes: 0 success, 2 partial failure (some discussions or metric
//! rounds missing), 1 configuration or input error.

mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;
use sha2::{Digest, Sha256};

pub use config::{
    BackendConfig, CacheConfig, DatasetSpec, EmbeddingConfig, GridSpec, InlineComment, PlanSource, RunConfigFile,
};

use crate::engine::run_grid;
use crate::geometry::{
    influence_matrices, opinion_confidence_grid, opinion_confidence_points, per_model_id_series, pooled_id_series,
    CodeEmbeddings, ConfidenceScaling, DEFAULT_DISCARD_FRACTION, POOLED_LABEL,
};
use crate::lexmetrics::{
    confidence_series, consistency_series, load_lexicon, stability_series, CorpusScope, Normalization,
};
use crate::report::{
    export, final_round_rouge_table, grid_table, id_summary, influence_table, rouge_table, series_table,
    group_by_slice, Manifest, MetricSeries, RougeLSummaryCell, SliceKey,
};
use crate::store::{load_transcripts, save_transcript, TranscriptFilter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Every metric `analyze` knows, in artifact order.
pub const METRICS: [&str; 7] = ["rouge", "stability", "consistency", "confidence", "influence", "id", "opinion"];

pub const ROUGE_ARTIFACT: &str = "rouge_final";
pub const STABILITY_ARTIFACT: &str = "stability";
pub const CONSISTENCY_ARTIFACT: &str = "self_consistency";
pub const CONFIDENCE_ARTIFACT: &str = "confidence";
pub const INFLUENCE_ARTIFACT: &str = "influence";
pub const ID_ARTIFACT: &str = "intrinsic_dimension";
pub const OPINION_ARTIFACT: &str = "opinion_confidence_grid";

#[derive(Debug, Parser)]
#[command(name = "coconv", version, about = "Simulate and analyze multi-agent coding discussions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a discussion grid and write transcripts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute metrics over saved transcripts.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of rouge,stability,consistency,confidence,influence,id,opinion, or "all".
        #[arg(long, default_value = "all")]
        metrics: String,
        #[arg(long)]
        include_incomplete: bool,
        /// Embedding provider config: a bare embedding block or a run config with one.
        /// Defaults to 384-d scripted hash embeddings.
        #[arg(long)]
        embedding: Option<PathBuf>,
        /// Lexicon file replacing the built-in certainty and hedging phrases.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = crate::geometry::opinion::DEFAULT_BINS)]
        bins: usize,
        /// Min-max normalize confidence within each round instead of globally.
        #[arg(long)]
        per_round_confidence: bool,
        /// Fit TF-IDF on every agent's codes in a slice rather than one agent's.
        #[arg(long)]
        slice_corpus: bool,
    },
    /// Print summary tables from an analysis directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let exit = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return exit;
        }
    };
    match cli.command {
        Command::Simulate { config } => cmd_simulate(&config, out, err),
        Command::Analyze {
            input,
            out: out_dir,
            metrics,
            include_incomplete,
            embedding,
            lexicon,
            bins,
            per_round_confidence,
            slice_corpus,
        } => {
            let options = AnalyzeOptions {
                metrics: match parse_metrics(&metrics) {
                    Ok(m) => m,
                    Err(e) => {
                        let _ = writeln!(err, "error: {e}");
                        return EXIT_ERROR;
                    }
                },
                include_incomplete,
                embedding,
                lexicon,
                bins,
                confidence_scaling: if per_round_confidence {
                    ConfidenceScaling::PerRound
                } else {
                    ConfidenceScaling::Global
                },
                corpus_scope: if slice_corpus { CorpusScope::Slice } else { CorpusScope::Agent },
            };
            cmd_analyze(&input, &out_dir, &options, out, err)
        }
        Command::Report { input } => cmd_report(&input, out, err),
    }
}

pub fn parse_metrics(list: &str) -> Result<Vec<String>, String> {
    let mut chosen = Vec::new();
    for m in list.split(',').map(str::trim).filter(|m| !m.is_empty()) {
        if m == "all" {
            return Ok(METRICS.iter().map(|m| m.to_string()).collect());
        }
        if !METRICS.contains(&m) {
            return Err(format!("unknown metric {m:?}; expected one of {}", METRICS.join(",")));
        }
        if !chosen.iter().any(|c| c == m) {
            chosen.push(m.to_owned());
        }
    }
    if chosen.is_empty() {
        return Err("no metrics selected".into());
    }
    Ok(chosen)
}

/// Validates the whole config, runs the grid and saves every transcript.
/// Nothing is written when validation fails.
pub fn cmd_simulate(config_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prepared = (|| {
        let file = RunConfigFile::load(config_path)?;
        let (items, load_report) = file.load_items()?;
        let configs = file.simulation_configs(&items)?;
        let backend = file.chat_backend()?;
        if let Some(e) = &file.embedding {
            e.build()?;
        }
        Ok::<_, String>((file, load_report, configs, backend))
    })();
    let (file, load_report, configs, backend) = match prepared {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    if let Some(report) = load_report {
        let _ = writeln!(err, "dataset: {}", serde_json::to_string(&report).expect("load report serializes"));
    }
    let outcome = match run_grid(&configs, backend.as_ref(), file.workers) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    for t in &outcome.transcripts {
        if let Err(e) = save_transcript(t, &file.output_dir) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    }
    for f in &outcome.failures {
        let _ = writeln!(err, "failed: {} ({}): {}", f.discussion_id, f.error_code, f.message);
    }
    let _ = writeln!(out, "{}", serde_json::to_string(&outcome.report).expect("run report serializes"));
    if outcome.report.failed == 0 {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub metrics: Vec<String>,
    pub include_incomplete: bool,
    pub embedding: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub bins: usize,
    pub confidence_scaling: ConfidenceScaling,
    pub corpus_scope: CorpusScope,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            metrics: METRICS.iter().map(|m| m.to_string()).collect(),
            include_incomplete: false,
            embedding: None,
            lexicon: None,
            bins: crate::geometry::opinion::DEFAULT_BINS,
            confidence_scaling: ConfidenceScaling::Global,
            corpus_scope: CorpusScope::Agent,
        }
    }
}

fn gap_notes(series: &[MetricSeries], notes: &mut Vec<String>) {
    for s in series {
        for g in &s.gaps {
            let label = if s.label.is_empty() { String::new() } else { format!(" {}", s.label) };
            notes.push(format!(
                "{} k={} R={}{} {}: {}",
                s.metric_name,
                s.slice.k,
                s.slice.rounds,
                label,
                s.slice.round_label(g.round),
                g.reason
            ));
        }
    }
}

pub fn cmd_analyze(
    input: &Path,
    out_dir: &Path,
    options: &AnalyzeOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if options.bins < 2 {
        let _ = writeln!(err, "error: bins must be at least 2");
        return EXIT_ERROR;
    }
    let filter = TranscriptFilter {
        include_incomplete: options.include_incomplete,
        ..TranscriptFilter::default()
    };
    let loaded = load_transcripts(input, &filter);
    let mut notes: Vec<String> = loaded
        .errors
        .iter()
        .map(|e| {
            let rel = e.path.strip_prefix(input).unwrap_or(&e.path);
            format!("skipped {}: {}", rel.display(), e.error)
        })
        .collect();
    let transcripts = loaded.transcripts;
    if transcripts.is_empty() {
        let _ = writeln!(err, "error: no transcripts under {}", input.display());
        return EXIT_ERROR;
    }
    let wants = |m: &str| options.metrics.iter().any(|x| x == m);

    let lexicon = if wants("confidence") || wants("opinion") {
        match load_lexicon(options.lexicon.as_deref()) {
            Ok(l) => Some(l),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_ERROR;
            }
        }
    } else {
        None
    };
    let embeddings = if wants("influence") || wants("id") || wants("opinion") {
        let built = options
            .embedding
            .as_deref()
            .map(EmbeddingConfig::load)
            .unwrap_or_else(|| Ok(EmbeddingConfig::default()))
            .and_then(|c| c.build())
            .and_then(|e| CodeEmbeddings::build(&transcripts, e.as_ref()).map_err(|e| e.to_string()));
        match built {
            Ok(e) => Some(e),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_ERROR;
            }
        }
    } else {
        None
    };

    let mut tables = Vec::new();
    for metric in &options.metrics {
        match metric.as_str() {
            "rouge" => {
                let table = final_round_rouge_table(&transcripts);
                notes.extend(table.notes.iter().cloned());
                tables.push(rouge_table(ROUGE_ARTIFACT, &table.cells));
            }
            "stability" => {
                let s = stability_series(&transcripts);
                gap_notes(&s, &mut notes);
                tables.push(series_table(STABILITY_ARTIFACT, &s));
            }
            "consistency" => {
                let s = consistency_series(&transcripts, options.corpus_scope);
                gap_notes(&s, &mut notes);
                tables.push(series_table(CONSISTENCY_ARTIFACT, &s));
            }
            "confidence" => {
                let s = confidence_series(&transcripts, lexicon.as_ref().expect("lexicon loaded"), Normalization::Tokens);
                gap_notes(&s, &mut notes);
                tables.push(series_table(CONFIDENCE_ARTIFACT, &s));
            }
            "influence" => {
                let m = influence_matrices(&transcripts, embeddings.as_ref().expect("embeddings built"));
                for matrix in &m {
                    let undefined = matrix.values.iter().flatten().filter(|v| v.is_none()).count();
                    if undefined > 0 {
                        notes.push(format!(
                            "influence k={} R={} {}: {undefined} undefined entries",
                            matrix.slice.k,
                            matrix.slice.rounds,
                            matrix.slice.round_label(matrix.round)
                        ));
                    }
                }
                tables.push(influence_table(INFLUENCE_ARTIFACT, &m));
            }
            "id" => {
                let emb = embeddings.as_ref().expect("embeddings built");
                let mut s = pooled_id_series(&transcripts, emb, DEFAULT_DISCARD_FRACTION);
                s.extend(per_model_id_series(&transcripts, emb, DEFAULT_DISCARD_FRACTION));
                gap_notes(&s, &mut notes);
                tables.push(series_table(ID_ARTIFACT, &s));
            }
            "opinion" => {
                let emb = embeddings.as_ref().expect("embeddings built");
                let lex = lexicon.as_ref().expect("lexicon loaded");
                let mut grids = Vec::new();
                for (slice, group) in group_by_slice(&transcripts) {
                    match opinion_confidence_points(&group, emb, lex, options.confidence_scaling) {
                        Ok(points) => grids.push((slice, opinion_confidence_grid(&points, options.bins))),
                        Err(e) => notes.push(format!("opinion k={} R={}: {e}", slice.k, slice.rounds)),
                    }
                }
                tables.push(grid_table(OPINION_ARTIFACT, &grids));
            }
            other => unreachable!("metric {other} passed validation"),
        }
    }

    let manifest = match export(&tables, &notes, out_dir) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    for note in &manifest.notes {
        let _ = writeln!(err, "note: {note}");
    }
    let _ = writeln!(out, "{}", serde_json::to_string(&manifest.artifacts).expect("manifest serializes"));
    if notes.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    }
}

#[derive(Debug, Deserialize)]
struct SeriesRow {
    metric: String,
    k: usize,
    rounds: u32,
    label: String,
    round: u32,
    value: String,
    n_samples: usize,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// Pooled dimension series per slice, read back from the exported CSV.
pub fn read_pooled_id_series(path: &Path) -> Result<Vec<MetricSeries>, String> {
    let mut by_slice: BTreeMap<SliceKey, MetricSeries> = BTreeMap::new();
    for row in read_csv::<SeriesRow>(path)? {
        if row.metric != "twonn_id" || row.label != POOLED_LABEL {
            continue;
        }
        let slice = SliceKey::pooled(row.k, row.rounds);
        let series = by_slice
            .entry(slice)
            .or_insert_with(|| MetricSeries::new("twonn_id", slice, POOLED_LABEL));
        if row.value.is_empty() {
            series.gap(row.round, "missing");
        } else {
            let value: f64 = row.value.parse().map_err(|e| format!("{}: {e}", path.display()))?;
            series.push(row.round, value, row.n_samples.max(1));
        }
    }
    Ok(by_slice.into_values().collect())
}

fn print_rouge(cells: &[RougeLSummaryCell], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "Final-round ROUGE-L (mean over agent pairs / max over agent pairs, averaged over discussions)")?;
    writeln!(out, "{:>6} {:>3} {:>3} {:>10} {:>10} {:>6}", "prompt", "k", "R", "avg", "max", "n")?;
    for c in cells {
        writeln!(
            out,
            "{:>6} {:>3} {:>3} {:>10.4} {:>10.4} {:>6}",
            c.prompt_index, c.k, c.rounds, c.avg_final, c.max_final, c.n_discussions
        )?;
    }
    Ok(())
}

fn print_id(series: &[MetricSeries], out: &mut dyn Write) -> std::io::Result<Vec<String>> {
    let mut notes = Vec::new();
    writeln!(out, "Intrinsic dimension, pooled TwoNN")?;
    writeln!(
        out,
        "{:>3} {:>3} {:>10} {:>10} {:>10} {:>10} {:>6}",
        "k", "R", "initial", "final", "delta", "steepest", "drop"
    )?;
    for s in series {
        match id_summary(s) {
            Ok(row) => {
                writeln!(
                    out,
                    "{:>3} {:>3} {:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>6}",
                    row.k, row.rounds, row.initial_id, row.final_id, row.delta, row.steepest_drop, row.drop_label
                )?;
                notes.extend(row.notes.iter().map(|n| format!("id k={} R={}: {n}", row.k, row.rounds)));
            }
            Err(e) => {
                writeln!(out, "{:>3} {:>3} {:>10}", s.slice.k, s.slice.rounds, "n/a")?;
                notes.push(format!("id k={} R={}: {e}", s.slice.k, s.slice.rounds));
            }
        }
    }
    Ok(notes)
}

/// Prints the ROUGE-L table, the dimension summary and an artifact list.
/// Fails when the manifest or a listed artifact is missing or altered.
pub fn cmd_report(input: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let manifest = match Manifest::load(input) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    for entry in &manifest.artifacts {
        let path = input.join(&entry.artifact);
        match std::fs::read(&path) {
            Ok(bytes) if hex::encode(Sha256::digest(&bytes)) == entry.sha256 => {}
            Ok(_) => {
                let _ = writeln!(err, "error: {} does not match its manifest hash", path.display());
                return EXIT_ERROR;
            }
            Err(e) => {
                let _ = writeln!(err, "error: {}: {e}", path.display());
                return EXIT_ERROR;
            }
        }
    }
    let rendered = (|| -> Result<(), String> {
        let io = |e: std::io::Error| e.to_string();
        let artifact = |name: &str| {
            let file = format!("{name}.csv");
            manifest.entry(&file).map(|_| input.join(file))
        };
        match artifact(ROUGE_ARTIFACT) {
            Some(path) => print_rouge(&read_csv(&path)?, out).map_err(io)?,
            None => writeln!(out, "Final-round ROUGE-L: absent").map_err(io)?,
        }
        writeln!(out).map_err(io)?;
        let mut notes = Vec::new();
        match artifact(ID_ARTIFACT) {
            Some(path) => notes.extend(print_id(&read_pooled_id_series(&path)?, out).map_err(io)?),
            None => writeln!(out, "Intrinsic dimension: absent").map_err(io)?,
        }
        writeln!(out).map_err(io)?;
        writeln!(out, "Artifacts").map_err(io)?;
        for e in &manifest.artifacts {
            writeln!(out, "{:<32} {:>8} rows  {}", e.artifact, e.rows, &e.sha256[..12]).map_err(io)?;
        }
        notes.extend(manifest.notes.iter().cloned());
        if !notes.is_empty() {
            writeln!(out).map_err(io)?;
            writeln!(out, "Notes").map_err(io)?;
            for n in &notes {
                writeln!(out, "- {n}").map_err(io)?;
            }
        }
        Ok(())
    })();
    match rendered {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
