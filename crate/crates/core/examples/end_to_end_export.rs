//! Simulate, save, reload, compute metrics and export CSVs with a manifest,
//! all through the library API.
//!
//! cargo run --example end_to_end_export -- /tmp/coconv-demo

use std::path::PathBuf;

use coding_convergence::backends::{AgentSpec, ScriptedAgentPlan, ScriptedBackend, ScriptedEmbedder, TurnKey};
use coding_convergence::engine::{run_grid, SimulationConfig};
use coding_convergence::geometry::{pooled_id_series, CodeEmbeddings, DEFAULT_DISCARD_FRACTION};
use coding_convergence::ingest::{CommentRecord, ItemSet};
use coding_convergence::lexmetrics::{stability_series, confidence_series, Lexicon, Normalization};
use coding_convergence::report::{export, final_round_rouge_table, id_summary, rouge_table, series_table};
use coding_convergence::store::{load_transcripts, save_transcript, TranscriptFilter};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("coconv-demo"));
    let items = ItemSet::new(
        (0..15).map(|i| CommentRecord::new(format!("c{i}"), format!("comment {i}"), None)).collect(),
        "inline",
    )?;
    let agents: Vec<AgentSpec> = ["a", "b", "c"].iter().map(|id| AgentSpec::scripted(*id, format!("m-{id}"))).collect();
    let backend = ScriptedBackend::new(agents.iter().map(|a| {
        ScriptedAgentPlan::new(a.agent_id.clone())
            .with_output(TurnKey::Initial, "Maybe {agent_id} sees {item_id} differently")
            .with_default("Clearly shared distrust in {item_id}")
    }));
    let configs = vec![
        SimulationConfig::new(agents[..2].to_vec(), 2, items.clone()),
        SimulationConfig::new(agents.clone(), 2, items),
    ];
    let outcome = run_grid(&configs, &backend, None)?;
    let transcripts_dir = root.join("transcripts");
    for t in &outcome.transcripts {
        save_transcript(t, &transcripts_dir)?;
    }

    let loaded = load_transcripts(&transcripts_dir, &TranscriptFilter::default());
    let transcripts = loaded.transcripts;
    println!("reloaded {} transcripts", transcripts.len());

    let rouge = final_round_rouge_table(&transcripts);
    let stability = stability_series(&transcripts);
    let confidence = confidence_series(&transcripts, &Lexicon::default(), Normalization::Tokens);
    let emb = CodeEmbeddings::build(&transcripts, &ScriptedEmbedder::new("hash", 32))?;
    let id = pooled_id_series(&transcripts, &emb, DEFAULT_DISCARD_FRACTION);
    for s in &id {
        let summary = id_summary(s)?;
        println!(
            "k={} pooled id {:.2} -> {:.2} (steepest drop {:.2} at {})",
            summary.k, summary.initial_id, summary.final_id, summary.steepest_drop, summary.drop_label
        );
    }

    let tables = [
        rouge_table("rouge_final", &rouge.cells),
        series_table("stability", &stability),
        series_table("confidence", &confidence),
        series_table("intrinsic_dimension", &id),
    ];
    let manifest = export(&tables, &rouge.notes, &root.join("analysis"))?;
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}
