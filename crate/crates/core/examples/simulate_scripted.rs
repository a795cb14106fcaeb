//! Runs a small discussion grid against scripted agents and prints one
//! transcript.
//!
//! cargo run --example simulate_scripted

use coding_convergence::backends::{AgentSpec, ScriptedAgentPlan, ScriptedBackend, TurnKey};
use coding_convergence::engine::{run_grid, SimulationConfig};
use coding_convergence::ingest::{CommentRecord, ItemSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let items = ItemSet::new(
        vec![
            CommentRecord::new("c1", "Housing vouchers just reward people who refuse to work.", Some(0.9)),
            CommentRecord::new("c2", "The city council never listens to renters.", Some(0.7)),
        ],
        "inline",
    )?;
    let roster = vec![
        AgentSpec::scripted("mistral", "mistral"),
        AgentSpec::scripted("llama", "llama3.1"),
        AgentSpec::scripted("qwen", "qwen2.5"),
    ];
    let backend = ScriptedBackend::new([
        ScriptedAgentPlan::new("mistral")
            .with_output(TurnKey::Initial, "Misguided Compassion")
            .with_default("Compassion Fatigue"),
        ScriptedAgentPlan::new("llama")
            .with_output(TurnKey::Initial, "<think>resentment about aid</think> Welfare Resentment")
            .with_default("Compassion Fatigue"),
        ScriptedAgentPlan::new("qwen")
            .with_output(TurnKey::Initial, "Distrust of Institutions")
            .with_output(TurnKey::Round(1), "Institutional Distrust")
            .with_default("Compassion Fatigue and Distrust"),
    ]);

    let configs: Vec<SimulationConfig> = [2, 3]
        .into_iter()
        .flat_map(|k| {
            let (roster, items) = (&roster, &items);
            (1..=2).map(move |rounds| SimulationConfig::new(roster[..k].to_vec(), rounds, items.clone()))
        })
        .collect();
    let outcome = run_grid(&configs, &backend, None)?;
    println!("{}", serde_json::to_string_pretty(&outcome.report)?);

    let t = outcome.transcripts.iter().find(|t| t.group_size() == 3 && t.rounds == 2).unwrap();
    println!("\n{} (prompt {})", t.discussion_id, t.prompt_index);
    for u in &t.utterances {
        println!("  {:>10} {:<7} R{}  {:<40} | {}", u.phase.as_str(), u.agent_id, u.round, u.code().text, u.summary);
    }
    Ok(())
}
