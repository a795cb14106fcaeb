//! Round-to-round influence between agents, with one agent adopting
//! another's code.
//!
//! cargo run --example influence_matrix

use coding_convergence::backends::{AgentSpec, ScriptedAgentPlan, ScriptedBackend, ScriptedEmbedder, TurnKey};
use coding_convergence::engine::{run_grid, SimulationConfig};
use coding_convergence::geometry::{influence_matrices, mean_pairwise_cosine_series, CodeEmbeddings};
use coding_convergence::ingest::{CommentRecord, ItemSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let items = ItemSet::new(
        (0..4).map(|i| CommentRecord::new(format!("c{i}"), format!("comment {i}"), None)).collect(),
        "inline",
    )?;
    let agents = vec![AgentSpec::scripted("a", "m1"), AgentSpec::scripted("b", "m2"), AgentSpec::scripted("c", "m3")];
    // b switches to a's code in round 1; c never moves.
    let backend = ScriptedBackend::new([
        ScriptedAgentPlan::new("a").with_default("Institutional Distrust"),
        ScriptedAgentPlan::new("b")
            .with_output(TurnKey::Initial, "Economic Anxiety")
            .with_default("Institutional Distrust"),
        ScriptedAgentPlan::new("c").with_default("Moral Outrage"),
    ]);
    let config = SimulationConfig::new(agents, 2, items);
    let outcome = run_grid(&[config], &backend, None)?;

    let embedder = ScriptedEmbedder::new("fixed", 3)
        .with_entry("Institutional Distrust", vec![1.0, 0.0, 0.0])?
        .with_entry("Economic Anxiety", vec![0.6, 0.8, 0.0])?
        .with_entry("Moral Outrage", vec![0.0, 0.0, 1.0])?;
    let emb = CodeEmbeddings::build(&outcome.transcripts, &embedder)?;

    for m in influence_matrices(&outcome.transcripts, &emb) {
        println!("{}: rows are round {} codes, columns the round {} codes", m.slice.round_label(m.round), m.round, m.round - 1);
        print!("     ");
        for id in &m.agent_ids {
            print!("{id:>7}");
        }
        println!();
        for (id, row) in m.agent_ids.iter().zip(&m.values) {
            print!("{id:>5}");
            for v in row {
                match v {
                    Some(v) => print!("{v:>7.3}"),
                    None => print!("{:>7}", "-"),
                }
            }
            println!();
        }
    }
    for s in mean_pairwise_cosine_series(&outcome.transcripts, &emb) {
        let labels: Vec<String> = s.points.iter().map(|p| format!("{}={:.3}", s.slice.round_label(p.round), p.value)).collect();
        println!("mean pairwise cosine: {}", labels.join(" "));
    }
    Ok(())
}
