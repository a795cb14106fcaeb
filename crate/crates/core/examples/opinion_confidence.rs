//! Projects codes onto their first principal axis and bins them against
//! lexical confidence.
//!
//! cargo run --example opinion_confidence

use coding_convergence::backends::{AgentSpec, ScriptedAgentPlan, ScriptedBackend, ScriptedEmbedder, TurnKey};
use coding_convergence::engine::{run_grid, SimulationConfig};
use coding_convergence::geometry::{
    opinion_confidence_grid, opinion_confidence_points, CodeEmbeddings, ConfidenceScaling,
};
use coding_convergence::ingest::{CommentRecord, ItemSet};
use coding_convergence::lexmetrics::Lexicon;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let items = ItemSet::new(
        (0..6).map(|i| CommentRecord::new(format!("c{i}"), format!("comment {i}"), None)).collect(),
        "inline",
    )?;
    let agents = vec![AgentSpec::scripted("sure", "m1"), AgentSpec::scripted("unsure", "m2")];
    let backend = ScriptedBackend::new([
        ScriptedAgentPlan::new("sure").with_default("Clearly distrust of {item_id}"),
        ScriptedAgentPlan::new("unsure")
            .with_output(TurnKey::Initial, "Maybe fear about {item_id}")
            .with_default("Perhaps distrust of {item_id}"),
    ]);
    let outcome = run_grid(&[SimulationConfig::new(agents, 1, items)], &backend, None)?;
    let group: Vec<_> = outcome.transcripts.iter().collect();
    let emb = CodeEmbeddings::build(group.iter().copied(), &ScriptedEmbedder::new("hash", 64))?;

    let points = opinion_confidence_points(&group, &emb, &Lexicon::default(), ConfidenceScaling::Global)?;
    for p in points.iter().take(6) {
        println!("{:<7} round {}  opinion {:.3}  confidence {:.3}", p.agent_id, p.round, p.opinion, p.confidence);
    }
    println!("... {} points", points.len());

    for grid in opinion_confidence_grid(&points, 5) {
        println!("\nround {} ({} codes), rows are confidence bins, top = 1", grid.round, grid.total());
        for y in (0..grid.bins).rev() {
            let row: String = (0..grid.bins).map(|x| format!("{:>3}", grid.count(x, y))).collect();
            println!("  {row}");
        }
    }
    Ok(())
}
