//! Fixtures shared by the integration and acceptance targets.
#![allow(dead_code)]

use coding_convergence::backends::{AgentSpec, ScriptedAgentPlan, ScriptedBackend, ScriptedEmbedder, TurnKey};
use coding_convergence::engine::{SimulationConfig, StartRotation, Transcript};
use coding_convergence::ingest::{CommentRecord, ItemSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

pub const LEADER: &str = "lead";
pub const FOLLOWERS: [&str; 2] = ["early", "late"];
/// Refinement round at which each follower starts repeating the leader.
pub const COPY_ROUND: [u32; 2] = [2, 3];
pub const LEADER_CODE: &str = "Shared institutional trust erosion {item_id}.";

pub fn items(n: usize) -> ItemSet {
    let records = (0..n)
        .map(|i| CommentRecord::new(format!("c{i}"), format!("Comment {i} about local politics and trust."), None))
        .collect();
    ItemSet::new(records, "fixture").unwrap()
}

pub fn agents(ids: &[&str]) -> Vec<AgentSpec> {
    ids.iter().map(|id| AgentSpec::scripted(*id, format!("model-{id}"))).collect()
}

/// Generic plans: every agent has distinct initial and refined codes.
pub fn generic_backend(ids: &[String]) -> ScriptedBackend {
    ScriptedBackend::new(ids.iter().map(|id| {
        ScriptedAgentPlan::new(id.clone())
            .with_output(TurnKey::Initial, format!("<think>consider</think> {id} first idea on {{item_id}}. More."))
            .with_default(format!("{id} refined code for {{item_id}}. Extra."))
    }))
}

/// The leader repeats one code from round 0; each follower produces unique
/// single-token codes until its copy round and repeats the leader after.
pub fn convergence_backend(rounds: u32) -> ScriptedBackend {
    let leader = ScriptedAgentPlan::new(LEADER).with_default(LEADER_CODE);
    let followers = FOLLOWERS.iter().zip(COPY_ROUND).map(|(id, copy)| {
        let own = |tag: &str| format!("view{{agent_id}}{tag}n{{item_id}}");
        let mut plan = ScriptedAgentPlan::new(*id)
            .with_output(TurnKey::Initial, own("r0"))
            .with_output(TurnKey::Synthesis, LEADER_CODE);
        for r in 1..=rounds {
            let text = if r >= copy { LEADER_CODE.to_owned() } else { own(&format!("r{r}")) };
            plan = plan.with_output(TurnKey::Round(r), text);
        }
        plan
    });
    ScriptedBackend::new(std::iter::once(leader).chain(followers))
}

pub fn convergence_config(n_items: usize, rounds: u32) -> SimulationConfig {
    let mut ids = vec![LEADER];
    ids.extend(FOLLOWERS);
    let mut config = SimulationConfig::new(agents(&ids), rounds, items(n_items));
    config.seed = 42;
    config.start_rotation = StartRotation::Fixed;
    config
}

/// Leader codes sit on a random 1-D segment; every other code is an
/// isotropic 8-D Gaussian draw. Round 0 mixes both, later rounds collapse
/// onto the segment.
pub fn collapse_embedder(transcripts: &[Transcript]) -> ScriptedEmbedder {
    const DIM: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let along = Uniform::new(0.0, 1.0).unwrap();
    let mut texts: Vec<String> = transcripts
        .iter()
        .flat_map(|t| t.utterances.iter().map(|u| u.code().text))
        .collect();
    texts.sort();
    texts.dedup();
    let mut embedder = ScriptedEmbedder::new("collapse-fixture", DIM);
    for text in texts {
        let values: Vec<f64> = if text.starts_with("Shared institutional") {
            let t: f64 = along.sample(&mut rng);
            (0..DIM).map(|d| if d == 0 { 1.0 + t } else { 0.5 }).collect()
        } else {
            (0..DIM).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        embedder.insert(text, values).unwrap();
    }
    embedder
}
