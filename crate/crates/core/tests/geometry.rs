mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coding_convergence::backends::{ScriptedAgentPlan, ScriptedBackend, ScriptedEmbedder};
use coding_convergence::engine::{run_grid, SimulationConfig, Transcript};
use coding_convergence::geometry::{
    influence_matrices, mean_pairwise_cosine_series, per_model_id_series, pooled_id_series, CodeEmbeddings,
    DEFAULT_DISCARD_FRACTION,
};

fn simulate(plans: ScriptedBackend, ids: &[&str], rounds: u32, n_items: usize) -> Vec<Transcript> {
    let config = SimulationConfig::new(common::agents(ids), rounds, common::items(n_items));
    let outcome = run_grid(&[config], &plans, Some(1)).unwrap();
    assert_eq!(outcome.report.failed, 0);
    outcome.transcripts
}

fn constant_plans(codes: &[(&str, &str)]) -> ScriptedBackend {
    ScriptedBackend::new(codes.iter().map(|(id, code)| ScriptedAgentPlan::new(*id).with_default(*code)))
}

#[test]
fn orthogonal_agents_only_influence_themselves() {
    let transcripts = simulate(constant_plans(&[("a", "Alpha"), ("b", "Beta")]), &["a", "b"], 2, 3);
    let embedder = ScriptedEmbedder::new("fixed", 2)
        .with_entry("Alpha", vec![1.0, 0.0])
        .unwrap()
        .with_entry("Beta", vec![0.0, 1.0])
        .unwrap();
    let emb = CodeEmbeddings::build(&transcripts, &embedder).unwrap();
    let matrices = influence_matrices(&transcripts, &emb);
    // Rounds 1, 2 and the synthesis turn.
    assert_eq!(matrices.len(), 3);
    for m in &matrices {
        assert_eq!(m.entry("a", "a"), Some(1.0));
        assert_eq!(m.entry("b", "b"), Some(1.0));
        assert_eq!(m.entry("a", "b"), Some(0.0));
        assert_eq!(m.entry("b", "a"), Some(0.0));
        assert!(m.n_samples.iter().flatten().all(|&n| n == 3));
    }
}

#[test]
fn pairwise_cosine_of_a_fixed_pair() {
    let transcripts = simulate(constant_plans(&[("a", "Alpha"), ("b", "Beta")]), &["a", "b"], 1, 2);
    let embedder = ScriptedEmbedder::new("fixed", 2)
        .with_entry("Alpha", vec![1.0, 0.0])
        .unwrap()
        .with_entry("Beta", vec![1.0, 1.0])
        .unwrap();
    let emb = CodeEmbeddings::build(&transcripts, &embedder).unwrap();
    let series = mean_pairwise_cosine_series(&transcripts, &emb);
    assert_eq!(series.len(), 1);
    let values = series[0].values();
    assert_eq!(values.len(), 3);
    for v in values {
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }
}

#[test]
fn fixed_planar_codes_give_a_flat_dimension_series() {
    let ids = ["a", "b"];
    let plans = ScriptedBackend::new(ids.iter().map(|id| ScriptedAgentPlan::new(*id).with_default("{agent_id} on {item_id}")));
    let transcripts = simulate(plans, &ids, 3, 60);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut embedder = ScriptedEmbedder::new("plane", 5);
    let mut texts: Vec<String> = transcripts.iter().flat_map(|t| t.utterances.iter().map(|u| u.code().text)).collect();
    texts.sort();
    texts.dedup();
    assert_eq!(texts.len(), 120);
    for text in texts {
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        embedder.insert(text, vec![x, y, 0.5 * x - y, 0.0, 1.0]).unwrap();
    }
    let emb = CodeEmbeddings::build(&transcripts, &embedder).unwrap();
    let pooled = pooled_id_series(&transcripts, &emb, DEFAULT_DISCARD_FRACTION).remove(0);
    let values = pooled.values();
    assert_eq!(values.len(), 5);
    assert!(values.iter().all(|v| v.to_bits() == values[0].to_bits()), "{values:?}");
    assert!((1.5..2.5).contains(&values[0]), "{}", values[0]);

    // Each agent's 60 codes also sit on the same plane.
    let per_model = per_model_id_series(&transcripts, &emb, DEFAULT_DISCARD_FRACTION);
    assert_eq!(per_model.len(), 2);
    for s in &per_model {
        assert!(s.gaps.is_empty());
        assert!(s.values().iter().all(|v| (1.2..2.8).contains(v)), "{:?}", s.values());
    }
}
