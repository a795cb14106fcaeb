use proptest::collection::vec;
use proptest::prelude::*;

use coding_convergence::geometry::{
    opinion_axis, opinion_confidence_grid, twonn_id_rows, OpinionConfidencePoint, DEFAULT_DISCARD_FRACTION,
};
use coding_convergence::lexmetrics::{confidence, rouge, stability_texts, Lexicon, TfIdfModel};
use coding_convergence::primitives::{cosine_slices, join_tokens, tokenize};

const WORDS: [&str; 12] = [
    "trust", "erosion", "civic", "fear", "identity", "money", "clearly", "might", "the", "a", "no", "doubt",
];

fn phrase(max: usize) -> impl Strategy<Value = String> {
    vec(prop::sample::select(WORDS.to_vec()), 0..max).prop_map(|w| w.join(" "))
}

fn distinct_phrase() -> impl Strategy<Value = String> {
    prop::sample::subsequence(WORDS.to_vec(), 0..WORDS.len())
        .prop_shuffle()
        .prop_map(|w| w.join(" "))
}

fn nonzero_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-10.0..10.0f64, dim).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn tokenize_is_idempotent(text in "\\PC{0,40}") {
        let once = tokenize(&text);
        prop_assert_eq!(tokenize(&join_tokens(&once)), once);
    }

    #[test]
    fn cosine_is_symmetric_and_scale_free((a, b) in (nonzero_vec(6), nonzero_vec(6)), s in 0.1..50.0f64) {
        let ab = cosine_slices(&a, &b).unwrap();
        prop_assert!((ab - cosine_slices(&b, &a).unwrap()).abs() < 1e-12);
        let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();
        prop_assert!((ab - cosine_slices(&scaled, &b).unwrap()).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn rouge_is_symmetric_and_bounded(a in phrase(8), b in phrase(8)) {
        let ab = rouge(&a, &b);
        prop_assert_eq!(ab, rouge(&b, &a));
        for v in [ab.rouge1_f, ab.rouge2_f, ab.rouge_l_f] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(ab.rouge_l_f <= ab.rouge1_f + 1e-12);
    }

    #[test]
    fn unigram_f1_bounds_bigram_f1_without_repeats(a in distinct_phrase(), b in distinct_phrase()) {
        let s = rouge(&a, &b);
        prop_assert!(s.rouge1_f + 1e-12 >= s.rouge2_f, "{:?}", s);
    }

    #[test]
    fn confidence_stays_in_unit_interval(text in phrase(15)) {
        let c = confidence(&text, &Lexicon::default());
        prop_assert!((-1.0..=1.0).contains(&c));
    }

    #[test]
    fn token_retention_ignores_word_order(words in vec(prop::sample::select(WORDS.to_vec()), 1..8), prev in phrase(8)) {
        let mut reversed = words.clone();
        reversed.reverse();
        let forward = stability_texts(&prev, &words.join(" ")).token_retention;
        let backward = stability_texts(&prev, &reversed.join(" ")).token_retention;
        prop_assert_eq!(forward, backward);
        prop_assert!((0.0..=1.0).contains(&forward));
    }

    #[test]
    fn tfidf_ignores_corpus_order(corpus in vec(phrase(6), 1..6).prop_filter("has terms", |c| c.iter().any(|d| !d.is_empty())), probe in phrase(6)) {
        let mut shuffled = corpus.clone();
        shuffled.reverse();
        let (a, b) = (TfIdfModel::fit(&corpus).unwrap(), TfIdfModel::fit(&shuffled).unwrap());
        let (va, vb) = (a.transform(&probe), b.transform(&probe));
        prop_assert_eq!(va.len(), vb.len());
        for (term, w) in &va {
            prop_assert!((w - vb[term]).abs() < 1e-12);
        }
    }

    #[test]
    fn twonn_is_invariant_under_rigid_motion(
        points in vec(vec(-1.0..1.0f64, 3), 20..60),
        angle in 0.0..std::f64::consts::TAU,
        shift in vec(-5.0..5.0f64, 3),
    ) {
        let rows: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let Ok(base) = twonn_id_rows(&rows, DEFAULT_DISCARD_FRACTION) else { return Ok(()) };
        let (c, s) = (angle.cos(), angle.sin());
        let moved: Vec<Vec<f64>> = points
            .iter()
            .map(|p| vec![c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1], p[2] + shift[2]])
            .collect();
        let rows: Vec<&[f64]> = moved.iter().map(Vec::as_slice).collect();
        let after = twonn_id_rows(&rows, DEFAULT_DISCARD_FRACTION).unwrap();
        prop_assert!((base.id_estimate - after.id_estimate).abs() < 1e-9 * base.id_estimate.max(1.0),
            "{} vs {}", base.id_estimate, after.id_estimate);
    }

    #[test]
    fn opinion_projections_are_centred(points in vec(vec(-5.0..5.0f64, 4), 3..30)) {
        let rows: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        if let Ok(axis) = opinion_axis(&rows) {
            let mean = axis.projections.iter().sum::<f64>() / axis.projections.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
            let norm: f64 = axis.axis.iter().map(|v| v * v).sum();
            prop_assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_counts_every_point_once(
        raw in vec((0.0..=1.0f64, 0.0..=1.0f64, 0u32..4), 1..80),
        bins in 2usize..20,
    ) {
        let points: Vec<OpinionConfidencePoint> = raw
            .iter()
            .map(|&(opinion, confidence, round)| OpinionConfidencePoint { opinion, confidence, agent_id: "a".into(), round })
            .collect();
        let grids = opinion_confidence_grid(&points, bins);
        let total: u64 = grids.iter().map(|g| g.total()).sum();
        prop_assert_eq!(total, points.len() as u64);
        for g in &grids {
            let expected = points.iter().filter(|p| p.round == g.round).count() as u64;
            prop_assert_eq!(g.total(), expected);
        }
    }
}
