//! ROUGE, stability and TF-IDF self-consistency on hand-picked codes.
//!
//! cargo run --example lexical_metrics

use coding_convergence::lexmetrics::{rouge, self_consistency, stability_texts};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs = [
        ("the cat on mat", "the cat sat on the mat"),
        ("Compassion Fatigue", "compassion fatigue!"),
        ("Misguided Compassion", "Institutional Distrust"),
        ("Distrust of Institutions", "Institutional Distrust"),
    ];
    println!("{:<26} {:<26} {:>7} {:>7} {:>7}", "candidate", "reference", "r1", "r2", "rL");
    for (a, b) in pairs {
        let s = rouge(a, b);
        println!("{a:<26} {b:<26} {:>7.4} {:>7.4} {:>7.4}", s.rouge1_f, s.rouge2_f, s.rouge_l_f);
    }

    let rounds = ["Welfare Resentment", "Welfare Resentment and Fatigue", "Compassion Fatigue", "Compassion Fatigue"];
    println!("\nstability of one agent's codes");
    for w in rounds.windows(2) {
        let s = stability_texts(w[0], w[1]);
        println!("  {:<32} -> {:<32} exact {} retention {:.3}", w[0], w[1], s.exact_match, s.token_retention);
    }

    let corpus: Vec<&str> = rounds.to_vec();
    let c = self_consistency(&rounds[..3], &rounds[1..], &corpus)?;
    println!("\nmean TF-IDF cosine between consecutive rounds: {c:.4}");
    Ok(())
}
