//! Lexicon-based confidence with the built-in and a custom phrase list.
//!
//! cargo run --example confidence_lexicon

use coding_convergence::lexmetrics::{confidence, confidence_with, Lexicon, Normalization};
use coding_convergence::primitives::tokenize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lexicon = Lexicon::default();
    println!("{} certainty and {} hedging phrases", lexicon.certainty().count(), lexicon.hedging().count());
    let texts = [
        "this is clearly correct",
        "might possibly",
        "Without a doubt the code is Institutional Distrust.",
        "It seems the theme could be fatigue. Perhaps resentment.",
        "Compassion Fatigue",
    ];
    for text in texts {
        let (c, h) = lexicon.count_cues(&tokenize(text));
        println!(
            "{text:<58} certain {c} hedged {h}  per token {:>7.4}  per sentence {:>7.4}",
            confidence(text, &lexicon),
            confidence_with(text, &lexicon, Normalization::Sentences)
        );
    }

    let custom = Lexicon::parse("[certainty]\nfor sure\nobviously\n\n[hedging]\nkind of\n")?;
    let text = "obviously kind of for sure";
    println!("\ncustom lexicon on {text:?}: {:.4}", confidence(text, &custom));
    Ok(())
}
