//! Loads a scored comment file, keeps the most contested comments and
//! counts the utterances a full grid would produce.
//!
//! cargo run --example corpus_accounting

use coding_convergence::ingest::{filter_items, load_comments, FilterOptions, LoadOptions, Sample};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("coconv-corpus-accounting");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("comments.csv");
    let mut csv = String::from("id,body,controversy\n");
    for i in 0..40 {
        let body = if i % 7 == 0 { String::new() } else { format!("comment {i} about rent control and the council") };
        csv.push_str(&format!("t{i},\"{body}\",{}\n", (i * 37 % 100) as f64 / 100.0));
    }
    std::fs::write(&path, csv)?;

    let (all, report) = load_comments(&path, &LoadOptions::new("body").with_score_column("controversy"))?;
    println!("{}", serde_json::to_string(&report)?);
    let top = filter_items(
        &all,
        &FilterOptions {
            min_words: 3,
            min_score: None,
            sample: Some(Sample::TopScore { n: 10 }),
        },
    )?;
    let ids: Vec<&str> = top.items.iter().map(|c| c.id.as_str()).collect();
    println!("kept {}: {}", top.len(), ids.join(" "));

    // Each discussion of k agents and R rounds has k * (R + 2) utterances.
    let (group_sizes, round_counts) = ([2usize, 3, 5], 1..=5usize);
    for n in [top.len(), 500] {
        let total: usize = group_sizes
            .iter()
            .flat_map(|k| round_counts.clone().map(move |r| n * k * (r + 2)))
            .sum();
        println!("{n} comments x k{{2,3,5}} x R{{1..5}}: {} discussions, {total} utterances", n * 15);
    }
    Ok(())
}
