use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use coding_convergence::cli::{self, EXIT_ERROR, EXIT_OK, EXIT_PARTIAL};
use coding_convergence::store::{load_transcripts, TranscriptFilter};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn coconv(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("coconv").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn json_files(root: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    if !root.exists() {
        return found;
    }
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "json") {
                found.push(p);
            }
        }
    }
    found
}

fn write_config(dir: &Path, agents: &[&str], group_sizes: &[usize], rounds: &[u32], n_items: usize, plans: Value) -> PathBuf {
    let config = json!({
        "agents": agents.iter().map(|a| json!({"agent_id": a, "model_name": format!("model-{a}")})).collect::<Vec<_>>(),
        "grid": {"group_sizes": group_sizes, "round_counts": rounds},
        "dataset": {"inline": (0..n_items).map(|i| json!({"id": format!("item{i}"), "text": format!("comment number {i}")})).collect::<Vec<_>>()},
        "seed": 1,
        "backend": {"mode": "scripted", "plans": plans},
        "output_dir": "out"
    });
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn simulate(config: &Path) -> Run {
    coconv(&["simulate", "--config", config.to_str().unwrap()])
}

fn analyze(input: &Path, out: &Path, extra: &[&str]) -> Run {
    let mut args = vec!["analyze", "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    coconv(&args)
}

#[test]
fn two_items_one_cell_writes_two_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let plans = json!({"a": {"default": "Trust."}, "b": {"default": "Fear."}});
    let config = write_config(dir.path(), &["a", "b"], &[2], &[1], 2, plans);
    let run = simulate(&config);
    assert_eq!(run.code, EXIT_OK, "{}", run.stderr);
    assert_eq!(json_files(&dir.path().join("out")).len(), 2);
    let report: Value = serde_json::from_str(run.stdout.trim()).unwrap();
    assert_eq!(report["completed"], 2);
    assert_eq!(report["utterances_total"], 2 * 2 * 3);
}

#[test]
fn group_of_one_is_rejected_before_anything_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let plans = json!({"a": {"default": "Trust."}, "b": {"default": "Fear."}});
    let config = write_config(dir.path(), &["a", "b"], &[1], &[1], 2, plans);
    let run = simulate(&config);
    assert_eq!(run.code, EXIT_ERROR);
    assert!(run.stderr.contains("error"), "{}", run.stderr);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_plan_round_is_a_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let plans = json!({
        "a": {"initial": "Trust.", "round_1": "Trust.", "synthesis": "Trust."},
        "b": {"default": "Fear."}
    });
    let config = write_config(dir.path(), &["a", "b"], &[2], &[1, 2], 1, plans);
    let run = simulate(&config);
    assert_eq!(run.code, EXIT_PARTIAL, "{}", run.stderr);
    assert!(run.stderr.contains("plan_missing_turn"), "{}", run.stderr);

    let all = TranscriptFilter {
        include_incomplete: true,
        ..TranscriptFilter::default()
    };
    let loaded = load_transcripts(&dir.path().join("out"), &all);
    assert!(loaded.errors.is_empty());
    let incomplete: Vec<_> = loaded.transcripts.iter().filter(|t| t.incomplete).collect();
    assert_eq!(loaded.transcripts.len(), 2);
    assert_eq!(incomplete.len(), 1);
    assert_eq!(incomplete[0].rounds, 2);

    // Incomplete transcripts stay out of the analysis unless asked for.
    let run = analyze(&dir.path().join("out"), &dir.path().join("a"), &["--metrics", "rouge"]);
    assert_eq!(run.code, EXIT_OK, "{}", run.stderr);
    let csv = fs::read_to_string(dir.path().join("a/rouge_final.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn rouge_only_analysis_has_one_cell_and_report_marks_id_absent() {
    let dir = tempfile::tempdir().unwrap();
    let plans = json!({"a": {"default": "Trust erosion."}, "b": {"default": "Trust."}});
    let config = write_config(dir.path(), &["a", "b"], &[2], &[1], 1, plans);
    assert_eq!(simulate(&config).code, EXIT_OK);
    let analysis = dir.path().join("analysis");
    let run = analyze(&dir.path().join("out"), &analysis, &["--metrics", "rouge"]);
    assert_eq!(run.code, EXIT_OK, "{}", run.stderr);
    let csv = fs::read_to_string(analysis.join("rouge_final.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    // "trust erosion" vs "trust": LCS 1 over lengths 2 and 1.
    assert_eq!(lines[1], "0,2,1,0.666667,0.666667,1");

    let report = coconv(&["report", "--in", analysis.to_str().unwrap()]);
    assert_eq!(report.code, EXIT_OK, "{}", report.stderr);
    assert!(report.stdout.contains("Intrinsic dimension: absent"));
    assert!(report.stdout.contains("rouge_final.csv"));
}

#[test]
fn three_agent_table_matches_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let plans = json!({
        "a": {"default": "Trust erosion."},
        "b": {"default": "Trust erosion."},
        "c": {"default": "Civic trust."}
    });
    let config = write_config(dir.path(), &["a", "b", "c"], &[3], &[2], 1, plans);
    assert_eq!(simulate(&config).code, EXIT_OK);
    let analysis = dir.path().join("analysis");
    assert_eq!(analyze(&dir.path().join("out"), &analysis, &["--metrics", "rouge"]).code, EXIT_OK);
    // Pairs: (a,b) = 1, (a,c) = (b,c) = 2*1/(2+2) = 0.5.
    let csv = fs::read_to_string(analysis.join("rouge_final.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("0,3,2,0.666667,1.000000,1"));
}

#[test]
fn too_few_codes_for_dimension_gap_the_round() {
    let dir = tempfile::tempdir().unwrap();
    let plans = json!({"a": {"default": "View {item_id}."}, "b": {"default": "Other {item_id}."}});
    let config = write_config(dir.path(), &["a", "b"], &[2], &[1], 3, plans);
    assert_eq!(simulate(&config).code, EXIT_OK);
    let analysis = dir.path().join("analysis");
    let run = analyze(&dir.path().join("out"), &analysis, &["--metrics", "id"]);
    assert_eq!(run.code, EXIT_PARTIAL);
    assert!(run.stderr.contains("insufficient_points"), "{}", run.stderr);
    let csv = fs::read_to_string(analysis.join("intrinsic_dimension.csv")).unwrap();
    let pooled: Vec<&str> = csv.lines().filter(|l| l.contains(",pooled,")).collect();
    assert_eq!(pooled.len(), 3);
    assert!(pooled.iter().all(|l| l.contains(",,0,")), "{pooled:?}");
}

#[test]
fn full_analysis_lists_seven_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let plans = json!({
        "a": {"initial": "Clearly trust {item_id}.", "default": "Shared trust {item_id}."},
        "b": {"initial": "Maybe fear of {item_id}.", "default": "Shared trust {item_id}."},
        "c": {"initial": "Identity.", "default": "Shared trust {item_id}."}
    });
    let config = write_config(dir.path(), &["a", "b", "c"], &[3], &[2], 12, plans);
    assert_eq!(simulate(&config).code, EXIT_OK);
    let analysis = dir.path().join("analysis");
    let run = analyze(&dir.path().join("out"), &analysis, &[]);
    assert!(run.code == EXIT_OK || run.code == EXIT_PARTIAL, "{}", run.stderr);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(analysis.join("manifest.json")).unwrap()).unwrap();
    let names: Vec<&str> = manifest["artifacts"].as_array().unwrap().iter().map(|a| a["artifact"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        [
            "confidence.csv",
            "influence.csv",
            "intrinsic_dimension.csv",
            "opinion_confidence_grid.csv",
            "rouge_final.csv",
            "self_consistency.csv",
            "stability.csv"
        ]
    );
    let report = coconv(&["report", "--in", analysis.to_str().unwrap()]);
    assert_eq!(report.code, EXIT_OK, "{}", report.stderr);
    assert!(report.stdout.contains("Intrinsic dimension, pooled TwoNN"));
}

#[test]
fn analyze_and_report_reject_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(analyze(&empty, &dir.path().join("a"), &[]).code, EXIT_ERROR);
    assert_eq!(analyze(&empty, &dir.path().join("a"), &["--metrics", "bogus"]).code, EXIT_ERROR);
    assert_eq!(coconv(&["report", "--in", empty.to_str().unwrap()]).code, EXIT_ERROR);
    assert_eq!(coconv(&["frobnicate"]).code, EXIT_ERROR);
    assert_eq!(coconv(&["--help"]).code, EXIT_OK);
}

#[test]
fn report_detects_tampered_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let plans = json!({"a": {"default": "Trust."}, "b": {"default": "Trust."}});
    let config = write_config(dir.path(), &["a", "b"], &[2], &[1], 1, plans);
    assert_eq!(simulate(&config).code, EXIT_OK);
    let analysis = dir.path().join("analysis");
    assert_eq!(analyze(&dir.path().join("out"), &analysis, &["--metrics", "rouge,stability"]).code, EXIT_OK);
    fs::write(analysis.join("stability.csv"), "tampered\n").unwrap();
    let report = coconv(&["report", "--in", analysis.to_str().unwrap()]);
    assert_eq!(report.code, EXIT_ERROR);
    assert!(report.stderr.contains("manifest hash"));
}
