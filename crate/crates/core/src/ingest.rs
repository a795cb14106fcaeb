//! Comment corpus loading and item selection.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io_error: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse_error: {0}")]
    Parse(String),
    #[error("column_not_found: {0}")]
    ColumnNotFound(String),
    #[error("duplicate_id: {0}")]
    DuplicateId(String),
    #[error("invalid_score: row {row}: {value:?} is not a number in [0, 1]")]
    InvalidScore { row: usize, value: String },
    #[error("sample_too_large: requested {requested}, only {available} records survive filtering")]
    SampleTooLarge { requested: usize, available: usize },
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "io_error",
            IngestError::Parse(_) => "parse_error",
            IngestError::ColumnNotFound(_) => "column_not_found",
            IngestError::DuplicateId(_) => "duplicate_id",
            IngestError::InvalidScore { .. } => "invalid_score",
            IngestError::SampleTooLarge { .. } => "sample_too_large",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub id: String,
    pub text: String,
    pub disagreement_score: Option<f64>,
    pub word_count: usize,
}

impl CommentRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, score: Option<f64>) -> Self {
        let text = text.into();
        Self {
            id: id.into(),
            word_count: text.split_whitespace().count(),
            text,
            disagreement_score: score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSet {
    pub items: Vec<CommentRecord>,
    pub source_uri: String,
}

impl ItemSet {
    /// Builds an item set, rejecting duplicate ids.
    pub fn new(items: Vec<CommentRecord>, source_uri: impl Into<String>) -> Result<Self, IngestError> {
        let mut seen = HashSet::new();
        for item in &items {
            if !seen.insert(item.id.as_str()) {
                return Err(IngestError::DuplicateId(item.id.clone()));
            }
        }
        Ok(Self {
            items,
            source_uri: source_uri.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped_empty: usize,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub text_column: String,
    pub score_column: Option<String>,
    /// Column holding record ids. When unset, an `id` column is used if the
    /// header has one, otherwise the 1-based data row number.
    pub id_column: Option<String>,
    pub delimiter: u8,
}

impl LoadOptions {
    pub fn new(text_column: impl Into<String>) -> Self {
        Self {
            text_column: text_column.into(),
            score_column: None,
            id_column: None,
            delimiter: b',',
        }
    }

    pub fn with_score_column(mut self, column: impl Into<String>) -> Self {
        self.score_column = Some(column.into());
        self
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IngestError::ColumnNotFound(name.to_owned()))
}

/// Reads a delimiter-separated file with a header row.
///
/// Rows whose text is empty (after trimming) are dropped and counted in the
/// returned [`LoadReport`].
pub fn load_comments(path: &Path, options: &LoadOptions) -> Result<(ItemSet, LoadReport), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Parse(e.to_string()))?
        .clone();

    let text_idx = column_index(&headers, &options.text_column)?;
    let score_idx = options
        .score_column
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;
    let id_idx = match options.id_column.as_deref() {
        Some(c) => Some(column_index(&headers, c)?),
        None => headers.iter().position(|h| h == "id"),
    };

    let mut report = LoadReport::default();
    let mut items = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IngestError::Parse(e.to_string()))?;
        report.rows_read += 1;
        let text = record.get(text_idx).unwrap_or("");
        if text.trim().is_empty() {
            report.rows_dropped_empty += 1;
            continue;
        }
        let score = match score_idx.and_then(|i| record.get(i)) {
            Some(raw) if !raw.trim().is_empty() => {
                let value: f64 = raw.trim().parse().map_err(|_| IngestError::InvalidScore {
                    row: row + 1,
                    value: raw.to_owned(),
                })?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(IngestError::InvalidScore {
                        row: row + 1,
                        value: raw.to_owned(),
                    });
                }
                Some(value)
            }
            _ => None,
        };
        let id = match id_idx.and_then(|i| record.get(i)) {
            Some(id) if !id.is_empty() => id.to_owned(),
            _ => (row + 1).to_string(),
        };
        items.push(CommentRecord::new(id, text, score));
        report.rows_kept += 1;
    }
    Ok((ItemSet::new(items, path.display().to_string())?, report))
}

/// How survivors of the length and score predicates are subsampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Sample {
    /// Uniform sample without replacement from a seeded ChaCha stream.
    Uniform { n: usize, seed: u64 },
    /// The `n` records with the highest disagreement score; unscored records
    /// rank last and ties keep input order.
    TopScore { n: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterOptions {
    pub min_words: usize,
    pub min_score: Option<f64>,
    pub sample: Option<Sample>,
}

/// Applies the length and score predicates, then optional sampling.
///
/// Survivors keep their input order, including after sampling.
pub fn filter_items(set: &ItemSet, options: &FilterOptions) -> Result<ItemSet, IngestError> {
    let survivors: Vec<&CommentRecord> = set
        .items
        .iter()
        .filter(|r| r.word_count >= options.min_words)
        .filter(|r| match options.min_score {
            Some(min) => r.disagreement_score.is_some_and(|s| s >= min),
            None => true,
        })
        .collect();

    let chosen: Vec<&CommentRecord> = match options.sample {
        None => survivors,
        Some(sample) => {
            let n = match sample {
                Sample::Uniform { n, .. } | Sample::TopScore { n } => n,
            };
            if n > survivors.len() {
                return Err(IngestError::SampleTooLarge {
                    requested: n,
                    available: survivors.len(),
                });
            }
            let mut picked: Vec<usize> = match sample {
                Sample::Uniform { seed, .. } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    index::sample(&mut rng, survivors.len(), n).into_vec()
                }
                Sample::TopScore { .. } => {
                    let mut order: Vec<usize> = (0..survivors.len()).collect();
                    order.sort_by(|&a, &b| {
                        let sa = survivors[a].disagreement_score.unwrap_or(f64::NEG_INFINITY);
                        let sb = survivors[b].disagreement_score.unwrap_or(f64::NEG_INFINITY);
                        sb.total_cmp(&sa).then(a.cmp(&b))
                    });
                    order.truncate(n);
                    order
                }
            };
            picked.sort_unstable();
            picked.into_iter().map(|i| survivors[i]).collect()
        }
    };

    Ok(ItemSet {
        items: chosen.into_iter().cloned().collect(),
        source_uri: set.source_uri.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn words(n: usize) -> String {
        vec!["word"; n].join(" ")
    }

    fn write_file(contents: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        file
    }

    #[test]
    fn drops_empty_rows() {
        let file = write_file("id,comment_text\na,hello there\nb,\nc,  general kenobi\n");
        let (set, report) = load_comments(file.path(), &LoadOptions::new("comment_text")).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(
            report,
            LoadReport {
                rows_read: 3,
                rows_kept: 2,
                rows_dropped_empty: 1
            }
        );
        assert_eq!(set.items[1].id, "c");
        assert_eq!(set.items[1].word_count, 2);
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            r#"{"rows_read":3,"rows_kept":2,"rows_dropped_empty":1}"#
        );
    }

    #[test]
    fn missing_score_column_leaves_scores_unset() {
        let file = write_file("text\none two\nthree\n");
        let (set, _) = load_comments(file.path(), &LoadOptions::new("text")).unwrap();
        assert!(set.items.iter().all(|r| r.disagreement_score.is_none()));
        assert_eq!(set.items[0].id, "1");
    }

    #[test]
    fn header_only_file_is_empty() {
        let file = write_file("id,text,score\n");
        let opts = LoadOptions::new("text").with_score_column("score");
        let (set, report) = load_comments(file.path(), &opts).unwrap();
        assert!(set.is_empty());
        assert_eq!(report.rows_read, 0);
    }

    #[test]
    fn reads_scores_and_custom_delimiter() {
        let file = write_file("id\ttext\tdis\nx\ta b c\t0.75\ny\td e\t\n");
        let mut opts = LoadOptions::new("text").with_score_column("dis");
        opts.delimiter = b'\t';
        let (set, _) = load_comments(file.path(), &opts).unwrap();
        assert_eq!(set.items[0].disagreement_score, Some(0.75));
        assert_eq!(set.items[1].disagreement_score, None);
    }

    #[test]
    fn load_errors() {
        let file = write_file("id,text\n1,hi\n");
        let err = load_comments(file.path(), &LoadOptions::new("comment")).unwrap_err();
        assert_eq!(err.code(), "column_not_found");
        let err = load_comments(Path::new("/nonexistent/x.csv"), &LoadOptions::new("t")).unwrap_err();
        assert_eq!(err.code(), "io_error");
        let file = write_file("id,text\n1,hi\n1,again\n");
        let err = load_comments(file.path(), &LoadOptions::new("text")).unwrap_err();
        assert_eq!(err.code(), "duplicate_id");
        let file = write_file("id,text,s\n1,hi,lots\n");
        let err = load_comments(file.path(), &LoadOptions::new("text").with_score_column("s")).unwrap_err();
        assert_eq!(err.code(), "invalid_score");
    }

    fn sample_set() -> ItemSet {
        let items = (0..20)
            .map(|i| CommentRecord::new(format!("c{i}"), words(90 + i * 2), Some(i as f64 / 20.0)))
            .collect();
        ItemSet::new(items, "mem").unwrap()
    }

    #[test]
    fn min_words_predicate() {
        let set = ItemSet::new(
            vec![
                CommentRecord::new("short", words(50), None),
                CommentRecord::new("long", words(150), None),
            ],
            "mem",
        )
        .unwrap();
        let out = filter_items(&set, &FilterOptions { min_words: 100, ..Default::default() }).unwrap();
        assert_eq!(out.items.len(), 1);
        assert_eq!(out.items[0].id, "long");
    }

    #[test]
    fn identity_filter() {
        let set = sample_set();
        assert_eq!(filter_items(&set, &FilterOptions::default()).unwrap(), set);
    }

    #[test]
    fn seeded_sampling_is_deterministic_and_ordered() {
        let set = sample_set();
        let opts = FilterOptions {
            sample: Some(Sample::Uniform { n: 7, seed: 42 }),
            ..Default::default()
        };
        let a = filter_items(&set, &opts).unwrap();
        let b = filter_items(&set, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7);
        let positions: Vec<usize> = a
            .items
            .iter()
            .map(|r| set.items.iter().position(|s| s.id == r.id).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn score_threshold_and_top_score() {
        let set = sample_set();
        let out = filter_items(
            &set,
            &FilterOptions {
                min_words: 100,
                min_score: Some(0.5),
                sample: None,
            },
        )
        .unwrap();
        assert!(out.items.iter().all(|r| r.word_count >= 100 && r.disagreement_score.unwrap() >= 0.5));
        assert_eq!(out.len(), 10);

        let top = filter_items(
            &set,
            &FilterOptions {
                sample: Some(Sample::TopScore { n: 3 }),
                ..Default::default()
            },
        )
        .unwrap();
        let ids: Vec<&str> = top.items.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["c17", "c18", "c19"]);
    }

    #[test]
    fn oversampling_fails() {
        let set = sample_set();
        let err = filter_items(
            &set,
            &FilterOptions {
                min_words: 120,
                sample: Some(Sample::Uniform { n: 50, seed: 1 }),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert_eq!(err.code(), "sample_too_large");
    }

    #[test]
    fn raising_min_words_is_monotone() {
        let set = sample_set();
        let mut previous = usize::MAX;
        for min_words in (80..140).step_by(5) {
            let n = filter_items(&set, &FilterOptions { min_words, ..Default::default() })
                .unwrap()
                .len();
            assert!(n <= previous);
            previous = n;
        }
    }
}
