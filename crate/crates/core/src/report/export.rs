use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::series::MetricSeries;
use super::tables::RougeLSummaryCell;
use super::ReportError;
use crate::geometry::{InfluenceMatrix, RoundGrid};
use crate::report::SliceKey;

pub const MANIFEST_FILE: &str = "manifest.json";

/// One CSV artifact, written as `{name}.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, ReportError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(&self.header).map_err(ReportError::csv)?;
        for row in &self.rows {
            writer.write_record(row).map_err(ReportError::csv)?;
        }
        writer.into_inner().map_err(|e| ReportError::Io(e.to_string()))
    }
}

/// Fixed six-decimal rendering; negative zero prints as zero.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

fn prompt_cell(slice: &SliceKey) -> String {
    slice.prompt_index.map(|p| p.to_string()).unwrap_or_else(|| "all".to_owned())
}

pub const SERIES_HEADER: &[&str] = &[
    "metric", "k", "rounds", "prompt", "label", "round", "round_label", "value", "n_samples", "note",
];

/// Long-format series table; gaps appear as rows with an empty value.
pub fn series_table(name: &str, series: &[MetricSeries]) -> Table {
    let mut rows: Vec<(SortKey, Vec<String>)> = Vec::new();
    for s in series {
        let base = |round: u32| {
            vec![
                s.metric_name.clone(),
                s.slice.k.to_string(),
                s.slice.rounds.to_string(),
                prompt_cell(&s.slice),
                s.label.clone(),
                round.to_string(),
                s.slice.round_label(round),
            ]
        };
        let key = |round: u32| (s.metric_name.clone(), s.slice, s.label.clone(), round);
        for p in &s.points {
            let mut row = base(p.round);
            row.extend([fmt6(p.value), p.n_samples.to_string(), String::new()]);
            rows.push((key(p.round), row));
        }
        for g in &s.gaps {
            let mut row = base(g.round);
            row.extend([String::new(), "0".to_owned(), g.reason.clone()]);
            rows.push((key(g.round), row));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let mut table = Table::new(name, SERIES_HEADER);
    table.rows = rows.into_iter().map(|(_, r)| r).collect();
    table
}

type SortKey = (String, SliceKey, String, u32);

pub fn rouge_table(name: &str, cells: &[RougeLSummaryCell]) -> Table {
    let mut table = Table::new(name, &["prompt_index", "k", "rounds", "avg_final", "max_final", "n_discussions"]);
    let mut cells = cells.to_vec();
    cells.sort_by_key(|c| (c.prompt_index, c.k, c.rounds));
    table.rows = cells
        .iter()
        .map(|c| {
            vec![
                c.prompt_index.to_string(),
                c.k.to_string(),
                c.rounds.to_string(),
                fmt6(c.avg_final),
                fmt6(c.max_final),
                c.n_discussions.to_string(),
            ]
        })
        .collect();
    table
}

pub fn influence_table(name: &str, matrices: &[InfluenceMatrix]) -> Table {
    let mut table = Table::new(name, &["k", "rounds", "round", "target", "source", "value", "n_samples"]);
    let mut sorted: Vec<&InfluenceMatrix> = matrices.iter().collect();
    sorted.sort_by_key(|m| (m.slice, m.round));
    for m in sorted {
        for (i, target) in m.agent_ids.iter().enumerate() {
            for (j, source) in m.agent_ids.iter().enumerate() {
                table.rows.push(vec![
                    m.slice.k.to_string(),
                    m.slice.rounds.to_string(),
                    m.round.to_string(),
                    target.clone(),
                    source.clone(),
                    m.values[i][j].map(fmt6).unwrap_or_default(),
                    m.n_samples[i][j].to_string(),
                ]);
            }
        }
    }
    table
}

/// Occupied grid cells only; absent cells have count zero.
pub fn grid_table(name: &str, grids: &[(SliceKey, Vec<RoundGrid>)]) -> Table {
    let mut table = Table::new(name, &["k", "rounds", "round", "x_bin", "y_bin", "count"]);
    let mut sorted: Vec<&(SliceKey, Vec<RoundGrid>)> = grids.iter().collect();
    sorted.sort_by_key(|(slice, _)| *slice);
    for (slice, round_grids) in sorted {
        for g in round_grids {
            for (x, y, count) in g.occupied() {
                table.rows.push(vec![
                    slice.k.to_string(),
                    slice.rounds.to_string(),
                    g.round.to_string(),
                    x.to_string(),
                    y.to_string(),
                    count.to_string(),
                ]);
            }
        }
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub artifact: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn entry(&self, artifact: &str) -> Option<&ManifestEntry> {
        self.artifacts.iter().find(|e| e.artifact == artifact)
    }

    pub fn load(dir: &Path) -> Result<Self, ReportError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ReportError::Io(format!("{}: {e}", path.display())))
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Writes every table plus `manifest.json`. Artifacts are listed sorted by
/// file name so identical inputs give identical bytes.
pub fn export(tables: &[Table], notes: &[String], out_dir: &Path) -> Result<Manifest, ReportError> {
    let io = |e: std::io::Error| ReportError::Io(format!("{}: {e}", out_dir.display()));
    fs::create_dir_all(out_dir).map_err(io)?;
    let mut manifest = Manifest {
        artifacts: Vec::with_capacity(tables.len()),
        notes: notes.to_vec(),
    };
    for table in tables {
        let bytes = table.to_csv()?;
        write_atomic(&out_dir.join(table.file_name()), &bytes).map_err(io)?;
        manifest.artifacts.push(ManifestEntry {
            artifact: table.file_name(),
            rows: table.rows.len(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    manifest.artifacts.sort_by(|a, b| a.artifact.cmp(&b.artifact));
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| ReportError::Io(e.to_string()))?;
    json.push(b'\n');
    write_atomic(&out_dir.join(MANIFEST_FILE), &json).map_err(io)?;
    Ok(manifest)
}
