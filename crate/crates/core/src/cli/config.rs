//! Run configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::backends::{
    AgentSpec, ChatBackend, Embedder, EmbeddingSpec, HttpChatBackend, HttpEmbedder, RetryPolicy, ScriptedBackend,
    ScriptedEmbedder,
};
use crate::engine::{reference_prompts, ContextTemplate, SimulationConfig, StartRotation};
use crate::geometry::{CacheFormat, CachedEmbedder};
use crate::ingest::{filter_items, load_comments, CommentRecord, FilterOptions, ItemSet, LoadOptions, LoadReport, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub group_sizes: Vec<usize>,
    pub round_counts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineComment {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub score: Option<f64>,
}

fn default_text_column() -> String {
    "text".into()
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Delimited file with a header row. Exactly one of `path` and `inline`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub inline: Option<Vec<InlineComment>>,
    #[serde(default = "default_text_column")]
    pub text_column: String,
    #[serde(default)]
    pub id_column: Option<String>,
    #[serde(default)]
    pub score_column: Option<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub min_words: usize,
    #[serde(default)]
    pub min_score: Option<f64>,
    /// Number of comments to keep. Sampling is by descending score when a
    /// score column is configured, uniform otherwise; `sample` overrides.
    #[serde(default)]
    pub n_items: Option<usize>,
    #[serde(default)]
    pub sample: Option<Sample>,
    #[serde(default)]
    pub sample_seed: u64,
}

/// Scripted plans are either a path to a plan file or the plan object itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanSource {
    Path(PathBuf),
    Inline(BTreeMap<String, BTreeMap<String, String>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Scripted {
        plans: PlanSource,
    },
    Http {
        #[serde(default)]
        retry: RetryPolicy,
        #[serde(default)]
        summary_instruction: Option<String>,
        #[serde(default)]
        timeout_seconds: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: CacheFormat,
}

fn default_scripted_provider() -> String {
    "scripted-hash".into()
}

fn default_dim() -> usize {
    crate::backends::scripted::DEFAULT_EMBEDDING_DIM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    Scripted {
        #[serde(default = "default_scripted_provider")]
        provider_id: String,
        #[serde(default = "default_dim")]
        dim: usize,
        /// Fixed vectors for specific texts; everything else is hashed.
        #[serde(default)]
        table: BTreeMap<String, Vec<f64>>,
        #[serde(default)]
        cache: Option<CacheConfig>,
    },
    Http {
        #[serde(flatten)]
        spec: EmbeddingSpec,
        #[serde(default)]
        retry: RetryPolicy,
        #[serde(default)]
        cache: Option<CacheConfig>,
    },
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig::Scripted {
            provider_id: default_scripted_provider(),
            dim: default_dim(),
            table: BTreeMap::new(),
            cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Roster; a group of size `k` uses the first `k` agents.
    pub agents: Vec<AgentSpec>,
    pub grid: GridSpec,
    #[serde(default)]
    pub prompts: Option<Vec<String>>,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub start_rotation: StartRotation,
    #[serde(default)]
    pub template: Option<ContextTemplate>,
    pub backend: BackendConfig,
    #[serde(default)]
    pub embedding: Option<EmbeddingConfig>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_owned()
    } else {
        base.join(p)
    }
}

impl RunConfigFile {
    /// Parses a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut config: RunConfigFile =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.output_dir = resolve(base, &config.output_dir);
        if let Some(p) = &config.dataset.path {
            config.dataset.path = Some(resolve(base, p));
        }
        if let BackendConfig::Scripted {
            plans: PlanSource::Path(p),
        } = &mut config.backend
        {
            *p = resolve(base, p);
        }
        if let Some(
            EmbeddingConfig::Scripted { cache: Some(c), .. } | EmbeddingConfig::Http { cache: Some(c), .. },
        ) = &mut config.embedding
        {
            c.path = resolve(base, &c.path);
        }
        Ok(config)
    }

    pub fn load_items(&self) -> Result<(ItemSet, Option<LoadReport>), String> {
        let d = &self.dataset;
        let (set, report) = match (&d.path, &d.inline) {
            (Some(path), None) => {
                if !d.delimiter.is_ascii() {
                    return Err(format!("delimiter {:?} must be a single ASCII character", d.delimiter));
                }
                let options = LoadOptions {
                    text_column: d.text_column.clone(),
                    score_column: d.score_column.clone(),
                    id_column: d.id_column.clone(),
                    delimiter: d.delimiter as u8,
                };
                let (set, report) = load_comments(path, &options).map_err(|e| e.to_string())?;
                (set, Some(report))
            }
            (None, Some(rows)) => {
                let records = rows
                    .iter()
                    .map(|r| CommentRecord::new(r.id.clone(), r.text.clone(), r.score))
                    .collect();
                (ItemSet::new(records, "inline").map_err(|e| e.to_string())?, None)
            }
            _ => return Err("dataset needs exactly one of \"path\" and \"inline\"".into()),
        };
        let sample = d.sample.or(d.n_items.map(|n| {
            if d.score_column.is_some() {
                Sample::TopScore { n }
            } else {
                Sample::Uniform { n, seed: d.sample_seed }
            }
        }));
        let filter = FilterOptions {
            min_words: d.min_words,
            min_score: d.min_score,
            sample,
        };
        let set = filter_items(&set, &filter).map_err(|e| e.to_string())?;
        if set.is_empty() {
            return Err("no comments survive dataset filtering".into());
        }
        Ok((set, report))
    }

    /// One simulation config per `(k, R)` grid cell, validated.
    pub fn simulation_configs(&self, items: &ItemSet) -> Result<Vec<SimulationConfig>, String> {
        let require_endpoint = matches!(self.backend, BackendConfig::Http { .. });
        for agent in &self.agents {
            agent.validate(require_endpoint).map_err(|e| e.to_string())?;
        }
        if self.grid.group_sizes.is_empty() || self.grid.round_counts.is_empty() {
            return Err("grid.group_sizes and grid.round_counts must be non-empty".into());
        }
        let prompts = self.prompts.clone().unwrap_or_else(reference_prompts);
        let mut out = Vec::new();
        for &k in &self.grid.group_sizes {
            if k > self.agents.len() {
                return Err(format!("group size {k} exceeds the {} configured agents", self.agents.len()));
            }
            for &rounds in &self.grid.round_counts {
                let mut config = SimulationConfig::new(self.agents[..k].to_vec(), rounds, items.clone());
                config.prompts = prompts.clone();
                config.seed = self.seed;
                config.start_rotation = self.start_rotation;
                if let Some(t) = &self.template {
                    config.template = t.clone();
                }
                config.validate().map_err(|e| e.to_string())?;
                out.push(config);
            }
        }
        if let Some(0) = self.workers {
            return Err("workers must be positive".into());
        }
        Ok(out)
    }

    pub fn chat_backend(&self) -> Result<Box<dyn ChatBackend>, String> {
        match &self.backend {
            BackendConfig::Scripted { plans } => {
                let backend = match plans {
                    PlanSource::Path(p) => ScriptedBackend::from_path(p),
                    PlanSource::Inline(map) => {
                        ScriptedBackend::from_json_str(&serde_json::to_string(map).expect("plan map serializes"))
                    }
                }
                .map_err(|e| e.to_string())?;
                if let Some(a) = self.agents.iter().find(|a| backend.plan(&a.agent_id).is_none()) {
                    return Err(format!("no scripted plan for agent {:?}", a.agent_id));
                }
                Ok(Box::new(backend))
            }
            BackendConfig::Http {
                retry,
                summary_instruction,
                timeout_seconds,
            } => {
                let mut backend = HttpChatBackend::new(retry.clone()).map_err(|e| e.to_string())?;
                if let Some(s) = summary_instruction {
                    backend = backend.with_summary_instruction(s.clone());
                }
                if let Some(t) = timeout_seconds {
                    backend = backend.with_timeout(Duration::from_secs(*t)).map_err(|e| e.to_string())?;
                }
                Ok(Box::new(backend))
            }
        }
    }
}

impl EmbeddingConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        // Accept either a bare embedding block or a run config containing one.
        let block = match value.get("embedding") {
            Some(inner) if value.get("agents").is_some() => inner.clone(),
            _ => value,
        };
        let mut config: EmbeddingConfig =
            serde_json::from_value(block).map_err(|e| format!("{}: embedding: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let EmbeddingConfig::Scripted { cache: Some(c), .. } | EmbeddingConfig::Http { cache: Some(c), .. } =
            &mut config
        {
            c.path = resolve(base, &c.path);
        }
        Ok(config)
    }

    pub fn build(&self) -> Result<Box<dyn Embedder>, String> {
        fn cached<E: Embedder + 'static>(inner: E, cache: &Option<CacheConfig>) -> Result<Box<dyn Embedder>, String> {
            Ok(match cache {
                None => Box::new(inner),
                Some(c) => Box::new(CachedEmbedder::open(inner, &c.path, c.format).map_err(|e| e.to_string())?),
            })
        }
        match self {
            EmbeddingConfig::Scripted {
                provider_id,
                dim,
                table,
                cache,
            } => {
                if *dim == 0 {
                    return Err("embedding dim must be positive".into());
                }
                let mut e = ScriptedEmbedder::new(provider_id.clone(), *dim);
                for (text, values) in table {
                    e.insert(text.clone(), values.clone()).map_err(|e| e.to_string())?;
                }
                cached(e, cache)
            }
            EmbeddingConfig::Http { spec, retry, cache } => {
                cached(HttpEmbedder::new(spec.clone(), retry.clone()).map_err(|e| e.to_string())?, cache)
            }
        }
    }
}
