//! Multi-agent iterative coding discussions.
//!
//! A discussion has three phases. Every agent first proposes an initial code
//! from the prompt and the comment. Then, for `R` refinement rounds, agents
//! speak in a fixed cyclic order and each turn sees the prompt, the comment
//! and every one-sentence summary produced so far. Finally every agent gives
//! a synthesis code given the complete memory.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backends::{AgentSpec, BackendError, ChatBackend, ChatMessage, TurnRequest};
use crate::ingest::{CommentRecord, ItemSet};
use crate::primitives::{Code, Phase, Utterance};

/// The five reference prompt templates, in rotation order.
pub const REFERENCE_PROMPTS: [&str; 5] = [
    "A code is often a word or short phrase that symbolically assigns a salient, essence-capturing and/or evocative attribute to a portion of language-based or visual data. Perform thematic analysis on the following comment and generate a concise qualitative code.",
    "Summarize the main idea of this sentence in a short, thematic code.",
    "From the perspective of a social scientist, summarize the following sentence as you would in thematic coding.",
    "Can you tell me what the main idea of this sentence is in just a few words?",
    "If you were a social scientist doing thematic analysis, what code would you give to this citation?",
];

pub fn reference_prompts() -> Vec<String> {
    REFERENCE_PROMPTS.iter().map(|p| p.to_string()).collect()
}

pub const MEMORY_HEADER: &str = "Discussion so far:";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid_config: {0}")]
    InvalidConfig(String),
    #[error("prompt_out_of_range: index {index} with {available} prompt(s)")]
    PromptOutOfRange { index: usize, available: usize },
    #[error("discussion_aborted: {discussion_id}: {source}")]
    Aborted {
        discussion_id: String,
        partial: Box<Transcript>,
        #[source]
        source: BackendError,
    },
    #[error("invariant_violation: {0}")]
    Invariant(String),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::InvalidConfig(_) => "invalid_config",
            EngineError::PromptOutOfRange { .. } => "prompt_out_of_range",
            EngineError::Aborted { .. } => "discussion_aborted",
            EngineError::Invariant(_) => "invariant_violation",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartRotation {
    /// Starting speaker drawn from the discussion seed.
    #[default]
    Randomized,
    /// Agent 0 always starts.
    Fixed,
}

/// Instructions appended after the memory block. Neither mentions how many
/// rounds remain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextTemplate {
    pub refinement_instruction: String,
    pub synthesis_instruction: String,
}

impl Default for ContextTemplate {
    fn default() -> Self {
        Self {
            refinement_instruction: "Considering the discussion so far, propose your updated code.".into(),
            synthesis_instruction: "Given the full discussion, state your final code.".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub agents: Vec<AgentSpec>,
    pub rounds: u32,
    pub prompts: Vec<String>,
    pub items: ItemSet,
    pub seed: u64,
    pub start_rotation: StartRotation,
    pub template: ContextTemplate,
}

impl SimulationConfig {
    pub fn new(agents: Vec<AgentSpec>, rounds: u32, items: ItemSet) -> Self {
        Self {
            agents,
            rounds,
            prompts: reference_prompts(),
            items,
            seed: 0,
            start_rotation: StartRotation::default(),
            template: ContextTemplate::default(),
        }
    }

    pub fn group_size(&self) -> usize {
        self.agents.len()
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.agents.len() < 2 {
            return Err(EngineError::InvalidConfig(format!(
                "a discussion needs at least 2 agents, got {}",
                self.agents.len()
            )));
        }
        if self.rounds < 1 {
            return Err(EngineError::InvalidConfig("rounds must be at least 1".into()));
        }
        if self.prompts.is_empty() || self.prompts.iter().any(|p| p.trim().is_empty()) {
            return Err(EngineError::InvalidConfig("prompts must be non-empty".into()));
        }
        let mut seen = HashSet::new();
        for agent in &self.agents {
            agent
                .validate(false)
                .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
            if !seen.insert(agent.agent_id.as_str()) {
                return Err(EngineError::InvalidConfig(format!("duplicate agent_id {:?}", agent.agent_id)));
            }
        }
        Ok(())
    }

    /// Directory-safe identifier: group size, round count and a short hash of
    /// the agent roster so distinct rosters never collide.
    pub fn slug(&self) -> String {
        config_slug(
            &self
                .agents
                .iter()
                .map(|a| AgentRef {
                    agent_id: a.agent_id.clone(),
                    model_name: a.model_name.clone(),
                })
                .collect::<Vec<_>>(),
            self.rounds,
        )
    }
}

pub fn config_slug(agents: &[AgentRef], rounds: u32) -> String {
    let mut hasher = Sha256::new();
    for agent in agents {
        hasher.update((agent.agent_id.len() as u64).to_le_bytes());
        hasher.update(agent.agent_id.as_bytes());
        hasher.update((agent.model_name.len() as u64).to_le_bytes());
        hasher.update(agent.model_name.as_bytes());
    }
    let digest = hex::encode(hasher.finalize());
    format!("k{}_r{}_{}", agents.len(), rounds, &digest[..8])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub agent_id: String,
    pub round: u32,
    pub summary: String,
}

/// Append-only conversational memory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Memory {
    entries: Vec<MemoryEntry>,
}

impl Memory {
    pub fn push(&mut self, agent_id: &str, round: u32, summary: String) {
        self.entries.push(MemoryEntry {
            agent_id: agent_id.to_owned(),
            round,
            summary,
        });
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::from(MEMORY_HEADER);
        for entry in &self.entries {
            out.push('\n');
            out.push_str(&entry.agent_id);
            out.push_str(": ");
            out.push_str(&entry.summary);
        }
        out
    }
}

/// Context shown to an agent: prompt, comment, then the memory block and the
/// phase instruction when memory exists.
pub fn render_context(prompt: &str, comment: &str, memory: Option<(&Memory, &str)>) -> String {
    let mut out = format!("{prompt}\n\n{comment}");
    if let Some((memory, instruction)) = memory {
        out.push_str("\n\n");
        out.push_str(&memory.render());
        if !instruction.is_empty() {
            out.push_str("\n\n");
            out.push_str(instruction);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRef {
    pub agent_id: String,
    pub model_name: String,
}

/// Full record of one discussion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub discussion_id: String,
    pub item_id: String,
    pub prompt_index: usize,
    pub start_agent_index: usize,
    pub agents: Vec<AgentRef>,
    pub rounds: u32,
    pub incomplete: bool,
    pub utterances: Vec<Utterance>,
    pub final_codes: BTreeMap<String, String>,
}

impl Transcript {
    pub fn group_size(&self) -> usize {
        self.agents.len()
    }

    /// Index of the synthesis round, `R + 1`.
    pub fn final_round(&self) -> u32 {
        self.rounds + 1
    }

    pub fn slug(&self) -> String {
        config_slug(&self.agents, self.rounds)
    }

    pub fn agent_ids(&self) -> Vec<&str> {
        self.agents.iter().map(|a| a.agent_id.as_str()).collect()
    }

    pub fn utterance(&self, agent_id: &str, round: u32) -> Option<&Utterance> {
        self.utterances
            .iter()
            .find(|u| u.agent_id == agent_id && u.round == round)
    }

    pub fn code(&self, agent_id: &str, round: u32) -> Option<Code> {
        self.utterance(agent_id, round).map(Utterance::code)
    }

    /// Codes at `round`, in roster order, skipping agents without one.
    pub fn codes_at(&self, round: u32) -> Vec<Code> {
        self.agents
            .iter()
            .filter_map(|a| self.code(&a.agent_id, round))
            .collect()
    }

    pub fn final_code(&self, agent_id: &str) -> Option<Code> {
        self.final_codes
            .get(agent_id)
            .map(|text| Code::new(text.clone(), agent_id, self.final_round()))
    }

    /// Speaking order of refinement rounds.
    pub fn turn_order(&self) -> Vec<usize> {
        rotation(self.agents.len(), self.start_agent_index)
    }

    /// Checks the structural laws of a complete transcript.
    pub fn check_invariants(&self) -> Result<(), EngineError> {
        let k = self.agents.len();
        let expected = k * (self.rounds as usize + 2);
        let fail = |msg: String| Err(EngineError::Invariant(format!("{}: {msg}", self.discussion_id)));
        if self.utterances.len() != expected {
            return fail(format!("{} utterances, expected {expected}", self.utterances.len()));
        }
        if self
            .utterances
            .windows(2)
            .any(|w| w[1].round < w[0].round)
        {
            return fail("rounds are not ordered".into());
        }
        let order = self.turn_order();
        for round in 0..=self.final_round() {
            let speakers: Vec<&str> = self
                .utterances
                .iter()
                .filter(|u| u.round == round)
                .map(|u| u.agent_id.as_str())
                .collect();
            let expected_order: Vec<&str> = if round == 0 {
                self.agents.iter().map(|a| a.agent_id.as_str()).collect()
            } else {
                order.iter().map(|&i| self.agents[i].agent_id.as_str()).collect()
            };
            if speakers != expected_order {
                return fail(format!("round {round} speakers {speakers:?}, expected {expected_order:?}"));
            }
        }
        for u in &self.utterances {
            if !u.phase.accepts_round(u.round, self.rounds) {
                return fail(format!("phase {} at round {}", u.phase, u.round));
            }
            if u.phase != Phase::Synthesis && u.summary.is_empty() {
                return fail(format!("{} round {} has an empty summary", u.agent_id, u.round));
            }
        }
        if self.final_codes.len() != k {
            return fail(format!("{} final codes for {k} agents", self.final_codes.len()));
        }
        Ok(())
    }
}

fn rotation(k: usize, start: usize) -> Vec<usize> {
    (0..k).map(|i| (start + i) % k).collect()
}

/// Per-discussion seed derived from the run seed, roster shape and item index.
pub fn discussion_seed(seed: u64, group_size: usize, rounds: u32, item_index: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((group_size as u64).to_le_bytes());
    hasher.update(u64::from(rounds).to_le_bytes());
    hasher.update((item_index as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

pub fn start_agent_index(mode: StartRotation, group_size: usize, discussion_seed: u64) -> usize {
    match mode {
        StartRotation::Fixed => 0,
        StartRotation::Randomized => ChaCha8Rng::seed_from_u64(discussion_seed).random_range(0..group_size),
    }
}

struct DiscussionState<'a> {
    backend: &'a dyn ChatBackend,
    transcript: Transcript,
    memory: Memory,
}

impl DiscussionState<'_> {
    fn turn(&self, phase: Phase, round: u32) -> TurnRequest {
        TurnRequest {
            discussion_id: self.transcript.discussion_id.clone(),
            item_id: self.transcript.item_id.clone(),
            phase,
            round,
        }
    }

    fn speak(
        &mut self,
        agent: &AgentSpec,
        phase: Phase,
        round: u32,
        context: String,
    ) -> Result<(), BackendError> {
        let turn = self.turn(phase, round);
        let raw_text = self
            .backend
            .chat_complete(agent, &turn, &[ChatMessage::user(context)])?;
        let summary = if phase == Phase::Synthesis {
            String::new()
        } else {
            let summary = self.backend.summarize_turn(agent, &turn, &raw_text)?;
            if summary.trim().is_empty() {
                return Err(BackendError::EmptyCompletion);
            }
            summary
        };
        if phase == Phase::Synthesis {
            self.transcript
                .final_codes
                .insert(agent.agent_id.clone(), raw_text.trim().to_owned());
        }
        self.transcript.utterances.push(Utterance {
            agent_id: agent.agent_id.clone(),
            phase,
            round,
            raw_text,
            summary,
        });
        Ok(())
    }
}

/// Runs one discussion. Backend failures abort it and return the partial
/// transcript, flagged incomplete, inside [`EngineError::Aborted`].
pub fn run_discussion(
    config: &SimulationConfig,
    backend: &dyn ChatBackend,
    item: &CommentRecord,
    prompt_index: usize,
    discussion_seed: u64,
) -> Result<Transcript, EngineError> {
    config.validate()?;
    let prompt = config
        .prompts
        .get(prompt_index)
        .ok_or(EngineError::PromptOutOfRange {
            index: prompt_index,
            available: config.prompts.len(),
        })?;
    let k = config.group_size();
    let start = start_agent_index(config.start_rotation, k, discussion_seed);
    let slug = config.slug();
    let transcript = Transcript {
        discussion_id: format!("{slug}/{}/{prompt_index}", item.id),
        item_id: item.id.clone(),
        prompt_index,
        start_agent_index: start,
        agents: config
            .agents
            .iter()
            .map(|a| AgentRef {
                agent_id: a.agent_id.clone(),
                model_name: a.model_name.clone(),
            })
            .collect(),
        rounds: config.rounds,
        incomplete: false,
        utterances: Vec::with_capacity(k * (config.rounds as usize + 2)),
        final_codes: BTreeMap::new(),
    };
    let mut state = DiscussionState {
        backend,
        transcript,
        memory: Memory::default(),
    };

    let outcome = (|| {
        let initial_context = render_context(prompt, &item.text, None);
        for agent in &config.agents {
            state.speak(agent, Phase::Initial, 0, initial_context.clone())?;
        }
        for u in &state.transcript.utterances {
            state.memory.push(&u.agent_id, 0, u.summary.clone());
        }

        let order = rotation(k, start);
        for round in 1..=config.rounds {
            for &i in &order {
                let agent = &config.agents[i];
                let context = render_context(
                    prompt,
                    &item.text,
                    Some((&state.memory, &config.template.refinement_instruction)),
                );
                state.speak(agent, Phase::Refinement, round, context)?;
                let summary = state
                    .transcript
                    .utterances
                    .last()
                    .expect("speak pushed an utterance")
                    .summary
                    .clone();
                state.memory.push(&agent.agent_id, round, summary);
            }
        }

        let synthesis_context = render_context(
            prompt,
            &item.text,
            Some((&state.memory, &config.template.synthesis_instruction)),
        );
        for &i in &order {
            state.speak(&config.agents[i], Phase::Synthesis, config.rounds + 1, synthesis_context.clone())?;
        }
        Ok::<(), BackendError>(())
    })();

    let mut transcript = state.transcript;
    match outcome {
        Ok(()) => {
            transcript.check_invariants()?;
            Ok(transcript)
        }
        Err(source) => {
            transcript.incomplete = true;
            Err(EngineError::Aborted {
                discussion_id: transcript.discussion_id.clone(),
                partial: Box::new(transcript),
                source,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub discussions_attempted: usize,
    pub completed: usize,
    pub failed: usize,
    pub utterances_total: usize,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscussionFailure {
    pub discussion_id: String,
    pub error_code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// Complete and incomplete transcripts, sorted by config then item index.
    pub transcripts: Vec<Transcript>,
    pub failures: Vec<DiscussionFailure>,
    pub report: RunReport,
}

impl GridOutcome {
    pub fn complete(&self) -> impl Iterator<Item = &Transcript> {
        self.transcripts.iter().filter(|t| !t.incomplete)
    }
}

/// Default worker count: one per discussion, capped at 8.
pub fn default_workers(discussions: usize) -> usize {
    discussions.clamp(1, 8)
}

/// Runs every (config, item) discussion. Discussion `i` of a config uses
/// prompt `i mod |prompts|`. Failures are collected, never fatal.
pub fn run_grid(
    configs: &[SimulationConfig],
    backend: &dyn ChatBackend,
    workers: Option<usize>,
) -> Result<GridOutcome, EngineError> {
    for config in configs {
        config.validate()?;
    }
    let started = Instant::now();
    let jobs: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, config)| (0..config.items.len()).map(move |i| (c, i)))
        .collect();
    let workers = workers.unwrap_or_else(|| default_workers(jobs.len())).max(1);

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Transcript, EngineError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let run_job = |job: usize| {
        let (c, i) = jobs[job];
        let config = &configs[c];
        let seed = discussion_seed(config.seed, config.group_size(), config.rounds, i);
        run_discussion(config, backend, &config.items.items[i], i % config.prompts.len(), seed)
    };
    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let job = next.fetch_add(1, Ordering::Relaxed);
                if job >= jobs.len() {
                    break;
                }
                let result = run_job(job);
                results.lock().expect("results lock poisoned")[job] = Some(result);
            });
        }
    });

    let mut outcome = GridOutcome {
        transcripts: Vec::with_capacity(jobs.len()),
        failures: Vec::new(),
        report: RunReport {
            discussions_attempted: jobs.len(),
            ..RunReport::default()
        },
    };
    for result in results.into_inner().expect("results lock poisoned") {
        match result.expect("every job ran") {
            Ok(t) => {
                outcome.report.completed += 1;
                outcome.report.utterances_total += t.utterances.len();
                outcome.transcripts.push(t);
            }
            Err(EngineError::Aborted {
                discussion_id,
                partial,
                source,
            }) => {
                outcome.report.failed += 1;
                outcome.report.utterances_total += partial.utterances.len();
                outcome.failures.push(DiscussionFailure {
                    discussion_id,
                    error_code: source.code().to_owned(),
                    message: source.to_string(),
                });
                outcome.transcripts.push(*partial);
            }
            Err(other) => return Err(other),
        }
    }
    outcome.report.wall_time_seconds = started.elapsed().as_secs_f64();
    Ok(outcome)
}
