//! One discussion against an OpenAI-compatible server.
//!
//! COCONV_ENDPOINT=http://localhost:11434/v1 COCONV_MODELS=llama3.1,mistral \
//!     cargo run --example http_agents
//!
//! Set COCONV_API_KEY when the server wants a bearer token.

use coding_convergence::backends::{AgentSpec, HttpChatBackend, RetryPolicy};
use coding_convergence::engine::{run_discussion, SimulationConfig};
use coding_convergence::ingest::{CommentRecord, ItemSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Ok(endpoint) = std::env::var("COCONV_ENDPOINT") else {
        eprintln!("set COCONV_ENDPOINT (and optionally COCONV_MODELS, COCONV_API_KEY)");
        return Ok(());
    };
    let models = std::env::var("COCONV_MODELS").unwrap_or_else(|_| "llama3.1,mistral".into());
    let agents: Vec<AgentSpec> = models
        .split(',')
        .map(|m| AgentSpec {
            endpoint: endpoint.clone(),
            api_key_env: "COCONV_API_KEY".into(),
            ..AgentSpec::scripted(m.trim(), m.trim())
        })
        .collect();
    let items = ItemSet::new(
        vec![CommentRecord::new("c1", "Nobody in that office has ever answered a single email from us.", None)],
        "inline",
    )?;
    let config = SimulationConfig::new(agents, 1, items);
    config.validate()?;
    let backend = HttpChatBackend::new(RetryPolicy::default())?;
    let transcript = run_discussion(&config, &backend, &config.items.items[0], 0, 7)?;
    for u in &transcript.utterances {
        println!("[{} {} R{}] {}\n  summary: {}\n", u.phase.as_str(), u.agent_id, u.round, u.raw_text.trim(), u.summary);
    }
    Ok(())
}
