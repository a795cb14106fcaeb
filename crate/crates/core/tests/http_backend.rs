use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use coding_convergence::backends::{
    AgentSpec, BackendError, ChatBackend, ChatMessage, Embedder, EmbeddingSpec, HttpChatBackend, HttpEmbedder,
    RetryPolicy, TurnRequest,
};
use coding_convergence::primitives::Phase;

/// Serves one canned `(status, body)` per connection and records request bodies.
fn serve(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Value>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut request = vec![0; length];
            reader.read_exact(&mut request).unwrap();
            log.lock().unwrap().push(serde_json::from_slice(&request).unwrap());
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 3,
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(10),
        jitter: false,
    }
}

fn agent(endpoint: &str) -> AgentSpec {
    AgentSpec {
        endpoint: endpoint.into(),
        ..AgentSpec::scripted("a", "test-model")
    }
}

fn turn() -> TurnRequest {
    TurnRequest {
        discussion_id: "d".into(),
        item_id: "c1".into(),
        phase: Phase::Initial,
        round: 0,
    }
}

fn completion(content: Value) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

#[test]
fn rate_limit_is_retried_and_reasoning_is_kept() {
    let (url, seen) = serve(vec![
        (429, "{\"error\":\"slow down\"}".into()),
        (200, completion(json!("<think>hmm</think> Trust erosion"))),
    ]);
    let backend = HttpChatBackend::new(fast_retry()).unwrap();
    let text = backend
        .chat_complete(&agent(&url), &turn(), &[ChatMessage::user("code this")])
        .unwrap();
    assert_eq!(text, "<think>hmm</think> Trust erosion");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    assert_eq!(seen[1]["model"], "test-model");
    assert_eq!(seen[1]["messages"][0]["content"], "code this");
    assert_eq!(seen[1]["max_tokens"], 256);
}

#[test]
fn empty_completion_is_an_error() {
    let (url, _) = serve(vec![(200, completion(json!("   ")))]);
    let backend = HttpChatBackend::new(fast_retry()).unwrap();
    let err = backend
        .chat_complete(&agent(&url), &turn(), &[ChatMessage::user("x")])
        .unwrap_err();
    assert_eq!(err, BackendError::EmptyCompletion);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen) = serve(vec![(401, "{\"error\":\"bad key\"}".into())]);
    let backend = HttpChatBackend::new(fast_retry()).unwrap();
    let err = backend
        .chat_complete(&agent(&url), &turn(), &[ChatMessage::user("x")])
        .unwrap_err();
    match err {
        BackendError::Provider { status, attempts, body_excerpt } => {
            assert_eq!((status, attempts), (401, 1));
            assert!(body_excerpt.contains("bad key"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn persistent_server_errors_exhaust_retries() {
    let (url, _) = serve(vec![(503, "{}".into()), (503, "{}".into()), (503, "{}".into())]);
    let backend = HttpChatBackend::new(fast_retry()).unwrap();
    let err = backend
        .chat_complete(&agent(&url), &turn(), &[ChatMessage::user("x")])
        .unwrap_err();
    assert!(matches!(err, BackendError::Provider { status: 503, attempts: 3, .. }), "{err:?}");
}

#[test]
fn embeddings_are_reordered_by_index_and_batched() {
    let (url, seen) = serve(vec![
        (200, json!({"data": [{"index": 1, "embedding": [0.0, 1.0]}, {"index": 0, "embedding": [1.0, 0.0]}]}).to_string()),
        (200, json!({"data": [{"index": 0, "embedding": [3.0, 4.0]}]}).to_string()),
    ]);
    let spec = EmbeddingSpec {
        provider_id: "mock".into(),
        model_name: "embed-small".into(),
        endpoint: url,
        api_key_env: String::new(),
        batch_size: 2,
    };
    let embedder = HttpEmbedder::new(spec, fast_retry()).unwrap();
    let texts: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let vectors = embedder.embed(&texts).unwrap();
    assert_eq!(vectors[0].values(), [1.0, 0.0]);
    assert_eq!(vectors[1].values(), [0.0, 1.0]);
    assert_eq!(vectors[2].values(), [3.0, 4.0]);
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0]["input"], json!(["a", "b"]));
    assert_eq!(seen[1]["input"], json!(["c"]));
}
