//! A recording chat-completion server bound to an ephemeral local port.

use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::HeaderMap;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct Recorded {
    pub authorization: Option<String>,
    pub body: Value,
}

#[derive(Clone)]
struct StubState {
    reply: String,
    log: Arc<Mutex<Vec<Recorded>>>,
}

pub struct StubBackend {
    pub endpoint: String,
    pub log: Arc<Mutex<Vec<Recorded>>>,
}

async fn complete(State(state): State<StubState>, headers: HeaderMap, Json(body): Json<Value>) -> Json<Value> {
    let authorization = headers.get("authorization").and_then(|v| v.to_str().ok()).map(str::to_string);
    state.log.lock().unwrap().push(Recorded { authorization, body });
    Json(json!({ "choices": [{ "message": { "role": "assistant", "content": state.reply } }] }))
}

/// Starts the stub on the current runtime; every request gets `reply`.
pub async fn start(reply: &str) -> StubBackend {
    let log = Arc::new(Mutex::new(Vec::new()));
    let state = StubState { reply: reply.to_string(), log: Arc::clone(&log) };
    let app = Router::new().route("/v1/chat/completions", post(complete)).with_state(state);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    StubBackend { endpoint: format!("http://{addr}/v1/chat/completions"), log }
}

/// An endpoint on a port nobody listens on.
pub fn dead_endpoint() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}/v1/chat/completions")
}
