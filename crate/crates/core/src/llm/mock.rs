//! Offline chat-completions server that replays a script.
//!
//! A script is JSON lines. Each entry may carry a `key` (the hex SHA-256 of
//! a request body, see [`request_hash`](super::prompt::request_hash)); keyed
//! entries answer matching requests in order. Unkeyed entries form a queue
//! consumed by any request without a pending keyed answer. When nothing is
//! left the server answers 500.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use super::prompt::request_hash;
use crate::error::{IoContext, LofError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(default = "ok_status")]
    pub status: u16,
    /// Completion text for a 200 answer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    /// Raw body sent verbatim instead of a generated completion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_ms: Option<u64>,
}

fn ok_status() -> u16 {
    200
}

impl ScriptEntry {
    pub fn completion(content: impl Into<String>) -> Self {
        Self {
            key: None,
            status: 200,
            content: Some(content.into()),
            raw_body: None,
            delay_ms: None,
        }
    }

    pub fn status(status: u16) -> Self {
        Self {
            key: None,
            status,
            content: None,
            raw_body: None,
            delay_ms: None,
        }
    }

    pub fn keyed(mut self, key: impl Into<String>) -> Self {
        self.key = Some(key.into());
        self
    }
}

pub fn parse_script(text: &str, origin: &Path) -> Result<Vec<ScriptEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| LofError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn load_script(path: &Path) -> Result<Vec<ScriptEntry>> {
    let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
    parse_script(&text, path)
}

pub fn script_to_jsonl(entries: &[ScriptEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("script entry serializes") + "\n")
        .collect()
}

#[derive(Default)]
struct Replay {
    keyed: HashMap<String, VecDeque<ScriptEntry>>,
    sequence: VecDeque<ScriptEntry>,
    served: u64,
    request_keys: Vec<String>,
}

type Shared = Arc<Mutex<Replay>>;

pub struct MockServer {
    addr: SocketAddr,
    state: Shared,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds `addr` (port 0 picks a free port) and serves in the background
    /// on the current tokio runtime.
    pub async fn start(addr: SocketAddr, script: Vec<ScriptEntry>) -> Result<Self> {
        let mut replay = Replay::default();
        for entry in script {
            match &entry.key {
                Some(k) => replay.keyed.entry(k.clone()).or_default().push_back(entry),
                None => replay.sequence.push_back(entry),
            }
        }
        let state: Shared = Arc::new(Mutex::new(replay));
        let app = Router::new()
            .route("/chat/completions", post(handle))
            .route("/v1/chat/completions", post(handle))
            .with_state(state.clone());
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .io_context(|| format!("binding {addr}"))?;
        let addr = listener
            .local_addr()
            .io_context(|| "reading bound address".into())?;
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(Self {
            addr,
            state,
            shutdown: Some(tx),
            task: Some(task),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Number of requests answered so far.
    pub fn served(&self) -> u64 {
        self.state.lock().unwrap().served
    }

    /// Body hashes of every request received, in arrival order.
    pub fn request_keys(&self) -> Vec<String> {
        self.state.lock().unwrap().request_keys.clone()
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }

    /// Serves until the task ends (for the CLI).
    pub async fn wait(mut self) {
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

async fn handle(State(state): State<Shared>, body: Bytes) -> Response {
    let key = request_hash(&body);
    let entry = {
        let mut replay = state.lock().unwrap();
        replay.served += 1;
        let n = replay.served;
        replay.request_keys.push(key.clone());
        let keyed = replay.keyed.get_mut(&key).and_then(|q| q.pop_front());
        keyed.or_else(|| replay.sequence.pop_front()).map(|e| (e, n))
    };
    let Some((entry, n)) = entry else {
        return (
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({"error": {"message": "replay script exhausted"}}).to_string(),
        )
            .into_response();
    };
    if let Some(ms) = entry.delay_ms {
        tokio::time::sleep(Duration::from_millis(ms)).await;
    }
    let status = StatusCode::from_u16(entry.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    let body = if let Some(raw) = entry.raw_body {
        raw
    } else if status.is_success() {
        json!({
            "id": format!("mock-{n}"),
            "object": "chat.completion",
            "model": "mock",
            "choices": [{
                "index": 0,
                "message": {"role": "assistant", "content": entry.content.unwrap_or_default()},
                "finish_reason": "stop"
            }]
        })
        .to_string()
    } else {
        json!({"error": {"message": format!("scripted status {}", entry.status)}}).to_string()
    };
    (status, [("content-type", "application/json")], body).into_response()
}
