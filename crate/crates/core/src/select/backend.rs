use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::parse::{parse_selection_mode, Annotation, ParseMode};
use super::prompt::PromptBundle;
use super::SelectError;
use crate::cutlist::CutList;
use crate::timestamp::Timestamp;
use crate::transcript::Transcript;

/// One chat-style request: system and user messages, optionally with a video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video: Option<PathBuf>,
}

impl ChatRequest {
    pub fn from_bundle(b: &PromptBundle) -> Self {
        ChatRequest {
            system: b.system_text.clone(),
            user: b.user_text.clone(),
            video: None,
        }
    }

    pub fn with_video(mut self, path: impl Into<PathBuf>) -> Self {
        self.video = Some(path.into());
        self
    }
}

/// Hex SHA-256 over the system and user messages; keys mock responses.
pub fn prompt_hash(req: &ChatRequest) -> String {
    let mut h = Sha256::new();
    h.update(req.system.as_bytes());
    h.update(b"\n\n");
    h.update(req.user.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    /// Connection reset, 5xx and similar; worth retrying.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("rate limited: {message}")]
    RateLimited {
        message: String,
        retry_after: Option<Duration>,
    },
    /// Bad credentials, malformed request; retrying will not help.
    #[error("backend rejected request: {0}")]
    Fatal(String),
}

pub trait LlmBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    fn delay(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Audit record of one selection exchange, written before parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub backend_id: String,
    pub prompt_hash: String,
    pub request: ChatRequest,
    pub raw: Option<String>,
    pub retries: u32,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResponse {
    pub raw: String,
    pub parsed: Option<CutList>,
    pub annotations: Vec<Annotation>,
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
}

fn write_audit(path: &Path, ex: &Exchange) -> Result<(), SelectError> {
    let body = serde_json::to_vec_pretty(ex).map_err(|e| SelectError::Audit(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, body)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| SelectError::Audit(format!("{}: {e}", path.display())))
}

/// Sends a selection request with bounded retries, persists the exchange to
/// `audit` (if given) before interpreting it, then parses the response.
///
/// Parse failures are reported inside the response (`parsed` is `None`);
/// only transport failures are errors.
pub fn request_selection(
    req: &ChatRequest,
    backend: &dyn LlmBackend,
    policy: RetryPolicy,
    transcript: &Transcript,
    source_duration: Timestamp,
    mode: ParseMode,
    audit: Option<&Path>,
) -> Result<SelectionResponse, SelectError> {
    let mut errors = Vec::new();
    let mut retries = 0;
    let raw = loop {
        match backend.complete(req) {
            Ok(raw) => break Ok(raw),
            Err(e) => {
                tracing::warn!(backend = backend.id(), retry = retries, "selection request failed: {e}");
                errors.push(e.to_string());
                let retryable = !matches!(e, LlmError::Fatal(_));
                if !retryable || retries >= policy.max_retries {
                    break Err(e);
                }
                let wait = match &e {
                    LlmError::RateLimited {
                        retry_after: Some(d),
                        ..
                    } => (*d).min(policy.max_delay),
                    _ => policy.delay(retries),
                };
                std::thread::sleep(wait);
                retries += 1;
            }
        }
    };
    let exchange = Exchange {
        backend_id: backend.id().to_string(),
        prompt_hash: prompt_hash(req),
        request: req.clone(),
        raw: raw.as_ref().ok().cloned(),
        retries,
        errors,
    };
    if let Some(path) = audit {
        write_audit(path, &exchange)?;
    }
    let raw = raw.map_err(|e| SelectError::BackendUnavailable {
        attempts: retries + 1,
        message: e.to_string(),
    })?;
    let (parsed, annotations, parse_error) =
        match parse_selection_mode(&raw, transcript, source_duration, mode) {
            Ok(p) => (Some(p.cutlist), p.annotations, None),
            Err(e) => (None, Vec::new(), Some(e.to_string())),
        };
    Ok(SelectionResponse {
        raw,
        parsed,
        annotations,
        retries,
        parse_error,
    })
}

/// Replays a fixed sequence of outcomes; the last one repeats.
#[derive(Debug)]
pub struct ScriptedLlm {
    id: String,
    script: Mutex<VecDeque<Result<String, LlmError>>>,
    calls: Mutex<Vec<ChatRequest>>,
}

impl ScriptedLlm {
    pub fn new(script: impl IntoIterator<Item = Result<String, LlmError>>) -> Self {
        ScriptedLlm {
            id: "scripted".into(),
            script: Mutex::new(script.into_iter().collect()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn always(raw: impl Into<String>) -> Self {
        ScriptedLlm::new([Ok(raw.into())])
    }

    pub fn calls(&self) -> Vec<ChatRequest> {
        self.calls.lock().expect("lock").clone()
    }
}

impl LlmBackend for ScriptedLlm {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        self.calls.lock().expect("lock").push(req.clone());
        let mut script = self.script.lock().expect("lock");
        match script.len() {
            0 => Err(LlmError::Fatal("script exhausted".into())),
            1 => script.front().cloned().expect("non-empty"),
            _ => script.pop_front().expect("non-empty"),
        }
    }
}

/// File-backed offline backend.
///
/// Looks up `<dir>/<prompt-hash>.txt`, then `<dir>/default.txt`. Without a
/// matching file it answers deterministically from the prompt itself: evenly
/// spread transcript lines quoted verbatim, or evenly spread ranges of the
/// attached video, within the stated budget.
#[derive(Debug, Clone, Default)]
pub struct MockLlm {
    dir: Option<PathBuf>,
}

impl MockLlm {
    pub fn new(dir: Option<PathBuf>) -> Self {
        MockLlm { dir }
    }

    fn budget_secs(user: &str) -> f64 {
        user.lines()
            .find_map(|l| {
                let rest = l.split("must not exceed ").nth(1)?;
                rest.split_whitespace().next()?.parse::<f64>().ok()
            })
            .unwrap_or(180.0)
    }

    fn synthesize(req: &ChatRequest) -> String {
        let budget = Self::budget_secs(&req.user);
        let lines: Vec<(f64, f64, &str)> = req
            .user
            .lines()
            .filter_map(|l| {
                let rest = l.strip_prefix('[')?;
                let (times, text) = rest.split_once("] ")?;
                let (a, b) = times.split_once(" - ")?;
                Some((a.parse().ok()?, b.parse().ok()?, text))
            })
            .collect();
        let mut picks = Vec::new();
        if lines.is_empty() {
            let duration = req
                .user
                .split("lasts ")
                .nth(1)
                .and_then(|r| r.split_whitespace().next())
                .and_then(|v| v.parse::<f64>().ok())
                .unwrap_or(60.0);
            let len = (budget / 3.0).min(duration / 6.0).max(1.0);
            for k in 0..3 {
                let start = duration * (2 * k + 1) as f64 / 6.0 - len / 2.0;
                picks.push(serde_json::json!({
                    "start": (start.max(0.0) * 100.0).round() / 100.0,
                    "end": ((start + len).min(duration) * 100.0).round() / 100.0,
                    "text": format!("scene {}", k + 1),
                }));
            }
        } else {
            // spread picks across the timeline: every k-th line until the budget is spent
            let total: f64 = lines.iter().map(|(a, b, _)| b - a).sum();
            let stride = ((total / budget).ceil() as usize).max(1);
            let mut used = 0.0;
            for (a, b, text) in lines.iter().step_by(stride) {
                if used + (b - a) > budget {
                    continue;
                }
                used += b - a;
                picks.push(serde_json::json!({"start": a, "end": b, "text": text}));
            }
        }
        serde_json::json!({ "select_segments": picks }).to_string()
    }
}

impl LlmBackend for MockLlm {
    fn id(&self) -> &str {
        "mock-llm"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        if let Some(dir) = &self.dir {
            for path in [dir.join(format!("{}.txt", prompt_hash(req))), dir.join("default.txt")] {
                if path.is_file() {
                    return fs::read_to_string(&path)
                        .map_err(|e| LlmError::Fatal(format!("{}: {e}", path.display())));
                }
            }
        }
        Ok(Self::synthesize(req))
    }
}
