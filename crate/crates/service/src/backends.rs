//! Backend wiring: offline mocks, external transcriber commands, and
//! HTTP clients for chat-style LLM, transcription and embedding services.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clipsmith_core::metrics::{EmbeddingProvider, EmbeddingVector, HashedBagOfWords};
use clipsmith_core::select::{ChatRequest, LlmBackend, LlmError, MockLlm};
use clipsmith_core::transcribe::{BackendRole, CommandTranscriber, MockTranscriber, TranscribeError, Transcriber};
use clipsmith_core::{AudioArtifact, AudioFormat, Transcript};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpEndpoint {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Name of the environment variable holding a bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        HttpEndpoint {
            url: url.into(),
            model: None,
            api_key_env: None,
            timeout_secs: default_timeout_secs(),
        }
    }

    fn client(&self) -> Result<reqwest::blocking::Client, String> {
        reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(self.timeout_secs.max(1)))
            .build()
            .map_err(|e| e.to_string())
    }

    fn authorize(&self, req: reqwest::blocking::RequestBuilder) -> reqwest::blocking::RequestBuilder {
        match self.api_key_env.as_deref().and_then(|name| std::env::var(name).ok()) {
            Some(key) if !key.is_empty() => req.bearer_auth(key),
            _ => req,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TranscriberEndpoint {
    Http(HttpEndpoint),
    /// Program printing a transcript document; `{audio}` and `{language}`
    /// in `args` are substituted.
    Command { program: PathBuf, args: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    /// Use offline mocks for every backend not configured explicitly.
    pub mock: bool,
    /// Directory with mock fixtures (transcripts keyed by audio hash, LLM
    /// responses keyed by prompt hash).
    pub mock_dir: Option<PathBuf>,
    pub llm: Option<HttpEndpoint>,
    pub transcriber_fast: Option<TranscriberEndpoint>,
    pub transcriber_accurate: Option<TranscriberEndpoint>,
    pub embedding: Option<HttpEndpoint>,
}

/// Everything the pipeline calls out to.
#[derive(Clone)]
pub struct Backends {
    pub fast: Arc<dyn Transcriber>,
    pub accurate: Arc<dyn Transcriber>,
    pub llm: Arc<dyn LlmBackend>,
    pub embedding: Arc<dyn EmbeddingProvider<f64>>,
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backends")
            .field("fast", &self.fast.id())
            .field("accurate", &self.accurate.id())
            .field("llm", &self.llm.id())
            .field("embedding", &self.embedding.id())
            .finish()
    }
}

impl Backends {
    /// Offline backends only.
    pub fn mock(dir: Option<PathBuf>) -> Self {
        Backends {
            fast: Arc::new(MockTranscriber::new(BackendRole::Fast, dir.clone())),
            accurate: Arc::new(MockTranscriber::new(BackendRole::Accurate, dir.clone())),
            llm: Arc::new(MockLlm::new(dir)),
            embedding: Arc::new(HashedBagOfWords::default()),
        }
    }

    pub fn from_config(cfg: &BackendConfig) -> Result<Self, ServiceError> {
        let transcriber = |ep: &Option<TranscriberEndpoint>, role: BackendRole| -> Arc<dyn Transcriber> {
            match ep {
                Some(TranscriberEndpoint::Http(h)) => Arc::new(HttpTranscriber::new(role, h.clone())),
                Some(TranscriberEndpoint::Command { program, args }) => Arc::new(CommandTranscriber::new(
                    format!("command-{}", role.as_str()),
                    program.clone(),
                    args.clone(),
                )),
                None if cfg.mock => Arc::new(MockTranscriber::new(role, cfg.mock_dir.clone())),
                None => Arc::new(Unconfigured(format!("transcriber-{}", role.as_str()))),
            }
        };
        let llm: Arc<dyn LlmBackend> = match &cfg.llm {
            Some(h) => Arc::new(HttpLlm::new(h.clone())),
            None if cfg.mock => Arc::new(MockLlm::new(cfg.mock_dir.clone())),
            None => Arc::new(Unconfigured("llm".into())),
        };
        let embedding: Arc<dyn EmbeddingProvider<f64>> = match &cfg.embedding {
            Some(h) => Arc::new(HttpEmbedding::new(h.clone())),
            None => Arc::new(HashedBagOfWords::default()),
        };
        Ok(Backends {
            fast: transcriber(&cfg.transcriber_fast, BackendRole::Fast),
            accurate: transcriber(&cfg.transcriber_accurate, BackendRole::Accurate),
            llm,
            embedding,
        })
    }
}

/// Placeholder for a backend that was never configured.
#[derive(Debug, Clone)]
pub struct Unconfigured(pub String);

impl Transcriber for Unconfigured {
    fn id(&self) -> &str {
        &self.0
    }

    fn run(&self, _: &AudioArtifact, _: Option<&str>) -> Result<Transcript, TranscribeError> {
        Err(TranscribeError::BackendUnavailable(format!("{} is not configured", self.0)))
    }
}

impl LlmBackend for Unconfigured {
    fn id(&self) -> &str {
        &self.0
    }

    fn complete(&self, _: &ChatRequest) -> Result<String, LlmError> {
        Err(LlmError::Fatal(format!("{} is not configured", self.0)))
    }
}

fn classify(status: reqwest::StatusCode, retry_after: Option<Duration>, body: String) -> LlmError {
    if status.as_u16() == 429 {
        LlmError::RateLimited {
            message: body,
            retry_after,
        }
    } else if status.is_server_error() || status.as_u16() == 408 {
        LlmError::Transient(format!("{status}: {body}"))
    } else {
        LlmError::Fatal(format!("{status}: {body}"))
    }
}

/// Chat-completions style endpoint: `{"model", "messages": [...]}` in,
/// `choices[0].message.content` out.
#[derive(Debug, Clone)]
pub struct HttpLlm {
    id: String,
    endpoint: HttpEndpoint,
}

impl HttpLlm {
    pub fn new(endpoint: HttpEndpoint) -> Self {
        let id = format!("http-llm:{}", endpoint.model.as_deref().unwrap_or("default"));
        HttpLlm { id, endpoint }
    }

    pub fn request_body(&self, req: &ChatRequest) -> Value {
        let user: Value = match &req.video {
            Some(v) => {
                let abs = std::path::absolute(v).unwrap_or_else(|_| v.clone());
                json!([
                    {"type": "text", "text": req.user},
                    {"type": "video_url", "video_url": {"url": format!("file://{}", abs.display())}}
                ])
            }
            None => Value::String(req.user.clone()),
        };
        let mut body = json!({
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": user}
            ],
            "temperature": 0
        });
        if let Some(m) = &self.endpoint.model {
            body["model"] = Value::String(m.clone());
        }
        body
    }
}

/// Pulls the reply text out of the common response shapes.
pub fn completion_text(v: &Value) -> Option<String> {
    if let Some(s) = v.pointer("/choices/0/message/content").and_then(Value::as_str) {
        return Some(s.to_string());
    }
    if let Some(parts) = v.pointer("/choices/0/message/content").and_then(Value::as_array) {
        let text: String = parts.iter().filter_map(|p| p.get("text").and_then(Value::as_str)).collect();
        return Some(text);
    }
    for key in ["/choices/0/text", "/content", "/text", "/output"] {
        if let Some(s) = v.pointer(key).and_then(Value::as_str) {
            return Some(s.to_string());
        }
    }
    None
}

impl LlmBackend for HttpLlm {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let client = self.endpoint.client().map_err(LlmError::Fatal)?;
        let resp = self
            .endpoint
            .authorize(client.post(&self.endpoint.url).json(&self.request_body(req)))
            .send()
            .map_err(|e| LlmError::Transient(e.to_string()))?;
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|h| h.to_str().ok())
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = resp.text().map_err(|e| LlmError::Transient(e.to_string()))?;
        if !status.is_success() {
            return Err(classify(status, retry_after, text));
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::Fatal(format!("response is not JSON: {e}")))?;
        completion_text(&v).ok_or_else(|| LlmError::Fatal("response carries no completion text".into()))
    }
}

/// Posts the audio bytes and expects a transcript document back.
#[derive(Debug, Clone)]
pub struct HttpTranscriber {
    id: String,
    endpoint: HttpEndpoint,
}

impl HttpTranscriber {
    pub fn new(role: BackendRole, endpoint: HttpEndpoint) -> Self {
        HttpTranscriber {
            id: format!("http-{}", role.as_str()),
            endpoint,
        }
    }
}

fn audio_mime(format: AudioFormat) -> &'static str {
    match format {
        AudioFormat::Wav => "audio/wav",
        AudioFormat::Mp3 => "audio/mpeg",
        AudioFormat::M4a => "audio/mp4",
        AudioFormat::Flac => "audio/flac",
    }
}

impl Transcriber for HttpTranscriber {
    fn id(&self) -> &str {
        &self.id
    }

    fn run(&self, audio: &AudioArtifact, forced_language: Option<&str>) -> Result<Transcript, TranscribeError> {
        let unavailable = |e: String| TranscribeError::BackendUnavailable(format!("{}: {e}", self.endpoint.url));
        let bytes = std::fs::read(&audio.path).map_err(|e| unavailable(e.to_string()))?;
        let client = self.endpoint.client().map_err(unavailable)?;
        let mut req = client
            .post(&self.endpoint.url)
            .header("content-type", audio_mime(audio.format))
            .body(bytes);
        if let Some(lang) = forced_language {
            req = req.query(&[("language", lang)]);
        }
        if let Some(m) = &self.endpoint.model {
            req = req.query(&[("model", m.as_str())]);
        }
        let resp = self.endpoint.authorize(req).send().map_err(|e| unavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| unavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(unavailable(format!("{status}: {text}")));
        }
        serde_json::from_str(&text).map_err(|e| TranscribeError::InvalidOutput(e.to_string()))
    }
}

/// `{"input": text}` in, `{"embedding": [...]}` (or `data[0].embedding`) out.
/// A failed request yields the zero vector and an error log entry.
#[derive(Debug, Clone)]
pub struct HttpEmbedding {
    id: String,
    endpoint: HttpEndpoint,
}

impl HttpEmbedding {
    pub fn new(endpoint: HttpEndpoint) -> Self {
        let id = format!("http-embedding:{}", endpoint.model.as_deref().unwrap_or("default"));
        HttpEmbedding { id, endpoint }
    }

    fn fetch(&self, text: &str) -> Result<Vec<f64>, String> {
        let client = self.endpoint.client()?;
        let mut body = json!({ "input": text });
        if let Some(m) = &self.endpoint.model {
            body["model"] = Value::String(m.clone());
        }
        let resp = self
            .endpoint
            .authorize(client.post(&self.endpoint.url).json(&body))
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        let v: Value = resp.json().map_err(|e| e.to_string())?;
        if !status.is_success() {
            return Err(format!("{status}: {v}"));
        }
        let arr = v
            .get("embedding")
            .or_else(|| v.pointer("/data/0/embedding"))
            .and_then(Value::as_array)
            .ok_or("response has no embedding array")?;
        arr.iter()
            .map(|x| x.as_f64().ok_or_else(|| "non-numeric component".to_string()))
            .collect()
    }
}

impl EmbeddingProvider<f64> for HttpEmbedding {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> EmbeddingVector<f64> {
        match self.fetch(text) {
            Ok(v) => EmbeddingVector::from_components(v),
            Err(e) => {
                tracing::error!(endpoint = %self.endpoint.url, "embedding request failed: {e}");
                EmbeddingVector::zero(0)
            }
        }
    }
}

/// Resolves `path` against `base` unless it is absolute.
pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
