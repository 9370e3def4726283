use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f32,
    pub max_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub params: DecodingParams,
}

impl CompletionRequest {
    /// Stable key identifying this request in a recording.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.prompt.as_bytes());
        h.update(self.params.temperature.to_bits().to_le_bytes());
        h.update(self.params.max_tokens.to_le_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("LLM provider unreachable: {0}")]
    ProviderUnreachable(String),
    #[error("LLM provider error: {0}")]
    Provider(String),
    #[error("no recorded response for request {0}")]
    ReplayMiss(String),
    #[error("recording I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Text-completion backend. Implementations must tolerate concurrent calls.
pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError>;
}

/// Returns scripted responses in order; the last one repeats once the script
/// runs out. Never fails.
#[derive(Debug, Default)]
pub struct MockClient {
    script: Vec<String>,
    cursor: Mutex<usize>,
    calls: Mutex<Vec<CompletionRequest>>,
}

impl MockClient {
    pub fn new<I, S>(script: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            script: script.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    /// Every request received so far.
    pub fn calls(&self) -> Vec<CompletionRequest> {
        self.calls.lock().expect("mock lock").clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().expect("mock lock").len()
    }
}

impl LlmClient for MockClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        self.calls.lock().expect("mock lock").push(request.clone());
        let mut cursor = self.cursor.lock().expect("mock lock");
        let response = match self.script.get(*cursor).or(self.script.last()) {
            Some(r) => r.clone(),
            None => String::new(),
        };
        *cursor += 1;
        Ok(response)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Recorded {
    key: String,
    prompt: String,
    response: String,
}

/// Answers from a JSONL recording written by [`RecordingClient`].
#[derive(Debug, Default)]
pub struct ReplayClient {
    responses: HashMap<String, String>,
}

impl ReplayClient {
    pub fn from_jsonl(path: &Path) -> Result<Self, LlmError> {
        let mut responses = HashMap::new();
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Recorded = serde_json::from_str(&line)
                .map_err(|e| LlmError::Provider(format!("bad recording line: {e}")))?;
            responses.insert(rec.key, rec.response);
        }
        Ok(Self { responses })
    }

    pub fn insert(&mut self, request: &CompletionRequest, response: impl Into<String>) {
        self.responses.insert(request.fingerprint(), response.into());
    }
}

impl LlmClient for ReplayClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let key = request.fingerprint();
        self.responses.get(&key).cloned().ok_or(LlmError::ReplayMiss(key))
    }
}

/// Wraps a client and appends every exchange to a JSONL file for later
/// replay. Occurrences of `secrets` are masked before writing.
pub struct RecordingClient<C> {
    inner: C,
    sink: Mutex<File>,
    secrets: Vec<String>,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C, path: &Path, secrets: Vec<String>) -> Result<Self, LlmError> {
        let sink = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner,
            sink: Mutex::new(sink),
            secrets: secrets.into_iter().filter(|s| !s.is_empty()).collect(),
        })
    }

    fn redact(&self, text: &str) -> String {
        self.secrets.iter().fold(text.to_string(), |t, s| t.replace(s.as_str(), "[REDACTED]"))
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        let response = self.inner.complete(request)?;
        let rec = Recorded {
            key: request.fingerprint(),
            prompt: self.redact(&request.prompt),
            response: self.redact(&response),
        };
        let mut line = serde_json::to_string(&rec).expect("record serializes");
        line.push('\n');
        self.sink.lock().expect("sink lock").write_all(line.as_bytes())?;
        Ok(response)
    }
}

/// Client for OpenAI-compatible `POST {base_url}/chat/completions`.
pub struct HttpClient {
    base_url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            model: model.into(),
            api_key,
            agent,
        }
    }

    /// Reads the API key from `key_env`, if set.
    pub fn from_env(base_url: &str, model: &str, key_env: &str, timeout: Duration) -> Self {
        Self::new(base_url, model, std::env::var(key_env).ok(), timeout)
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

impl LlmClient for HttpClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        crate::egress::check(&self.base_url).map_err(LlmError::ProviderUnreachable)?;
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": request.prompt }],
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_tokens,
        });
        let mut req = self.agent.post(format!("{}/chat/completions", self.base_url));
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| LlmError::ProviderUnreachable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::ProviderUnreachable(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Provider(format!("HTTP {status}: {}", truncate(&text, 200))));
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| LlmError::Provider(format!("unexpected response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Provider("response has no message content".into()))
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(p: &str) -> CompletionRequest {
        CompletionRequest {
            prompt: p.into(),
            params: DecodingParams::default(),
        }
    }

    #[test]
    fn mock_follows_script_then_repeats() {
        let m = MockClient::new(["a", "b"]);
        let got: Vec<String> = (0..4).map(|_| m.complete(&req("x")).unwrap()).collect();
        assert_eq!(got, ["a", "b", "b", "b"]);
        assert_eq!(m.call_count(), 4);
        assert_eq!(MockClient::new(Vec::<String>::new()).complete(&req("x")).unwrap(), "");
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.jsonl");
        let rec = RecordingClient::new(MockClient::new(["hello sk-123"]), &path, vec!["sk-123".into()]).unwrap();
        assert_eq!(rec.complete(&req("prompt one")).unwrap(), "hello sk-123");
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("[REDACTED]") && !text.contains("sk-123"));

        let replay = ReplayClient::from_jsonl(&path).unwrap();
        assert_eq!(replay.complete(&req("prompt one")).unwrap(), "hello [REDACTED]");
        assert!(matches!(replay.complete(&req("other")), Err(LlmError::ReplayMiss(_))));
    }

    #[test]
    fn unreachable_provider() {
        // Port 9 on localhost is closed in the test sandbox; connection is refused.
        let c = HttpClient::new("http://127.0.0.1:9", "m", None, Duration::from_secs(2));
        assert!(matches!(c.complete(&req("x")), Err(LlmError::ProviderUnreachable(_))));
    }
}
