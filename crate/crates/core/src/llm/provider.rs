use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{LlmError, PromptKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProviderKind {
    /// OpenAI-compatible chat completions endpoint.
    Live {
        endpoint: String,
        model: String,
        /// Name of the environment variable holding the API key.
        credentials_env: String,
    },
    Replay { fixture: PathBuf },
    Scripted { fixture: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub provider: ProviderKind,
    pub request_timeout_ms: u64,
    pub max_retries: u32,
}

impl ProviderConfig {
    pub fn new(provider: ProviderKind) -> Self {
        Self {
            provider,
            request_timeout_ms: 300_000,
            max_retries: 2,
        }
    }

    pub fn scripted(fixture: impl Into<PathBuf>) -> Self {
        Self::new(ProviderKind::Scripted { fixture: fixture.into() })
    }

    pub fn replay(fixture: impl Into<PathBuf>) -> Self {
        Self::new(ProviderKind::Replay { fixture: fixture.into() })
    }

    pub fn validate(&self) -> Result<(), String> {
        if let ProviderKind::Live { credentials_env, .. } = &self.provider {
            let looks_like_name = !credentials_env.is_empty()
                && credentials_env
                    .chars()
                    .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
            if !looks_like_name {
                return Err("credentials must be given as an environment variable name".into());
            }
        }
        Ok(())
    }
}

/// One record of a replay fixture (and of a recorded transcript).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub prompt_hash: String,
    pub kind: PromptKind,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRecord {
    pub response: String,
}

pub trait ChatProvider: Send {
    fn id(&self) -> String;
    fn respond(&mut self, prompt: &str, kind: PromptKind, prompt_hash: &str) -> Result<String, LlmError>;
}

fn read_fixture<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, LlmError> {
    let text = fs::read_to_string(path).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))
}

/// Returns fixture responses in order, whatever the prompt.
pub struct ScriptedProvider {
    responses: VecDeque<String>,
}

impl ScriptedProvider {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            responses: responses.into_iter().map(Into::into).collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let records: Vec<ScriptRecord> = read_fixture(path)?;
        Ok(Self::new(records.into_iter().map(|r| r.response)))
    }
}

impl ChatProvider for ScriptedProvider {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn respond(&mut self, _prompt: &str, _kind: PromptKind, _hash: &str) -> Result<String, LlmError> {
        self.responses.pop_front().ok_or(LlmError::ScriptExhausted)
    }
}

/// Answers by prompt digest. Repeated identical prompts consume the
/// recorded responses for that digest in order.
pub struct ReplayProvider {
    by_hash: HashMap<String, VecDeque<String>>,
}

impl ReplayProvider {
    pub fn new(records: Vec<ReplayRecord>) -> Self {
        let mut by_hash: HashMap<String, VecDeque<String>> = HashMap::new();
        for r in records {
            by_hash.entry(r.prompt_hash).or_default().push_back(r.response);
        }
        Self { by_hash }
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::new(read_fixture(path)?))
    }
}

impl ChatProvider for ReplayProvider {
    fn id(&self) -> String {
        "replay".into()
    }

    fn respond(&mut self, _prompt: &str, _kind: PromptKind, hash: &str) -> Result<String, LlmError> {
        self.by_hash
            .get_mut(hash)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| LlmError::ReplayMiss {
                prompt_hash: hash.to_string(),
            })
    }
}

static LIVE_REQUESTS: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests issued by live providers in this process.
pub fn live_requests_issued() -> u64 {
    LIVE_REQUESTS.load(Ordering::SeqCst)
}

pub struct LiveProvider {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    max_retries: u32,
    agent: ureq::Agent,
}

impl LiveProvider {
    pub fn new(endpoint: &str, model: &str, credentials_env: &str, timeout: Duration, max_retries: u32) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key: std::env::var(credentials_env).ok().filter(|k| !k.is_empty()),
            max_retries,
            agent,
        }
    }

    fn request_once(&self, prompt: &str) -> Result<String, (bool, String)> {
        LIVE_REQUESTS.fetch_add(1, Ordering::SeqCst);
        let url = format!("{}/chat/completions", self.endpoint);
        let body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        let value: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| (status >= 500, format!("HTTP {status}: unreadable body: {e}")))?;
        if !(200..300).contains(&status) {
            let retryable = status == 429 || status >= 500;
            return Err((retryable, format!("HTTP {status}: {value}")));
        }
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| (false, "response has no choices[0].message.content".to_string()))
    }
}

impl ChatProvider for LiveProvider {
    fn id(&self) -> String {
        format!("live:{}", self.model)
    }

    fn respond(&mut self, prompt: &str, _kind: PromptKind, _hash: &str) -> Result<String, LlmError> {
        let mut attempt = 0;
        loop {
            match self.request_once(prompt) {
                Ok(text) => return Ok(text),
                Err((retryable, message)) => {
                    if !retryable || attempt >= self.max_retries {
                        return Err(LlmError::Provider(message));
                    }
                    attempt += 1;
                    thread::sleep(Duration::from_millis(250 << attempt.min(6)));
                }
            }
        }
    }
}

pub fn provider_from_config(cfg: &ProviderConfig) -> Result<Box<dyn ChatProvider>, LlmError> {
    cfg.validate().map_err(LlmError::Provider)?;
    Ok(match &cfg.provider {
        ProviderKind::Scripted { fixture } => Box::new(ScriptedProvider::from_file(fixture)?),
        ProviderKind::Replay { fixture } => Box::new(ReplayProvider::from_file(fixture)?),
        ProviderKind::Live {
            endpoint,
            model,
            credentials_env,
        } => Box::new(LiveProvider::new(
            endpoint,
            model,
            credentials_env,
            Duration::from_millis(cfg.request_timeout_ms),
            cfg.max_retries,
        )),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_sequence() {
        let mut p = ScriptedProvider::new(["fix-A", "fix-B"]);
        assert_eq!(p.respond("x", PromptKind::FailureDebug, "h").unwrap(), "fix-A");
        assert_eq!(p.respond("y", PromptKind::FailureDebug, "h").unwrap(), "fix-B");
        assert!(matches!(p.respond("z", PromptKind::FailureDebug, "h"), Err(LlmError::ScriptExhausted)));
    }

    #[test]
    fn replay_by_hash_in_order() {
        let rec = |h: &str, r: &str| ReplayRecord {
            prompt_hash: h.into(),
            kind: PromptKind::FailureDebug,
            response: r.into(),
        };
        let mut p = ReplayProvider::new(vec![rec("aa", "1"), rec("bb", "2"), rec("aa", "3")]);
        assert_eq!(p.respond("", PromptKind::FailureDebug, "bb").unwrap(), "2");
        assert_eq!(p.respond("", PromptKind::FailureDebug, "aa").unwrap(), "1");
        assert_eq!(p.respond("", PromptKind::FailureDebug, "aa").unwrap(), "3");
        match p.respond("", PromptKind::FailureDebug, "aa") {
            Err(LlmError::ReplayMiss { prompt_hash }) => assert_eq!(prompt_hash, "aa"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn literal_secret_is_rejected_as_credentials() {
        let cfg = ProviderConfig::new(ProviderKind::Live {
            endpoint: "http://localhost".into(),
            model: "m".into(),
            credentials_env: "sk-abc123".into(),
        });
        assert!(cfg.validate().is_err());
    }
}
