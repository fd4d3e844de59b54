//! Prompt construction, provider access and code extraction.
//!
//! Every call is single-turn: the full problem context is sent each time.
//! The gateway keeps a transcript of all exchanges, which doubles as a
//! replay fixture for later deterministic runs.

mod extract;
mod prompts;
mod provider;

use chrono::Utc;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use extract::extract_code;
pub use prompts::{
    append_code_block_reminder, append_compile_diagnostics, build_bruteforce_prompt, build_bruteforce_retry_prompt,
    build_failure_debug_prompt, build_zero_shot_debug_prompt, CODE_BLOCK_REMINDER,
};
pub use provider::{
    live_requests_issued, provider_from_config, ChatProvider, LiveProvider, ProviderConfig, ProviderKind,
    ReplayProvider, ReplayRecord, ScriptRecord, ScriptedProvider,
};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("provider error: {0}")]
    Provider(String),
    #[error("no replay fixture entry for prompt {prompt_hash}")]
    ReplayMiss { prompt_hash: String },
    #[error("scripted fixture exhausted")]
    ScriptExhausted,
    #[error("response contains no fenced code block")]
    NoCodeBlock,
    #[error("fixture: {0}")]
    Fixture(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    BruteForce,
    ZeroShotDebug,
    FailureDebug,
}

impl PromptKind {
    pub fn is_debug(self) -> bool {
        !matches!(self, PromptKind::BruteForce)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub prompt: String,
    pub response: String,
    pub kind: PromptKind,
    pub timestamp: String,
    pub provider_id: String,
    pub prompt_hash: String,
}

impl ChatExchange {
    pub fn replay_record(&self) -> ReplayRecord {
        ReplayRecord {
            prompt_hash: self.prompt_hash.clone(),
            kind: self.kind,
            response: self.response.clone(),
        }
    }
}

/// Hex SHA-256 of the prompt bytes.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

pub struct LlmGateway {
    provider: Box<dyn ChatProvider>,
    transcript: Vec<ChatExchange>,
}

impl LlmGateway {
    pub fn new(provider: Box<dyn ChatProvider>) -> Self {
        Self {
            provider,
            transcript: Vec::new(),
        }
    }

    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, LlmError> {
        Ok(Self::new(provider_from_config(cfg)?))
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }

    pub fn complete(&mut self, prompt: &str, kind: PromptKind) -> Result<ChatExchange, LlmError> {
        let hash = prompt_hash(prompt);
        let response = self.provider.respond(prompt, kind, &hash)?;
        let exchange = ChatExchange {
            prompt: prompt.to_string(),
            response,
            kind,
            timestamp: Utc::now().to_rfc3339(),
            provider_id: self.provider.id(),
            prompt_hash: hash,
        };
        self.transcript.push(exchange.clone());
        Ok(exchange)
    }

    pub fn transcript(&self) -> &[ChatExchange] {
        &self.transcript
    }

    /// Continues an earlier transcript (session resume).
    pub fn preload_transcript(&mut self, exchanges: Vec<ChatExchange>) {
        self.transcript = exchanges;
    }

    pub fn replay_records(&self) -> Vec<ReplayRecord> {
        self.transcript.iter().map(ChatExchange::replay_record).collect()
    }
}
