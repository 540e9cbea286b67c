//! Chat-completion providers: a canned mock and an HTTP endpoint.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::prompt::prompt_hash;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Remote,
    #[default]
    Mock,
}

/// An API key that never appears in logs or debug output.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Secret(pub String);

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Secret(***)")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    pub provider: ProviderKind,
    /// An OpenAI-compatible chat-completions URL.
    pub endpoint: String,
    pub model: String,
    pub temperature: f32,
    pub max_tokens: u32,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    pub timeout: Duration,
    pub api_key: Option<Secret>,
    /// Directory searched for `{prompt-hash}.json` before the built-in
    /// fixtures, and for `default.json` after them.
    pub fixtures_dir: Option<PathBuf>,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            provider: ProviderKind::Mock,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            temperature: 0.0,
            max_tokens: 2048,
            retries: 1,
            timeout: Duration::from_secs(60),
            api_key: None,
            fixtures_dir: None,
        }
    }
}

impl LlmConfig {
    /// Defaults overridden by `SLEEC_LLM_PROVIDER`, `SLEEC_LLM_ENDPOINT`,
    /// `SLEEC_LLM_MODEL`, `SLEEC_LLM_API_KEY`, `SLEEC_LLM_TIMEOUT_SECS` and
    /// `SLEEC_LLM_FIXTURES`.
    pub fn from_env() -> Result<Self, LlmError> {
        Self::from_vars(|k| std::env::var(k).ok())
    }

    pub fn from_vars(var: impl Fn(&str) -> Option<String>) -> Result<Self, LlmError> {
        let mut cfg = LlmConfig::default();
        if let Some(p) = var("SLEEC_LLM_PROVIDER") {
            cfg.provider = match p.trim() {
                "remote" => ProviderKind::Remote,
                "mock" => ProviderKind::Mock,
                other => return Err(LlmError::Config(format!("SLEEC_LLM_PROVIDER must be remote or mock, not `{other}`"))),
            };
        }
        if let Some(e) = var("SLEEC_LLM_ENDPOINT") {
            cfg.endpoint = e;
        }
        if let Some(m) = var("SLEEC_LLM_MODEL") {
            cfg.model = m;
        }
        cfg.api_key = var("SLEEC_LLM_API_KEY").filter(|k| !k.is_empty()).map(Secret);
        if let Some(t) = var("SLEEC_LLM_TIMEOUT_SECS") {
            let secs: u64 = t
                .trim()
                .parse()
                .map_err(|_| LlmError::Config(format!("SLEEC_LLM_TIMEOUT_SECS is not a number: `{t}`")))?;
            cfg.timeout = Duration::from_secs(secs);
        }
        cfg.fixtures_dir = var("SLEEC_LLM_FIXTURES").map(PathBuf::from);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlmError {
    #[error("provider request failed{}: {message}", status.map(|s| format!(" with status {s}")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("provider did not answer within {secs} s")]
    Timeout { secs: u64 },
    #[error("provider answer has no message content")]
    EmptyAnswer,
    #[error("no canned response for prompt {hash}")]
    NoFixture { hash: String },
    #[error("{0}")]
    Config(String),
}

/// One chat completion: a system and a user message in, text out.
pub trait LlmProvider: Send + Sync {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError>;
}

pub fn provider(cfg: &LlmConfig) -> Box<dyn LlmProvider> {
    match cfg.provider {
        ProviderKind::Mock => Box::new(MockProvider::new(cfg.fixtures_dir.clone())),
        ProviderKind::Remote => Box::new(RemoteProvider::new(cfg.clone())),
    }
}

/// Canned answers shipped with the crate, keyed by prompt hash. The prompts
/// are those built for the bundled fixtures with the default configuration;
/// a test rebuilds them and checks the keys.
const BUILT_IN: &[(&str, &str)] = &[
    // R1/R2 deadlock, no system description.
    (
        "c152974d553b99af80e3aae09457c102278c8a8d76fb1add4b20c25d0df14ec7",
        include_str!("../../fixtures/mock/c152974d553b99af80e3aae09457c102278c8a8d76fb1add4b20c25d0df14ec7.json"),
    ),
    // ALMI Rule2/Rule4 deadlock with the bundled description.
    (
        "0d4673b2e3fabbb111dbdcc3a3b0a7c63ea1ee4ee635896b23452e4bb30428d0",
        include_str!("../../fixtures/mock/0d4673b2e3fabbb111dbdcc3a3b0a7c63ea1ee4ee635896b23452e4bb30428d0.json"),
    ),
    // ALMI Rule2/Rule4 deadlock, no system description.
    (
        "c21ed7634d1e391ee8958b3e77abeefef515aad0b9007dd9a3a7ab45bcfc25d3",
        include_str!("../../fixtures/mock/c21ed7634d1e391ee8958b3e77abeefef515aad0b9007dd9a3a7ab45bcfc25d3.json"),
    ),
];

/// Answers from fixtures keyed by prompt hash; no network.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    dir: Option<PathBuf>,
}

impl MockProvider {
    pub fn new(dir: Option<PathBuf>) -> Self {
        MockProvider { dir }
    }

    fn read(dir: &Path, name: &str) -> Option<String> {
        std::fs::read_to_string(dir.join(name)).ok()
    }

    pub fn lookup(&self, hash: &str) -> Option<String> {
        let file = format!("{hash}.json");
        self.dir
            .as_deref()
            .and_then(|d| Self::read(d, &file))
            .or_else(|| BUILT_IN.iter().find(|(h, _)| *h == hash).map(|(_, text)| text.to_string()))
            .or_else(|| self.dir.as_deref().and_then(|d| Self::read(d, "default.json")))
    }
}

impl LlmProvider for MockProvider {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError> {
        let hash = prompt_hash(system, user);
        self.lookup(&hash).ok_or(LlmError::NoFixture { hash })
    }
}

/// An OpenAI-compatible chat-completions endpoint.
pub struct RemoteProvider {
    cfg: LlmConfig,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(cfg: LlmConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteProvider { cfg, agent }
    }

    fn attempt(&self, body: &Value) -> Result<String, LlmError> {
        let mut req = self.agent.post(&self.cfg.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {}", key.0));
        }
        let mut resp = req.send_json(body).map_err(|e| self.transport(e))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| self.transport(e))?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Transport {
                status: Some(status),
                message: text.chars().take(300).collect(),
            });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::Transport {
            status: Some(status),
            message: format!("answer is not JSON: {e}"),
        })?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or(LlmError::EmptyAnswer)
    }

    fn transport(&self, e: ureq::Error) -> LlmError {
        match e {
            ureq::Error::Timeout(_) => LlmError::Timeout {
                secs: self.cfg.timeout.as_secs(),
            },
            other => LlmError::Transport {
                status: None,
                message: other.to_string(),
            },
        }
    }
}

impl LlmProvider for RemoteProvider {
    fn complete(&self, system: &str, user: &str) -> Result<String, LlmError> {
        let body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let mut last = None;
        for _ in 0..=self.cfg.retries {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                // Client errors other than rate limiting will not improve.
                Err(e @ LlmError::Transport { status: Some(s), .. }) if (400..500).contains(&s) && s != 429 => {
                    return Err(e)
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or(LlmError::EmptyAnswer))
    }
}
