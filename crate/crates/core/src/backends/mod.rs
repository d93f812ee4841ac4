//! Clients for the external generative services plus the deterministic local
//! fallbacks used when no endpoint is configured.
//!
//! Every service speaks JSON over HTTP POST; images travel as base64 PNG and
//! masks as base64 8-bit grayscale PNG. Request and response shapes are
//! described by the schema files under `schemas/`.

mod background;
mod describe;
mod http;
pub mod mock;
mod ocr;
mod prompt;
mod removal;
mod stylize;
pub mod wire;

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use background::{generate_background, procedural_background, BackgroundOutput};
pub use describe::{describe_image, image_summary};
pub use http::post_json;
pub use ocr::{ocr_detect, oracle_ocr, DetectedWord};
pub use prompt::{refine_prompt, PromptContext, ART_TEXT_SUFFIX, BACKGROUND_SUFFIX};
pub use removal::remove_text;
pub use stylize::{stylize_local, stylize_text, StylizeRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Background,
    Stylizer,
    PromptRefiner,
    Ocr,
    Planner,
    /// Experimental: text removal for the reference-image flow. No local fallback.
    TextRemoval,
}

impl BackendKind {
    pub const ALL: [BackendKind; 6] = [
        BackendKind::Background,
        BackendKind::Stylizer,
        BackendKind::PromptRefiner,
        BackendKind::Ocr,
        BackendKind::Planner,
        BackendKind::TextRemoval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Background => "background",
            BackendKind::Stylizer => "stylizer",
            BackendKind::PromptRefiner => "prompt_refiner",
            BackendKind::Ocr => "ocr",
            BackendKind::Planner => "planner",
            BackendKind::TextRemoval => "text_removal",
        }
    }

    /// Environment variable that overrides this kind's endpoint URL.
    pub fn url_env(self) -> String {
        format!("POSTER_{}_URL", self.as_str().to_uppercase())
    }

    /// Default environment variable holding this kind's bearer token.
    pub fn token_env(self) -> String {
        format!("POSTER_{}_TOKEN", self.as_str().to_uppercase())
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    250
}

/// Where and how to reach one backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendEndpoint {
    pub kind: BackendKind,
    pub url: String,
    /// Name of the environment variable holding the bearer token, if any.
    #[serde(default)]
    pub auth_token_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Extra attempts after the first failure, 0..=5.
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Delay before retry `n` is `n * backoff_ms`.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Planner endpoints that accept the raw background image.
    #[serde(default)]
    pub supports_vision: bool,
}

impl BackendEndpoint {
    pub fn new(kind: BackendKind, url: impl Into<String>) -> Self {
        Self {
            kind,
            url: url.into(),
            auth_token_env: None,
            timeout_secs: default_timeout(),
            retries: default_retries(),
            backoff_ms: default_backoff(),
            supports_vision: false,
        }
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    pub fn with_backoff_ms(mut self, ms: u64) -> Self {
        self.backoff_ms = ms;
        self
    }

    pub fn with_timeout(mut self, secs: f64) -> Self {
        self.timeout_secs = secs;
        self
    }

    pub fn with_token_env(mut self, var: impl Into<String>) -> Self {
        self.auth_token_env = Some(var.into());
        self
    }

    pub fn with_vision(mut self, yes: bool) -> Self {
        self.supports_vision = yes;
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(BackendError::InvalidEndpoint(format!(
                "{}: timeout must be > 0",
                self.kind
            )));
        }
        if self.retries > 5 {
            return Err(BackendError::InvalidEndpoint(format!(
                "{}: retries must be in [0, 5], got {}",
                self.kind, self.retries
            )));
        }
        if !(self.url.starts_with("http://") || self.url.starts_with("https://")) {
            return Err(BackendError::InvalidEndpoint(format!(
                "{}: url must be http(s), got {:?}",
                self.kind, self.url
            )));
        }
        Ok(())
    }

    pub(crate) fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub(crate) fn token(&self) -> Option<String> {
        let var = self
            .auth_token_env
            .clone()
            .unwrap_or_else(|| self.kind.token_env());
        std::env::var(var).ok().filter(|t| !t.is_empty())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("{kind} backend unavailable after {attempts} attempt(s): {message}")]
    Unavailable {
        kind: BackendKind,
        attempts: u32,
        message: String,
    },
    #[error("{kind} backend returned a malformed response: {message}")]
    Malformed { kind: BackendKind, message: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("request cancelled")]
    Cancelled,
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
}

/// Cooperative cancellation flag shared between a caller and in-flight calls.
/// Checked before every attempt and during retry backoff.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// 256-bit digest of labelled parts, used to seed the local fallbacks.
pub(crate) fn digest(parts: &[&[u8]]) -> [u8; 32] {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}
