//! Provider abstraction: a completion endpoint that turns a prompt into
//! a structured text reply. The remote implementation speaks a minimal
//! HTTP JSON protocol; the mock implementation lives in [`super::mock`].

use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;
use thiserror::Error;

/// Environment variable holding the remote API key. The value is read
/// at request time and never logged or echoed into errors.
pub const API_KEY_ENV: &str = "EXPECT_LLM_API_KEY";

#[derive(Debug, Error)]
pub enum ProviderError {
    /// Transport-level failure (connect, timeout, non-2xx status).
    #[error("transport: {0}")]
    Transport(String),
    /// The reply arrived but could not be parsed as expected.
    #[error("malformed reply: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    #[serde(default)]
    pub request_seed: Option<u64>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_max_retries() -> u32 {
    2
}

fn default_timeout_secs() -> u64 {
    30
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:0/v1/complete".into(),
            model_name: "expectation-scorer".into(),
            temperature: 0.0,
            request_seed: None,
            max_retries: default_max_retries(),
            timeout_secs: default_timeout_secs(),
        }
    }
}

/// Wire request body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Wire reply body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderReply {
    pub text: String,
}

/// A completion backend. Implementations must be safe to call from
/// multiple worker threads.
pub trait Provider: Sync {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderReply, ProviderError>;
}

/// Remote HTTP provider: POST JSON `{model, prompt, temperature, seed}`,
/// reply JSON `{text}`. Bearer auth from `EXPECT_LLM_API_KEY` when set.
pub struct RemoteProvider {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(cfg: &ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .build()
            .into();
        Self {
            endpoint: cfg.endpoint.clone(),
            agent,
        }
    }
}

impl Provider for RemoteProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                req = req.header("authorization", &format!("Bearer {key}"));
            }
        }
        let mut response = req
            .send_json(request)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        response
            .body_mut()
            .read_json::<ProviderReply>()
            .map_err(|e| ProviderError::Malformed(e.to_string()))
    }
}

/// Runs `op` with up to `max_retries` additional attempts after the
/// first. The final error keeps its transport/malformed class so callers
/// can map it to `provider_unavailable` vs `malformed_response`.
pub fn with_retries<T>(
    max_retries: u32,
    mut op: impl FnMut() -> Result<T, ProviderError>,
) -> Result<T, ProviderError> {
    let mut last = None;
    for _ in 0..=max_retries {
        match op() {
            Ok(v) => return Ok(v),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Test double: fails the first `failures` calls with a transport error,
/// then delegates to the inner provider.
pub struct FlakyProvider<P> {
    inner: P,
    failures: usize,
    calls: AtomicUsize,
}

impl<P> FlakyProvider<P> {
    pub fn new(inner: P, failures: usize) -> Self {
        Self {
            inner,
            failures,
            calls: AtomicUsize::new(0),
        }
    }
}

impl<P: Provider> Provider for FlakyProvider<P> {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if n < self.failures {
            return Err(ProviderError::Transport("simulated outage".into()));
        }
        self.inner.complete(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(&'static str);
    impl Provider for Fixed {
        fn complete(&self, _: &ProviderRequest) -> Result<ProviderReply, ProviderError> {
            Ok(ProviderReply {
                text: self.0.to_string(),
            })
        }
    }

    fn req() -> ProviderRequest {
        ProviderRequest {
            model: "m".into(),
            prompt: "p".into(),
            temperature: 0.0,
            seed: Some(1),
        }
    }

    #[test]
    fn retries_recover_from_transient_failures() {
        let flaky = FlakyProvider::new(Fixed("ok"), 2);
        let got = with_retries(2, || flaky.complete(&req())).unwrap();
        assert_eq!(got.text, "ok");
    }

    #[test]
    fn exhausted_retries_surface_the_transport_error() {
        let flaky = FlakyProvider::new(Fixed("ok"), 5);
        let err = with_retries(2, || flaky.complete(&req())).unwrap_err();
        assert!(matches!(err, ProviderError::Transport(_)));
    }

    #[test]
    fn request_body_serializes_expected_keys() {
        let body = serde_json::to_string(&req()).unwrap();
        assert_eq!(
            body,
            r#"{"model":"m","prompt":"p","temperature":0.0,"seed":1}"#
        );
    }
}
