//! Client for remote model endpoints speaking the [`wire`](super::wire) format.

use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::wire::{decode_response, encode_request, PROTOCOL_VERSION};
use super::{Backend, BackendCall, RawResponse};
use crate::error::{Error, Result};

/// Environment variable holding the bearer token for the endpoint.
pub const API_KEY_ENV: &str = "TZOOM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    /// Worth retrying: timeouts, refused connections, 408/429/5xx.
    Transient(String),
    Fatal(String),
}

/// Moves one JSON document to the endpoint and returns the reply body.
pub trait Transport: Send + Sync {
    fn post(&self, body: &str) -> std::result::Result<String, TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff_ms: 500,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay after failed attempt `attempt` (1-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.powi(attempt.saturating_sub(1) as i32);
        Duration::from_millis((self.initial_backoff_ms as f64 * factor).round() as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// See [`frame_uri`](super::wire::frame_uri).
    pub frame_uri_template: String,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            model: "default".to_string(),
            frame_uri_template: "video://{video}?t={time}".to_string(),
            timeout_ms: 60_000,
            retry: RetryPolicy::default(),
        }
    }
}

/// Blocking HTTP POST transport.
pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(endpoint: &str, timeout: Duration, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport {
            agent,
            endpoint: endpoint.to_string(),
            api_key,
        }
    }
}

impl Transport for HttpTransport {
    fn post(&self, body: &str) -> std::result::Result<String, TransportError> {
        let mut req = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .header("x-tzoom-protocol", PROTOCOL_VERSION);
        if let Some(key) = &self.api_key {
            req = req.header("authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| match e {
            ureq::Error::Timeout(_)
            | ureq::Error::Io(_)
            | ureq::Error::ConnectionFailed
            | ureq::Error::HostNotFound => TransportError::Transient(e.to_string()),
            other => TransportError::Fatal(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        match status {
            200..=299 => Ok(text),
            408 | 429 | 500..=599 => Err(TransportError::Transient(format!("http {status}"))),
            _ => Err(TransportError::Fatal(format!("http {status}: {text}"))),
        }
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

pub struct RemoteBackend<T: Transport = HttpTransport> {
    transport: T,
    config: RemoteConfig,
    sleep: Sleeper,
}

impl RemoteBackend<HttpTransport> {
    /// HTTP client for `config`, authenticating with `TZOOM_API_KEY` if set.
    pub fn http(config: RemoteConfig) -> Result<Self> {
        if config.endpoint.trim().is_empty() {
            return Err(Error::invalid("remote backend requires an endpoint"));
        }
        let transport = HttpTransport::new(
            &config.endpoint,
            Duration::from_millis(config.timeout_ms),
            std::env::var(API_KEY_ENV).ok(),
        );
        Ok(RemoteBackend::with_transport(transport, config))
    }
}

impl<T: Transport> RemoteBackend<T> {
    pub fn with_transport(transport: T, config: RemoteConfig) -> Self {
        RemoteBackend {
            transport,
            config,
            sleep: Box::new(std::thread::sleep),
        }
    }

    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    /// Send one call, retrying transient transport failures with exponential
    /// backoff, and decode the reply.
    pub fn remote_call(&self, call: &BackendCall) -> Result<RawResponse> {
        let body = encode_request(call, &self.config.model, &self.config.frame_uri_template)?;
        let max = self.config.retry.max_attempts.max(1);
        let mut attempt = 0;
        let reply = loop {
            attempt += 1;
            match self.transport.post(&body) {
                Ok(reply) => break reply,
                Err(TransportError::Transient(reason)) if attempt < max => {
                    let delay = self.config.retry.backoff(attempt);
                    warn!("attempt {attempt}/{max} failed ({reason}); retrying in {delay:?}");
                    (self.sleep)(delay);
                }
                Err(TransportError::Transient(reason) | TransportError::Fatal(reason)) => {
                    return Err(Error::BackendUnavailable {
                        attempts: attempt,
                        reason,
                    });
                }
            }
        };
        debug!("{:?} call answered after {attempt} attempt(s)", call.kind);
        let resp = decode_response(&reply)?;
        let missing = resp.first_token_probs.as_ref().is_none_or(Vec::is_empty);
        if call.kind.is_reflection() && call.want_token_probs && missing {
            return Err(Error::ProtocolDegraded { text: resp.text });
        }
        Ok(RawResponse {
            text: resp.text,
            first_token_probs: resp.first_token_probs,
            attempts: attempt,
        })
    }
}

impl<T: Transport> Backend for RemoteBackend<T> {
    fn call(&self, call: &BackendCall) -> Result<RawResponse> {
        self.remote_call(call)
    }
}
