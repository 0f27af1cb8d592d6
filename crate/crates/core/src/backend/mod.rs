//! Model inference boundary: the [`Backend`] trait, the calls that cross it,
//! and the pieces that turn raw generations into windows and confidences.

pub mod confidence;
pub mod cost;
pub mod oracle;
pub mod parse;
pub mod remote;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::link::{PromptSpec, Task};
use crate::temporal::{TemporalWindow, WindowSet};

pub use confidence::{mc_confidence, yes_confidence, Confidence, ConfidenceMode, YesNoMode};
pub use cost::{step_cost, CallCost, CostEntry, CostTable, StepCost};
pub use oracle::{oracle_ground, oracle_reflect, AnswerRule, OracleBackend, OracleSpec};
pub use parse::{extract_option_label, parse_windows};
pub use remote::{RemoteBackend, RemoteConfig, RetryPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Ground,
    ReflectYesno,
    ReflectMc,
    Answer,
}

impl CallKind {
    pub fn is_reflection(self) -> bool {
        matches!(self, CallKind::ReflectYesno | CallKind::ReflectMc)
    }

    pub fn for_task(task: Task) -> CallKind {
        match task {
            Task::Ground => CallKind::Ground,
            Task::ReflectYesno => CallKind::ReflectYesno,
            Task::ReflectMc => CallKind::ReflectMc,
            Task::Answer | Task::SpotlightAnswer => CallKind::Answer,
        }
    }
}

/// The shape of a call as far as the cost model is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallFootprint {
    pub kind: CallKind,
    pub frames_total: usize,
    /// Frames not already encoded in a cached prompt prefix.
    pub frames_uncached: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendCall {
    pub kind: CallKind,
    pub prompt: PromptSpec,
    pub frames_total: usize,
    pub frames_uncached: usize,
    pub video_id: String,
    /// Interval of the video this call examines.
    pub segment: TemporalWindow,
    pub want_token_probs: bool,
    pub max_tokens: u32,
}

impl BackendCall {
    /// A call over `prompt` with every frame uncached.
    pub fn new(prompt: PromptSpec, video_id: &str, segment: TemporalWindow) -> Self {
        let kind = CallKind::for_task(prompt.task);
        let frames = prompt.frame_count();
        BackendCall {
            kind,
            frames_total: frames,
            frames_uncached: frames,
            video_id: video_id.to_string(),
            segment,
            want_token_probs: kind.is_reflection(),
            max_tokens: if kind.is_reflection() { 1 } else { 64 },
            prompt,
        }
    }

    pub fn with_cached_prefix(mut self, cached_frames: usize) -> Self {
        self.frames_uncached = self.frames_total.saturating_sub(cached_frames);
        self
    }

    pub fn footprint(&self) -> CallFootprint {
        CallFootprint {
            kind: self.kind,
            frames_total: self.frames_total,
            frames_uncached: self.frames_uncached.min(self.frames_total),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenProb {
    pub token: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawResponse {
    pub text: String,
    pub first_token_probs: Option<Vec<TokenProb>>,
    /// Transport attempts spent producing this response.
    pub attempts: u32,
}

impl RawResponse {
    pub fn text(text: impl Into<String>) -> Self {
        RawResponse {
            text: text.into(),
            first_token_probs: None,
            attempts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingResult {
    pub raw_text: String,
    pub windows: WindowSet,
}

/// Anything that can answer grounding, reflection and answer calls.
///
/// Implementations are shared across concurrently running searches and must
/// keep all per-call state local.
pub trait Backend: Send + Sync {
    fn call(&self, call: &BackendCall) -> Result<RawResponse>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn call(&self, call: &BackendCall) -> Result<RawResponse> {
        (**self).call(call)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn call(&self, call: &BackendCall) -> Result<RawResponse> {
        (**self).call(call)
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn call(&self, call: &BackendCall) -> Result<RawResponse> {
        (**self).call(call)
    }
}
