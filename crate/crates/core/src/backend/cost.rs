//! Latency model for backend calls.
//!
//! Prefill time grows linearly with the number of frames that must be
//! encoded; decode time is a per-kind constant. With a prefix cache only the
//! frames outside the cached prefix are charged.

use serde::{Deserialize, Serialize};

use super::{CallFootprint, CallKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    /// Frame count at which `prefill_ms` was measured.
    pub reference_frames: f64,
    pub prefill_ms: f64,
    pub decode_ms: f64,
}

impl CostEntry {
    pub fn prefill_for(&self, frames: usize) -> f64 {
        self.prefill_ms * frames as f64 / self.reference_frames
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = self.reference_frames > 0.0 && self.prefill_ms >= 0.0 && self.decode_ms >= 0.0;
        if ok && self.prefill_ms.is_finite() && self.decode_ms.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "cost entry {name} has invalid values {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTable {
    pub grounding: Option<CostEntry>,
    /// Shared by Yes/No and multiple-choice reflection.
    pub reflection: Option<CostEntry>,
    #[serde(default)]
    pub answer: Option<CostEntry>,
}

impl Default for CostTable {
    /// Grounding over 64 frames at 1157 + 424 ms; reflection over 80 frames at
    /// 1496 + 406 ms. No answer entry.
    fn default() -> Self {
        CostTable {
            grounding: Some(CostEntry {
                reference_frames: 64.0,
                prefill_ms: 1157.0,
                decode_ms: 424.0,
            }),
            reflection: Some(CostEntry {
                reference_frames: 80.0,
                prefill_ms: 1496.0,
                decode_ms: 406.0,
            }),
            answer: None,
        }
    }
}

impl CostTable {
    pub fn entry(&self, kind: CallKind) -> Result<&CostEntry> {
        let entry = match kind {
            CallKind::Ground => self.grounding.as_ref(),
            CallKind::ReflectYesno | CallKind::ReflectMc => self.reflection.as_ref(),
            CallKind::Answer => self.answer.as_ref(),
        };
        entry.ok_or_else(|| Error::invalid(format!("cost table has no entry for {kind:?} calls")))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in [
            ("grounding", &self.grounding),
            ("reflection", &self.reflection),
            ("answer", &self.answer),
        ] {
            if let Some(e) = e {
                e.validate(name)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CallCost {
    pub frames_charged: usize,
    pub prefill_ms: f64,
    pub decode_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCost {
    pub per_call: Vec<CallCost>,
    pub total_ms: f64,
}

pub fn call_cost(call: &CallFootprint, table: &CostTable, prefix_cache: bool) -> Result<CallCost> {
    let entry = table.entry(call.kind)?;
    let frames_charged = if prefix_cache {
        call.frames_uncached.min(call.frames_total)
    } else {
        call.frames_total
    };
    let prefill_ms = entry.prefill_for(frames_charged);
    Ok(CallCost {
        frames_charged,
        prefill_ms,
        decode_ms: entry.decode_ms,
        total_ms: prefill_ms + entry.decode_ms,
    })
}

pub fn step_cost(
    calls: &[CallFootprint],
    table: &CostTable,
    prefix_cache: bool,
) -> Result<StepCost> {
    let per_call = calls
        .iter()
        .map(|c| call_cost(c, table, prefix_cache))
        .collect::<Result<Vec<_>>>()?;
    let total_ms = per_call.iter().map(|c| c.total_ms).sum();
    Ok(StepCost { per_call, total_ms })
}
