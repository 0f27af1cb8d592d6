//! Search traces: an append-only record of every evaluation and queue
//! action, persisted as line-delimited JSON (one header line, then one line
//! per event) and replayable without a backend.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{
    run_search, NodeEvaluation, NodeEvaluator, Query, SearchConfig, SearchResult, Termination,
};
use crate::backend::{CallCost, CallFootprint, CallKind, Confidence};
use crate::error::{Error, Result};
use crate::temporal::{Branch, SegmentInterval, TemporalWindow, WindowSet};

pub const TRACE_SCHEMA: &str = "tzoom.trace/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub video_id: String,
    pub duration: f64,
    pub query: Query,
    pub config: SearchConfig,
}

impl TraceHeader {
    pub fn new(video_id: &str, duration: f64, query: Query, config: SearchConfig) -> Self {
        TraceHeader {
            schema: TRACE_SCHEMA.to_string(),
            video_id: video_id.to_string(),
            duration,
            query,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub kind: CallKind,
    pub frames_total: usize,
    pub frames_uncached: usize,
    pub attempts: u32,
    pub prefill_ms: f64,
    pub decode_ms: f64,
    pub total_ms: f64,
}

impl CallRecord {
    pub fn new(fp: CallFootprint, attempts: u32, cost: CallCost) -> Self {
        CallRecord {
            kind: fp.kind,
            frames_total: fp.frames_total,
            frames_uncached: fp.frames_uncached,
            attempts,
            prefill_ms: cost.prefill_ms,
            decode_ms: cost.decode_ms,
            total_ms: cost.total_ms,
        }
    }

    pub fn footprint(&self) -> CallFootprint {
        CallFootprint {
            kind: self.kind,
            frames_total: self.frames_total,
            frames_uncached: self.frames_uncached,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum TraceEvent {
    /// A node was grounded, reflected on and enqueued.
    Evaluate {
        step: usize,
        node: usize,
        parent: Option<usize>,
        interval: SegmentInterval,
        windows: Vec<(f64, f64)>,
        confidence: Confidence,
        calls: Vec<CallRecord>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        notes: Vec<String>,
    },
    Dequeue {
        step: usize,
        node: usize,
        confidence: f64,
    },
    UpdateBest {
        step: usize,
        node: usize,
        confidence: f64,
    },
    Stop {
        step: usize,
        node: usize,
        confidence: f64,
    },
    Expand {
        step: usize,
        node: usize,
    },
    PruneTooShort {
        step: usize,
        parent: usize,
        branch: Branch,
        length: f64,
    },
    Finish {
        steps: usize,
        nodes_reflected: usize,
        terminated_by: Termination,
        best_node: usize,
        best_confidence: f64,
        modeled_cost_ms: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

impl SearchTrace {
    pub fn new(header: TraceHeader) -> Self {
        SearchTrace {
            header,
            events: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.events.last(), Some(TraceEvent::Finish { .. }))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Read one trace. Blank lines are ignored.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<SearchTrace> {
        let mut lines = input
            .lines()
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let header_line = lines
            .next()
            .ok_or_else(|| Error::invalid("trace is empty"))??;
        let header: TraceHeader = serde_json::from_str(&header_line)?;
        if header.schema != TRACE_SCHEMA {
            return Err(Error::invalid(format!(
                "unsupported trace schema {:?} (expected {TRACE_SCHEMA})",
                header.schema
            )));
        }
        let events = lines
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect::<Result<Vec<TraceEvent>>>()?;
        Ok(SearchTrace { header, events })
    }

    pub fn from_jsonl(text: &str) -> Result<SearchTrace> {
        Self::read_jsonl(text.as_bytes())
    }

    /// Read every trace in a file holding several concatenated traces.
    pub fn read_all_jsonl(text: &str) -> Result<Vec<SearchTrace>> {
        let mut out = Vec::new();
        let mut current: Option<String> = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            if line.contains("\"schema\"") && !line.contains("\"action\"") {
                if let Some(chunk) = current.take() {
                    out.push(Self::from_jsonl(&chunk)?);
                }
                current = Some(String::new());
            }
            let chunk = current
                .as_mut()
                .ok_or_else(|| Error::invalid("trace event before any header"))?;
            chunk.push_str(line);
            chunk.push('\n');
        }
        if let Some(chunk) = current {
            out.push(Self::from_jsonl(&chunk)?);
        }
        Ok(out)
    }
}

struct RecordedEvaluator {
    nodes: HashMap<usize, (SegmentInterval, NodeEvaluation)>,
}

impl NodeEvaluator for RecordedEvaluator {
    fn evaluate(&mut self, node: usize, interval: &SegmentInterval) -> Result<NodeEvaluation> {
        let (recorded, eval) = self
            .nodes
            .get(&node)
            .ok_or_else(|| Error::invalid(format!("trace has no evaluation for node {node}")))?;
        if recorded != interval {
            return Err(Error::invalid(format!(
                "trace evaluated node {node} over [{}, {}] but replay reached [{}, {}]",
                recorded.start, recorded.end, interval.start, interval.end
            )));
        }
        Ok(eval.clone())
    }
}

/// Recompute a search result from a recorded trace alone.
///
/// The search is re-run with every node evaluation served from the trace and
/// costs recomputed from the recorded call shapes; the regenerated event
/// stream must match the recording exactly.
pub fn replay(trace: &SearchTrace) -> Result<SearchResult> {
    if !trace.is_complete() {
        return Err(Error::invalid("trace is truncated: no finish record"));
    }
    let mut nodes = HashMap::new();
    for e in &trace.events {
        if let TraceEvent::Evaluate {
            node,
            interval,
            windows,
            confidence,
            calls,
            notes,
            ..
        } = e
        {
            let windows = WindowSet::new(
                windows
                    .iter()
                    .map(|&(s, e)| TemporalWindow::new(s, e))
                    .collect::<Result<Vec<_>>>()?,
            );
            let eval = NodeEvaluation {
                windows: crate::temporal::merge(&windows),
                confidence: confidence.clone(),
                calls: calls.iter().map(|c| (c.footprint(), c.attempts)).collect(),
                notes: notes.clone(),
            };
            nodes.insert(*node, (interval.clone(), eval));
        }
    }
    let mut evaluator = RecordedEvaluator { nodes };
    let result = run_search(trace.header.clone(), &mut evaluator)?;
    if let Some(i) = result
        .trace
        .events
        .iter()
        .zip(&trace.events)
        .position(|(a, b)| a != b)
    {
        return Err(Error::invalid(format!(
            "trace diverges from its replay at event {i}"
        )));
    }
    if result.trace.events.len() != trace.events.len() {
        return Err(Error::invalid(format!(
            "replay produced {} events, trace holds {}",
            result.trace.events.len(),
            trace.events.len()
        )));
    }
    Ok(result)
}
