//! Compact input assembly: uniformly sampled global frames followed by
//! spotlight frames sampled inside the selected windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::{link, FrameRef, LinkedFrameSequence, SequenceRole};
use crate::temporal::{
    merge, uniform_sample, uniform_sample_in, TemporalWindow, VideoTimeline, WindowSet, TIME_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssemblyConfig {
    pub global_frames: usize,
    pub spotlight_frames_max: usize,
    /// Spotlight frames closer than this to a global frame are dropped.
    pub dedupe_tolerance: f64,
    pub visual_tokens_per_frame: usize,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            global_frames: 64,
            spotlight_frames_max: 16,
            dedupe_tolerance: 0.5,
            visual_tokens_per_frame: 170,
        }
    }
}

impl AssemblyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.global_frames == 0 {
            return Err(Error::invalid("global frame count must be >= 1"));
        }
        if !(self.dedupe_tolerance.is_finite() && self.dedupe_tolerance >= 0.0) {
            return Err(Error::invalid("dedupe tolerance must be >= 0"));
        }
        Ok(())
    }

    pub fn frame_ceiling(&self) -> usize {
        self.global_frames + self.spotlight_frames_max
    }
}

/// Split `budget` frames across `windows` in proportion to their durations,
/// rounding by largest remainder (earlier windows win ties). When the budget
/// allows, every window receives at least one frame. Windows that receive
/// nothing are omitted.
pub fn allocate(windows: &WindowSet, budget: usize) -> Vec<(TemporalWindow, usize)> {
    let ws = windows.windows();
    if ws.is_empty() || budget == 0 {
        return Vec::new();
    }
    let total: f64 = ws.iter().map(TemporalWindow::len).sum();
    let weights: Vec<f64> = if total > TIME_EPS {
        ws.iter().map(|w| w.len() / total).collect()
    } else {
        vec![1.0 / ws.len() as f64; ws.len()]
    };
    let quotas: Vec<f64> = weights.iter().map(|w| w * budget as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ws.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(budget.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    if budget >= ws.len() {
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let donor = (0..counts.len())
                .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
                .expect("non-empty");
            counts[donor] -= 1;
            counts[empty] += 1;
        }
    }
    ws.iter()
        .copied()
        .zip(counts)
        .filter(|&(_, c)| c > 0)
        .collect()
}

/// Spotlight instants inside `windows`, skipping any within `tolerance` of a
/// time in `avoid` (sorted). Returned in time order.
pub fn spotlight_times(
    windows: &WindowSet,
    budget: usize,
    avoid: &[f64],
    tolerance: f64,
) -> Result<Vec<f64>> {
    let normalized = merge(windows);
    let mut out = Vec::new();
    for (w, count) in allocate(&normalized, budget) {
        for t in uniform_sample_in(w.start, w.end, count)? {
            let near = avoid.partition_point(|&a| a < t - tolerance);
            let clashes = avoid.get(near).is_some_and(|&a| (a - t).abs() <= tolerance);
            let repeat = out.last().is_some_and(|&p: &f64| (t - p).abs() <= TIME_EPS);
            if !clashes && !repeat {
                out.push(t);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledInput {
    pub global: LinkedFrameSequence,
    pub spotlight: LinkedFrameSequence,
    pub source_windows: WindowSet,
}

impl AssembledInput {
    pub fn total_frames(&self) -> usize {
        self.global.len() + self.spotlight.len()
    }

    /// Global first, then spotlight (omitted when empty).
    pub fn sequences(&self) -> Vec<LinkedFrameSequence> {
        let mut v = vec![self.global.clone()];
        if !self.spotlight.is_empty() {
            v.push(self.spotlight.clone());
        }
        v
    }
}

pub fn assemble(
    video: &VideoTimeline,
    windows: &WindowSet,
    config: &AssemblyConfig,
    pad_width: usize,
) -> Result<AssembledInput> {
    config.validate()?;
    let n = config.visual_tokens_per_frame;
    let full = video.full_window();
    let source_windows = merge(windows);
    if source_windows
        .iter()
        .any(|w| w.start < full.start - TIME_EPS || w.end > full.end + TIME_EPS)
    {
        return Err(Error::invalid(format!(
            "windows {} extend past the video (duration {})",
            source_windows.to_bracketed_exact(),
            video.duration()
        )));
    }
    let global_times = uniform_sample(video.duration(), config.global_frames)?;
    let global_refs: Vec<FrameRef> = global_times.iter().map(|&t| FrameRef::at(t, n)).collect();
    let global = link(&global_refs, pad_width, SequenceRole::Global)?;

    let times = spotlight_times(
        &source_windows,
        config.spotlight_frames_max,
        &global_times,
        config.dedupe_tolerance,
    )?;
    let spotlight = if times.is_empty() {
        LinkedFrameSequence::empty(pad_width, SequenceRole::Spotlight)
    } else {
        let refs: Vec<FrameRef> = times.iter().map(|&t| FrameRef::at(t, n)).collect();
        link(&refs, pad_width, SequenceRole::Spotlight)?
    };
    Ok(AssembledInput {
        global,
        spotlight,
        source_windows,
    })
}
