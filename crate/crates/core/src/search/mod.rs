//! Confidence-guided hierarchical search.
//!
//! The whole video is grounded and reflected on first. Nodes are then taken
//! from a max-priority queue keyed by reflection confidence: the best-so-far
//! is replaced whenever a dequeued node's confidence is at least as high, the
//! search stops once a dequeued node reaches `epsilon`, and otherwise the node
//! is split into begin/mid/end children. Children at least `delta` seconds
//! long are grounded, reflected and enqueued; shorter ones are dropped.
//! Because every evaluated node stays queued, a poor branch never traps the
//! search: the next dequeue simply returns to the best remaining segment,
//! however coarse.

mod trace;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::assembly::spotlight_times;
use crate::backend::confidence::{confidence_from_samples, mc_from_tokens, yesno_from_tokens};
use crate::backend::cost::call_cost;
use crate::backend::{
    parse_windows, Backend, BackendCall, CallFootprint, CallKind, Confidence, ConfidenceMode,
    CostTable, YesNoMode,
};
use crate::error::{Error, Result};
use crate::link::{build_prompt, link, AnswerOption, FrameRef, PromptExtras, SequenceRole, Task};
use crate::temporal::{
    default_pad_width, uniform_sample_in, SegmentInterval, VideoTimeline, WindowSet, TIME_EPS,
};

pub use trace::{replay, CallRecord, SearchTrace, TraceEvent, TraceHeader, TRACE_SCHEMA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Stop once a dequeued node's confidence reaches this.
    pub epsilon: f64,
    /// Sub-events shorter than this many seconds are not examined.
    pub delta: f64,
    pub split_ratio: f64,
    /// Frames sampled across a node for its grounding call.
    pub frames_per_node: usize,
    /// Extra frames inside the proposed windows shown during reflection.
    pub spotlight_frames: usize,
    pub dedupe_tolerance: f64,
    pub visual_tokens_per_frame: usize,
    pub max_steps: usize,
    pub yes_no_mode: YesNoMode,
    /// Generations sampled to estimate confidence when the endpoint cannot
    /// report token probabilities.
    pub degraded_samples: usize,
    pub ground_max_tokens: u32,
    pub prefix_cache: bool,
    pub costs: CostTable,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            epsilon: 0.8,
            delta: 600.0,
            split_ratio: 0.5,
            frames_per_node: 64,
            spotlight_frames: 16,
            dedupe_tolerance: 0.5,
            visual_tokens_per_frame: 170,
            max_steps: 32,
            yes_no_mode: YesNoMode::PairNormalized,
            degraded_samples: 5,
            ground_max_tokens: 64,
            prefix_cache: true,
            costs: CostTable::default(),
        }
    }
}

impl SearchConfig {
    /// Lower threshold, coarser floor: about one and a half steps per query.
    pub fn fast() -> Self {
        SearchConfig {
            epsilon: 0.5,
            delta: 1200.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid(format!(
                "epsilon {} not in [0, 1]",
                self.epsilon
            )));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid(format!("delta {} must be > 0", self.delta)));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio <= 1.0) {
            return Err(Error::invalid(format!(
                "split ratio {} not in (0, 1]",
                self.split_ratio
            )));
        }
        if self.frames_per_node == 0 || self.max_steps == 0 || self.visual_tokens_per_frame == 0 {
            return Err(Error::invalid(
                "frames_per_node, max_steps and visual_tokens_per_frame must be >= 1",
            ));
        }
        if !(self.dedupe_tolerance.is_finite() && self.dedupe_tolerance >= 0.0) {
            return Err(Error::invalid("dedupe tolerance must be >= 0"));
        }
        self.costs.validate()
    }
}

/// A query, optionally with answer options. Queries without options are
/// open-ended and reflected on with Yes/No; the rest use multiple choice.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<AnswerOption>,
}

impl Query {
    pub fn open(text: impl Into<String>) -> Self {
        Query {
            text: text.into(),
            options: Vec::new(),
        }
    }

    pub fn choice(text: impl Into<String>, options: Vec<AnswerOption>) -> Self {
        Query {
            text: text.into(),
            options,
        }
    }

    pub fn is_open_ended(&self) -> bool {
        self.options.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.options.iter().map(|o| o.label.as_str()).collect()
    }

    fn reflection_mode(&self) -> ConfidenceMode {
        if self.is_open_ended() {
            ConfidenceMode::Yesno
        } else {
            ConfidenceMode::MultipleChoice
        }
    }
}

/// One node's grounding and reflection outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEvaluation {
    pub windows: WindowSet,
    pub confidence: Confidence,
    pub calls: Vec<(CallFootprint, u32)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Epsilon,
    QueueExhausted,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_windows: WindowSet,
    pub best_confidence: f64,
    pub best_node: SegmentInterval,
    /// Dequeues performed.
    pub steps: usize,
    pub nodes_expanded: usize,
    pub nodes_reflected: usize,
    pub ground_calls: usize,
    pub reflect_calls: usize,
    pub terminated_by: Termination,
    pub modeled_cost_ms: f64,
    pub trace: SearchTrace,
}

pub(crate) trait NodeEvaluator {
    fn evaluate(&mut self, node: usize, interval: &SegmentInterval) -> Result<NodeEvaluation>;
}

struct Queued {
    confidence: f64,
    node: usize,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // Higher confidence first; among equals, earlier insertion first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.confidence
            .total_cmp(&other.confidence)
            .then_with(|| other.node.cmp(&self.node))
    }
}

pub(crate) fn run_search(
    header: TraceHeader,
    evaluator: &mut dyn NodeEvaluator,
) -> Result<SearchResult> {
    let cfg = header.config.clone();
    cfg.validate()?;
    let mut trace = SearchTrace::new(header);
    let mut intervals: Vec<SegmentInterval> = Vec::new();
    let mut evaluations: Vec<NodeEvaluation> = Vec::new();
    let mut queue = BinaryHeap::new();
    let mut cost_ms = 0.0;

    let mut evaluate = |step: usize,
                        parent: Option<usize>,
                        interval: SegmentInterval,
                        trace: &mut SearchTrace,
                        queue: &mut BinaryHeap<Queued>,
                        intervals: &mut Vec<SegmentInterval>,
                        evaluations: &mut Vec<NodeEvaluation>|
     -> Result<()> {
        let node = intervals.len();
        let eval = evaluator.evaluate(node, &interval)?;
        let calls = eval
            .calls
            .iter()
            .map(|&(fp, attempts)| {
                let cost = call_cost(&fp, &cfg.costs, cfg.prefix_cache)?;
                cost_ms += cost.total_ms;
                Ok(CallRecord::new(fp, attempts, cost))
            })
            .collect::<Result<Vec<_>>>()?;
        trace.push(TraceEvent::Evaluate {
            step,
            node,
            parent,
            interval: interval.clone(),
            windows: eval.windows.pairs(),
            confidence: eval.confidence.clone(),
            calls,
            notes: eval.notes.clone(),
        });
        queue.push(Queued {
            confidence: eval.confidence.value,
            node,
        });
        intervals.push(interval);
        evaluations.push(eval);
        Ok(())
    };

    let root = SegmentInterval::root(trace.header.duration)?;
    evaluate(
        0,
        None,
        root,
        &mut trace,
        &mut queue,
        &mut intervals,
        &mut evaluations,
    )?;
    let mut best = 0usize;
    let mut best_confidence = evaluations[0].confidence.value;
    let mut steps = 0usize;
    let mut nodes_expanded = 0usize;

    let terminated_by = loop {
        if queue.is_empty() {
            break Termination::QueueExhausted;
        }
        if steps >= cfg.max_steps {
            break Termination::MaxSteps;
        }
        let Queued { confidence, node } = queue.pop().expect("queue checked non-empty");
        steps += 1;
        trace.push(TraceEvent::Dequeue {
            step: steps,
            node,
            confidence,
        });
        if confidence >= best_confidence {
            best = node;
            best_confidence = confidence;
            trace.push(TraceEvent::UpdateBest {
                step: steps,
                node,
                confidence,
            });
        }
        if confidence >= cfg.epsilon {
            trace.push(TraceEvent::Stop {
                step: steps,
                node,
                confidence,
            });
            break Termination::Epsilon;
        }
        nodes_expanded += 1;
        trace.push(TraceEvent::Expand { step: steps, node });
        let children = intervals[node].split(cfg.split_ratio)?;
        for child in children {
            if child.len() >= cfg.delta - TIME_EPS {
                evaluate(
                    steps,
                    Some(node),
                    child,
                    &mut trace,
                    &mut queue,
                    &mut intervals,
                    &mut evaluations,
                )?;
            } else {
                trace.push(TraceEvent::PruneTooShort {
                    step: steps,
                    parent: node,
                    branch: *child.lineage.last().expect("child has lineage"),
                    length: child.len(),
                });
            }
        }
    };

    let (mut ground_calls, mut reflect_calls) = (0, 0);
    for (fp, _) in evaluations.iter().flat_map(|e| e.calls.iter()) {
        match fp.kind {
            CallKind::Ground => ground_calls += 1,
            k if k.is_reflection() => reflect_calls += 1,
            _ => {}
        }
    }
    trace.push(TraceEvent::Finish {
        steps,
        nodes_reflected: evaluations.len(),
        terminated_by,
        best_node: best,
        best_confidence,
        modeled_cost_ms: cost_ms,
    });
    Ok(SearchResult {
        best_windows: evaluations[best].windows.clone(),
        best_confidence,
        best_node: intervals[best].clone(),
        steps,
        nodes_expanded,
        nodes_reflected: evaluations.len(),
        ground_calls,
        reflect_calls,
        terminated_by,
        modeled_cost_ms: cost_ms,
        trace,
    })
}

/// Evaluates nodes by calling a live backend.
struct LiveEvaluator<'a> {
    video_id: &'a str,
    pad_width: usize,
    query: &'a Query,
    backend: &'a dyn Backend,
    config: &'a SearchConfig,
}

impl NodeEvaluator for LiveEvaluator<'_> {
    fn evaluate(&mut self, _node: usize, interval: &SegmentInterval) -> Result<NodeEvaluation> {
        spotlight_reflect(
            self.video_id,
            self.pad_width,
            interval,
            self.query,
            self.backend,
            self.config,
        )
    }
}

/// Ground `query` inside `segment`, then ask the backend how sure it is of
/// the windows it proposed.
///
/// The reflection prompt repeats the grounding frames (a cacheable prefix)
/// and appends spotlight frames inside the proposed windows. An empty
/// grounding is not reflected on and gets confidence 0.
pub fn spotlight_reflect(
    video_id: &str,
    pad_width: usize,
    segment: &SegmentInterval,
    query: &Query,
    backend: &dyn Backend,
    config: &SearchConfig,
) -> Result<NodeEvaluation> {
    if segment.len() <= 0.0 {
        return Err(Error::invalid("cannot examine a zero-length segment"));
    }
    let window = segment.window();
    let n = config.visual_tokens_per_frame;
    let times = uniform_sample_in(window.start, window.end, config.frames_per_node)?;
    let refs: Vec<FrameRef> = times.iter().map(|&t| FrameRef::at(t, n)).collect();
    let global = link(&refs, pad_width, SequenceRole::Global)?;

    let ground_prompt = build_prompt(
        Task::Ground,
        vec![global.clone()],
        &query.text,
        PromptExtras::default(),
    )?;
    let mut ground = BackendCall::new(ground_prompt, video_id, window);
    ground.max_tokens = config.ground_max_tokens;
    let raw = backend.call(&ground)?;
    let mut calls = vec![(ground.footprint(), raw.attempts)];
    let mut notes = Vec::new();

    let windows = parse_windows(&raw.text, &window);
    let mode = query.reflection_mode();
    if windows.is_empty() {
        notes.push("grounding produced no usable windows".to_string());
        return Ok(NodeEvaluation {
            windows,
            confidence: Confidence::zero(mode),
            calls,
            notes,
        });
    }

    let spot = spotlight_times(
        &windows,
        config.spotlight_frames,
        &times,
        config.dedupe_tolerance,
    )?;
    let mut sequences = vec![global];
    if !spot.is_empty() {
        let refs: Vec<FrameRef> = spot.iter().map(|&t| FrameRef::at(t, n)).collect();
        sequences.push(link(&refs, pad_width, SequenceRole::Spotlight)?);
    }
    let task = match mode {
        ConfidenceMode::Yesno => Task::ReflectYesno,
        ConfidenceMode::MultipleChoice => Task::ReflectMc,
    };
    let extras = PromptExtras {
        options: query.options.clone(),
        prior_windows: Some(windows.clone()),
    };
    let prompt = build_prompt(task, sequences, &query.text, extras)?;
    let reflect = BackendCall::new(prompt, video_id, window).with_cached_prefix(times.len());
    let labels = query.labels();

    let confidence = match backend.call(&reflect) {
        Ok(raw) => {
            calls.push((reflect.footprint(), raw.attempts));
            match (&raw.first_token_probs, mode) {
                (Some(p), ConfidenceMode::Yesno) => yesno_from_tokens(p, config.yes_no_mode)?,
                (Some(p), ConfidenceMode::MultipleChoice) => mc_from_tokens(p, &labels)?,
                (None, _) => {
                    notes.push(
                        "reflection carried no token probabilities; using its text".to_string(),
                    );
                    confidence_from_samples(&[raw.text], mode, &labels)?
                }
            }
        }
        Err(Error::ProtocolDegraded { text }) => {
            calls.push((reflect.footprint(), 1));
            let mut samples = vec![text];
            let mut resample = reflect.clone();
            resample.want_token_probs = false;
            for _ in 1..config.degraded_samples.max(1) {
                let raw = backend.call(&resample)?;
                calls.push((resample.footprint(), raw.attempts));
                samples.push(raw.text);
            }
            notes.push(format!(
                "protocol degraded: confidence estimated from {} sampled generations",
                samples.len()
            ));
            confidence_from_samples(&samples, mode, &labels)?
        }
        Err(e) => return Err(e),
    };
    Ok(NodeEvaluation {
        windows,
        confidence,
        calls,
        notes,
    })
}

/// Run the search for `query` over one video.
pub fn hierarchical_search(
    video_id: &str,
    video: &VideoTimeline,
    query: &Query,
    backend: &dyn Backend,
    config: &SearchConfig,
) -> Result<SearchResult> {
    config.validate()?;
    if video.duration() <= 0.0 {
        return Err(Error::invalid("video duration must be > 0"));
    }
    let header = TraceHeader::new(video_id, video.duration(), query.clone(), config.clone());
    let mut evaluator = LiveEvaluator {
        video_id,
        pad_width: default_pad_width(video.duration()),
        query,
        backend,
        config,
    };
    run_search(header, &mut evaluator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{OracleBackend, OracleSpec, RawResponse};
    use std::sync::Mutex;

    fn oracle(gt: &[(f64, f64)]) -> OracleBackend {
        OracleBackend::single(OracleSpec::new(WindowSet::from_pairs(gt).unwrap(), 3)).unwrap()
    }

    fn video(d: f64) -> VideoTimeline {
        VideoTimeline::from_duration(d).unwrap()
    }

    fn logistic(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn spotlight_on_noise_free_oracle() {
        let b = oracle(&[(100.0, 150.0)]);
        let cfg = SearchConfig::default();
        let seg = SegmentInterval::root(1200.0).unwrap();
        let e = spotlight_reflect("v", 4, &seg, &Query::open("q"), &b, &cfg).unwrap();
        assert_eq!(e.windows.pairs(), vec![(100.0, 150.0)]);
        assert!((e.confidence.value - logistic(5.0)).abs() < 1e-12);
        assert_eq!(e.calls.len(), 2);
        // The spotlight instant at 133.33 s coincides with a node frame.
        assert_eq!(distinct_spotlight(1200.0, 100.0, 150.0), 15);
        assert_eq!(e.calls[1].0.frames_total, 79);
        assert_eq!(e.calls[1].0.frames_uncached, 15);
    }

    /// Spotlight instants over [s, e] not within 0.5 s of one of the 64
    /// node frames spanning [0, d], counted by brute force.
    fn distinct_spotlight(d: f64, s: f64, e: f64) -> usize {
        let node: Vec<f64> = (0..64).map(|i| d * i as f64 / 63.0).collect();
        (0..16)
            .map(|k| s + (e - s) * k as f64 / 15.0)
            .filter(|t| node.iter().all(|n| (n - t).abs() > 0.5))
            .count()
    }

    #[test]
    fn spotlight_when_truth_misses_segment() {
        let b = oracle(&[(100.0, 150.0)]);
        let seg = SegmentInterval {
            start: 600.0,
            end: 1200.0,
            depth: 1,
            lineage: vec![crate::temporal::Branch::End],
        };
        let e = spotlight_reflect(
            "v",
            4,
            &seg,
            &Query::open("q"),
            &b,
            &SearchConfig::default(),
        )
        .unwrap();
        assert_eq!(e.windows.len(), 1);
        assert!((e.confidence.value - logistic(-5.0)).abs() < 1e-12);
    }

    struct Garbage;

    impl Backend for Garbage {
        fn call(&self, _: &BackendCall) -> Result<RawResponse> {
            Ok(RawResponse::text("I cannot tell."))
        }
    }

    #[test]
    fn garbage_grounding_scores_zero() {
        let seg = SegmentInterval::root(100.0).unwrap();
        let e = spotlight_reflect(
            "v",
            3,
            &seg,
            &Query::open("q"),
            &Garbage,
            &SearchConfig::default(),
        )
        .unwrap();
        assert!(e.windows.is_empty());
        assert_eq!(e.confidence.value, 0.0);
        assert_eq!(e.calls.len(), 1);
    }

    /// Grounds like the oracle but never reports probabilities.
    struct NoProbs {
        inner: OracleBackend,
        reflections: Mutex<usize>,
    }

    impl Backend for NoProbs {
        fn call(&self, call: &BackendCall) -> Result<RawResponse> {
            if call.kind.is_reflection() {
                let mut n = self.reflections.lock().unwrap();
                *n += 1;
                let text = if n.is_multiple_of(2) { "Yes" } else { "No" }.to_string();
                if call.want_token_probs {
                    return Err(Error::ProtocolDegraded { text });
                }
                return Ok(RawResponse::text(text));
            }
            self.inner.call(call)
        }
    }

    #[test]
    fn degraded_protocol_falls_back_to_sampling() {
        let b = NoProbs {
            inner: oracle(&[(10.0, 20.0)]),
            reflections: Mutex::new(0),
        };
        let seg = SegmentInterval::root(100.0).unwrap();
        let e = spotlight_reflect(
            "v",
            3,
            &seg,
            &Query::open("q"),
            &b,
            &SearchConfig::default(),
        )
        .unwrap();
        // Five samples alternating No, Yes, No, Yes, No.
        assert!((e.confidence.value - 0.4).abs() < 1e-12);
        assert_eq!(e.calls.len(), 6);
        assert!(e.notes.iter().any(|n| n.contains("protocol degraded")));
    }

    #[test]
    fn single_step_when_delta_exceeds_duration() {
        let b = oracle(&[(100.0, 150.0)]);
        let cfg = SearchConfig {
            epsilon: 1.0,
            delta: 1500.0,
            ..Default::default()
        };
        let r = hierarchical_search("v", &video(1200.0), &Query::open("q"), &b, &cfg).unwrap();
        assert_eq!(r.steps, 1);
        assert_eq!((r.ground_calls, r.reflect_calls), (1, 1));
        assert_eq!(r.terminated_by, Termination::QueueExhausted);
    }

    #[test]
    fn exhaustive_run_reflects_four_nodes() {
        let b = oracle(&[(100.0, 150.0)]);
        let cfg = SearchConfig {
            epsilon: 1.0,
            delta: 600.0,
            ..Default::default()
        };
        let r = hierarchical_search("v", &video(1200.0), &Query::open("q"), &b, &cfg).unwrap();
        assert_eq!(r.nodes_reflected, 4);
        assert_eq!(r.steps, 4);
        assert_eq!(r.terminated_by, Termination::QueueExhausted);
        let pruned = r
            .trace
            .events
            .iter()
            .filter(|e| matches!(e, TraceEvent::PruneTooShort { .. }))
            .count();
        assert_eq!(pruned, 9);
    }

    #[test]
    fn noise_free_search_recovers_truth() {
        let b = oracle(&[(100.0, 150.0)]);
        let cfg = SearchConfig {
            epsilon: 0.9,
            ..Default::default()
        };
        let r = hierarchical_search("v", &video(1200.0), &Query::open("q"), &b, &cfg).unwrap();
        assert_eq!(r.best_windows.pairs(), vec![(100.0, 150.0)]);
        assert_eq!(r.terminated_by, Termination::Epsilon);
        assert_eq!(r.steps, 1);
        let uncached = distinct_spotlight(1200.0, 100.0, 150.0) as f64;
        assert!((r.modeled_cost_ms - (1581.0 + 1496.0 * uncached / 80.0 + 406.0)).abs() < 1e-6);
    }

    #[test]
    fn max_steps_guard() {
        let mut spec = OracleSpec::new(WindowSet::from_pairs(&[(100.0, 150.0)]).unwrap(), 1);
        spec.noise_sigma = 20.0;
        let b = OracleBackend::single(spec).unwrap();
        let cfg = SearchConfig {
            epsilon: 1.0,
            delta: 10.0,
            max_steps: 3,
            ..Default::default()
        };
        let r = hierarchical_search("v", &video(1200.0), &Query::open("q"), &b, &cfg).unwrap();
        assert_eq!(r.steps, 3);
        assert_eq!(r.terminated_by, Termination::MaxSteps);
    }

    #[test]
    fn backtracks_to_coarser_branch() {
        // The begin child looks promising (partial overlap) but the truth sits
        // in the end branch. After begin's children disappoint, the search must
        // return to a queued sibling rather than keep descending.
        let mut spec = OracleSpec::new(WindowSet::from_pairs(&[(900.0, 1190.0)]).unwrap(), 5);
        spec.noise_sigma = 0.0;
        let b = OracleBackend::single(spec).unwrap();
        let cfg = SearchConfig {
            epsilon: 1.0,
            delta: 150.0,
            max_steps: 64,
            ..Default::default()
        };
        let r = hierarchical_search("v", &video(1200.0), &Query::open("q"), &b, &cfg).unwrap();
        let dequeued: Vec<usize> = r
            .trace
            .events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Dequeue { node, .. } => Some(*node),
                _ => None,
            })
            .collect();
        let depth_of = |n: usize| {
            r.trace
                .events
                .iter()
                .find_map(|e| match e {
                    TraceEvent::Evaluate { node, interval, .. } if *node == n => {
                        Some(interval.depth)
                    }
                    _ => None,
                })
                .unwrap()
        };
        assert!(dequeued.windows(2).any(|p| depth_of(p[1]) < depth_of(p[0])));
    }

    #[test]
    fn mc_question_uses_option_reflection() {
        let mut spec = OracleSpec::new(WindowSet::from_pairs(&[(100.0, 150.0)]).unwrap(), 1);
        spec.answer = Some(crate::backend::AnswerRule {
            correct: "B".into(),
            min_iou: 0.5,
        });
        let b = OracleBackend::single(spec).unwrap();
        let q = Query::choice(
            "what is held?",
            vec![AnswerOption::new("A", "cup"), AnswerOption::new("B", "bag")],
        );
        let r = hierarchical_search("v", &video(1200.0), &q, &b, &SearchConfig::default()).unwrap();
        match &r.trace.events[0] {
            TraceEvent::Evaluate {
                confidence, calls, ..
            } => {
                assert_eq!(confidence.mode, ConfidenceMode::MultipleChoice);
                assert_eq!(calls[1].kind, CallKind::ReflectMc);
            }
            other => panic!("unexpected first event {other:?}"),
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let b = oracle(&[(1.0, 2.0)]);
        for cfg in [
            SearchConfig {
                epsilon: 1.5,
                ..Default::default()
            },
            SearchConfig {
                delta: 0.0,
                ..Default::default()
            },
            SearchConfig {
                max_steps: 0,
                ..Default::default()
            },
        ] {
            assert!(hierarchical_search("v", &video(10.0), &Query::open("q"), &b, &cfg).is_err());
        }
    }
}
