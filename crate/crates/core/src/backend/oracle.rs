//! Deterministic simulated model for desk-scale testing.
//!
//! The oracle knows the hidden ground truth for each (video, query) pair.
//! Grounding returns the ground truth clipped to the examined segment, with
//! optional Gaussian jitter on each endpoint. Reflection confidence is
//! `logistic(slope * q + intercept)`, where `q` is the best IoU between the
//! proposed windows and the clipped ground truth, so confidence rises
//! monotonically with proposal quality when `slope > 0`.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::confidence::{mc_confidence, Confidence, ConfidenceMode};
use super::{Backend, BackendCall, CallKind, GroundingResult, RawResponse, TokenProb};
use crate::error::{Error, Result};
use crate::seeds::rng_for;
use crate::temporal::{best_iou, merge, TemporalWindow, WindowSet};

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Which option the oracle picks when asked to answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRule {
    pub correct: String,
    /// The oracle answers correctly only when the windows it is shown reach
    /// this IoU with the ground truth.
    pub min_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub ground_truth: WindowSet,
    pub noise_sigma: f64,
    pub slope: f64,
    pub intercept: f64,
    pub answer: Option<AnswerRule>,
    pub seed: u64,
}

impl OracleSpec {
    pub fn new(ground_truth: WindowSet, seed: u64) -> Self {
        OracleSpec {
            ground_truth: merge(&ground_truth),
            noise_sigma: 0.0,
            slope: 10.0,
            intercept: -5.0,
            answer: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "noise sigma {} must be >= 0",
                self.noise_sigma
            )));
        }
        if !(self.slope.is_finite() && self.intercept.is_finite()) {
            return Err(Error::invalid("oracle slope and intercept must be finite"));
        }
        Ok(())
    }

    fn truth_in(&self, segment: &TemporalWindow) -> WindowSet {
        self.ground_truth.restrict(segment)
    }
}

fn segment_key(segment: &TemporalWindow) -> [u8; 16] {
    let mut k = [0u8; 16];
    k[..8].copy_from_slice(&segment.start.to_bits().to_le_bytes());
    k[8..].copy_from_slice(&segment.end.to_bits().to_le_bytes());
    k
}

fn clamp_window(a: f64, b: f64, segment: &TemporalWindow) -> TemporalWindow {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let start = lo.clamp(segment.start, segment.end);
    let end = hi.clamp(segment.start, segment.end);
    TemporalWindow { start, end }
}

pub fn oracle_ground(spec: &OracleSpec, segment: &TemporalWindow, query: &str) -> GroundingResult {
    let mut rng = rng_for(
        spec.seed,
        &[b"ground", &segment_key(segment), query.as_bytes()],
    );
    let truth = spec.truth_in(segment);
    let windows = if truth.is_empty() {
        let len = segment.len();
        let width = len * rng.random_range(0.05..=0.3);
        let start = segment.start + rng.random_range(0.0..=1.0) * (len - width);
        merge(&WindowSet::new(vec![clamp_window(
            start,
            start + width,
            segment,
        )]))
    } else if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        let jittered = truth
            .iter()
            .map(|w| {
                let s = w.start + noise.sample(&mut rng);
                let e = w.end + noise.sample(&mut rng);
                clamp_window(s, e, segment)
            })
            .collect();
        merge(&WindowSet::new(jittered))
    } else {
        truth
    };
    GroundingResult {
        raw_text: windows.to_bracketed_exact(),
        windows,
    }
}

fn proposal_quality(spec: &OracleSpec, segment: &TemporalWindow, proposed: &WindowSet) -> f64 {
    best_iou(proposed, &spec.truth_in(segment))
}

/// Yes/No reflection confidence.
pub fn oracle_reflect(
    spec: &OracleSpec,
    segment: &TemporalWindow,
    proposed: &WindowSet,
) -> Confidence {
    let q = proposal_quality(spec, segment, proposed);
    Confidence {
        value: logistic(spec.slope * q + spec.intercept),
        mode: ConfidenceMode::Yesno,
        option_distribution: None,
        degenerate: false,
    }
}

/// Multiple-choice reflection: the correct option (or the first, absent an
/// answer rule) receives the logistic mass, the rest share the remainder.
pub fn oracle_reflect_mc(
    spec: &OracleSpec,
    segment: &TemporalWindow,
    proposed: &WindowSet,
    labels: &[&str],
) -> Result<Confidence> {
    if labels.is_empty() {
        return Err(Error::invalid("multiple-choice reflection without options"));
    }
    let correct = spec
        .answer
        .as_ref()
        .map(|a| a.correct.as_str())
        .filter(|c| labels.contains(c))
        .unwrap_or(labels[0]);
    let p = oracle_reflect(spec, segment, proposed).value;
    let rest = if labels.len() > 1 {
        (1.0 - p) / (labels.len() - 1) as f64
    } else {
        0.0
    };
    let dist: BTreeMap<String, f64> = labels
        .iter()
        .map(|&l| (l.to_string(), if l == correct { p } else { rest }))
        .collect();
    mc_confidence(&dist)
}

/// Label the oracle answers with after seeing `shown` windows.
pub fn oracle_answer(spec: &OracleSpec, shown: &WindowSet, labels: &[&str]) -> Option<String> {
    let rule = spec.answer.as_ref()?;
    let grounded =
        spec.ground_truth.is_empty() || best_iou(shown, &spec.ground_truth) >= rule.min_iou;
    if grounded {
        return Some(rule.correct.clone());
    }
    labels
        .iter()
        .find(|&&l| l != rule.correct)
        .map(|l| l.to_string())
        .or_else(|| Some(rule.correct.clone()))
}

/// Oracle behind the [`Backend`] interface, keyed by `(video id, query)`.
#[derive(Debug, Clone, Default)]
pub struct OracleBackend {
    subjects: HashMap<(String, String), OracleSpec>,
    fallback: Option<OracleSpec>,
}

impl OracleBackend {
    /// One spec answering every call.
    pub fn single(spec: OracleSpec) -> Result<Self> {
        spec.validate()?;
        Ok(OracleBackend {
            subjects: HashMap::new(),
            fallback: Some(spec),
        })
    }

    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, video_id: &str, query: &str, spec: OracleSpec) -> Result<()> {
        spec.validate()?;
        self.subjects
            .insert((video_id.to_string(), query.to_string()), spec);
        Ok(())
    }

    pub fn spec_for(&self, video_id: &str, query: &str) -> Result<&OracleSpec> {
        self.subjects
            .get(&(video_id.to_string(), query.to_string()))
            .or(self.fallback.as_ref())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "oracle has no ground truth for video {video_id:?} query {query:?}"
                ))
            })
    }
}

impl Backend for OracleBackend {
    fn call(&self, call: &BackendCall) -> Result<RawResponse> {
        let spec = self.spec_for(&call.video_id, &call.prompt.query)?;
        let labels: Vec<&str> = call
            .prompt
            .options
            .iter()
            .map(|o| o.label.as_str())
            .collect();
        let proposed = call.prompt.prior_windows.clone().unwrap_or_default();
        let response = match call.kind {
            CallKind::Ground => {
                RawResponse::text(oracle_ground(spec, &call.segment, &call.prompt.query).raw_text)
            }
            CallKind::ReflectYesno => {
                let c = oracle_reflect(spec, &call.segment, &proposed).value;
                RawResponse {
                    text: if c >= 0.5 { "Yes" } else { "No" }.to_string(),
                    first_token_probs: Some(vec![
                        TokenProb {
                            token: "Yes".into(),
                            prob: c,
                        },
                        TokenProb {
                            token: "No".into(),
                            prob: 1.0 - c,
                        },
                    ]),
                    attempts: 1,
                }
            }
            CallKind::ReflectMc => {
                let c = oracle_reflect_mc(spec, &call.segment, &proposed, &labels)?;
                let dist = c.option_distribution.unwrap_or_default();
                let top = labels.iter().copied().fold(labels[0], |best, l| {
                    if dist[l] > dist[best] {
                        l
                    } else {
                        best
                    }
                });
                RawResponse {
                    text: top.to_string(),
                    first_token_probs: Some(
                        labels
                            .iter()
                            .map(|&l| TokenProb {
                                token: l.to_string(),
                                prob: dist[l],
                            })
                            .collect(),
                    ),
                    attempts: 1,
                }
            }
            CallKind::Answer => {
                let label = oracle_answer(spec, &proposed, &labels)
                    .or_else(|| labels.first().map(|l| l.to_string()))
                    .unwrap_or_default();
                RawResponse::text(format!("The answer is {label}."))
            }
        };
        Ok(response)
    }
}
