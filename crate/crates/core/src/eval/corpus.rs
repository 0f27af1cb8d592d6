//! Annotation loaders. Only annotation files are read; videos are referred
//! to by id and duration.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link::AnswerOption;
use crate::temporal::{merge, TemporalWindow, WindowSet, TIME_EPS};

/// `WindowSet` as a bare list of `[start, end]` pairs.
mod pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::temporal::{merge, WindowSet};

    pub fn serialize<S: Serializer>(ws: &WindowSet, s: S) -> Result<S::Ok, S::Error> {
        ws.pairs().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<WindowSet, D::Error> {
        let p = Vec::<(f64, f64)>::deserialize(d)?;
        WindowSet::from_pairs(&p)
            .map(|w| merge(&w))
            .map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(ws: &Option<WindowSet>, s: S) -> Result<S::Ok, S::Error> {
            ws.as_ref().map(WindowSet::pairs).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<WindowSet>, D::Error> {
            match Option::<Vec<(f64, f64)>>::deserialize(d)? {
                None => Ok(None),
                Some(p) => WindowSet::from_pairs(&p)
                    .map(|w| Some(merge(&w)))
                    .map_err(serde::de::Error::custom),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingSample {
    pub id: String,
    pub video_id: String,
    pub duration: f64,
    pub query: String,
    #[serde(with = "pairs")]
    pub ground_truth: WindowSet,
}

fn check_span(ws: &WindowSet, duration: f64) -> Result<()> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(format!(
            "duration {duration} must be positive"
        )));
    }
    if ws
        .iter()
        .any(|w| w.start < -TIME_EPS || w.end > duration + TIME_EPS)
    {
        return Err(Error::invalid(format!(
            "ground truth {} leaves [0, {duration}]",
            ws.to_bracketed_exact()
        )));
    }
    Ok(())
}

impl GroundingSample {
    pub fn validate(&self) -> Result<()> {
        if self.ground_truth.is_empty() {
            return Err(Error::invalid(format!(
                "sample {} has no ground truth",
                self.id
            )));
        }
        check_span(&self.ground_truth, self.duration)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QASample {
    pub id: String,
    pub video_id: String,
    pub duration: f64,
    pub question: String,
    pub options: Vec<AnswerOption>,
    pub answer: String,
    #[serde(
        default,
        with = "pairs::option",
        skip_serializing_if = "Option::is_none"
    )]
    pub ground_truth: Option<WindowSet>,
}

impl QASample {
    pub fn validate(&self) -> Result<()> {
        if !self.options.iter().any(|o| o.label == self.answer) {
            return Err(Error::invalid(format!(
                "sample {}: answer {:?} is not an option label",
                self.id, self.answer
            )));
        }
        match &self.ground_truth {
            Some(gt) => check_span(gt, self.duration),
            None => check_span(&WindowSet::empty(), self.duration),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    /// `video start end##sentence` per line.
    CharadesSta,
    /// JSON object `video -> {duration, timestamps, sentences}`.
    ActivitynetCaptions,
    /// One [`GroundingSample`] JSON object per line.
    GenericJsonl,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charades_sta" => Ok(CorpusFormat::CharadesSta),
            "activitynet_captions" => Ok(CorpusFormat::ActivitynetCaptions),
            "generic_jsonl" => Ok(CorpusFormat::GenericJsonl),
            _ => Err(Error::invalid(format!(
                "unknown corpus format {s:?} (charades_sta|activitynet_captions|generic_jsonl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub samples: Vec<T>,
    /// Malformed records that were dropped.
    pub skipped: usize,
}

fn finish<T>(samples: Vec<T>, skipped: usize, origin: &str) -> Result<Loaded<T>> {
    if skipped > 0 {
        warn!("{origin}: skipped {skipped} malformed record(s)");
    }
    if samples.is_empty() {
        return Err(Error::EmptyCorpus(origin.to_string()));
    }
    Ok(Loaded { samples, skipped })
}

fn parse_charades_line(line: &str) -> Option<(String, f64, f64, String)> {
    let (head, sentence) = line.split_once("##")?;
    let mut it = head.split_whitespace();
    let (vid, s, e) = (
        it.next()?,
        it.next()?.parse().ok()?,
        it.next()?.parse().ok()?,
    );
    if it.next().is_some() || sentence.trim().is_empty() {
        return None;
    }
    Some((vid.to_string(), s, e, sentence.trim().to_string()))
}

/// Charades-STA lines carry no duration. It is taken from `durations` when
/// present, otherwise the latest annotated end time for the video.
pub fn parse_charades_sta(
    text: &str,
    durations: &HashMap<String, f64>,
    origin: &str,
) -> Result<Loaded<GroundingSample>> {
    let mut rows = Vec::new();
    let mut skipped = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match parse_charades_line(line) {
            Some(r) if r.1.is_finite() && r.2.is_finite() && r.1 <= r.2 && r.1 >= 0.0 => {
                rows.push(r)
            }
            _ => skipped += 1,
        }
    }
    let mut latest: HashMap<&str, f64> = HashMap::new();
    for (v, _, e, _) in &rows {
        let m = latest.entry(v.as_str()).or_insert(0.0);
        *m = m.max(*e);
    }
    let mut samples = Vec::new();
    for (v, s, e, q) in &rows {
        let duration = durations.get(v).copied().unwrap_or(latest[v.as_str()]);
        let sample = GroundingSample {
            id: format!("{v}#{}", samples.len()),
            video_id: v.clone(),
            duration,
            query: q.clone(),
            ground_truth: merge(&WindowSet::from_pairs(&[(*s, *e)])?),
        };
        match sample.validate() {
            Ok(()) => samples.push(sample),
            Err(_) => skipped += 1,
        }
    }
    finish(samples, skipped, origin)
}

#[derive(Deserialize)]
struct CaptionEntry {
    duration: f64,
    timestamps: Vec<serde_json::Value>,
    sentences: Vec<String>,
}

/// ActivityNet-Captions JSON, one sample per sentence. Timestamps running
/// past the video end are clipped to it.
pub fn parse_activitynet_captions(text: &str, origin: &str) -> Result<Loaded<GroundingSample>> {
    let raw: BTreeMap<String, serde_json::Value> = serde_json::from_str(text)?;
    let mut samples = Vec::new();
    let mut skipped = 0;
    for (video, value) in raw {
        let Ok(entry) = serde_json::from_value::<CaptionEntry>(value) else {
            skipped += 1;
            continue;
        };
        if entry.timestamps.len() != entry.sentences.len() {
            skipped += entry.sentences.len().max(1);
            continue;
        }
        for (ts, sentence) in entry.timestamps.iter().zip(&entry.sentences) {
            let window = serde_json::from_value::<(f64, f64)>(ts.clone())
                .ok()
                .and_then(|(s, e)| TemporalWindow::new(s.max(0.0), e.min(entry.duration)).ok())
                .filter(|w| w.len() > TIME_EPS);
            let sample = window.map(|w| GroundingSample {
                id: format!("{video}#{}", samples.len()),
                video_id: video.clone(),
                duration: entry.duration,
                query: sentence.trim().to_string(),
                ground_truth: WindowSet::new(vec![w]),
            });
            match sample {
                Some(s) if s.validate().is_ok() && !s.query.is_empty() => {
                    samples.push(GroundingSample {
                        ground_truth: merge(&s.ground_truth),
                        ..s
                    })
                }
                _ => skipped += 1,
            }
        }
    }
    finish(samples, skipped, origin)
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(
    text: &str,
    origin: &str,
    valid: impl Fn(&T) -> Result<()>,
) -> Result<Loaded<T>> {
    let mut samples = Vec::new();
    let mut skipped = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<T>(line) {
            Ok(s) if valid(&s).is_ok() => samples.push(s),
            _ => skipped += 1,
        }
    }
    finish(samples, skipped, origin)
}

pub fn parse_generic_jsonl(text: &str, origin: &str) -> Result<Loaded<GroundingSample>> {
    parse_jsonl(text, origin, GroundingSample::validate)
}

pub fn parse_qa_jsonl(text: &str, origin: &str) -> Result<Loaded<QASample>> {
    parse_jsonl(text, origin, QASample::validate)
}

pub fn parse_grounding_corpus(
    text: &str,
    format: CorpusFormat,
    origin: &str,
) -> Result<Loaded<GroundingSample>> {
    match format {
        CorpusFormat::CharadesSta => parse_charades_sta(text, &HashMap::new(), origin),
        CorpusFormat::ActivitynetCaptions => parse_activitynet_captions(text, origin),
        CorpusFormat::GenericJsonl => parse_generic_jsonl(text, origin),
    }
}

pub fn load_grounding_corpus(path: &Path, format: CorpusFormat) -> Result<Loaded<GroundingSample>> {
    let text = std::fs::read_to_string(path)?;
    parse_grounding_corpus(&text, format, &path.display().to_string())
}

pub fn load_qa_corpus(path: &Path) -> Result<Loaded<QASample>> {
    let text = std::fs::read_to_string(path)?;
    parse_qa_jsonl(&text, &path.display().to_string())
}

/// One JSON object per line, readable by [`parse_generic_jsonl`] or
/// [`parse_qa_jsonl`].
pub fn to_jsonl<T: Serialize>(samples: &[T]) -> Result<String> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s)?);
        out.push('\n');
    }
    Ok(out)
}
