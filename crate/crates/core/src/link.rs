//! Timestamp-linked frame layout and prompt construction.
//!
//! Each frame is followed by its whole-second timestamp rendered as a
//! zero-padded digit string; every timestamp in a prompt has the same width
//! `P`, so a frame costs exactly `N + P` tokens. Nothing here touches pixels
//! or embeddings: the backend renders frames, this module fixes order and text.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal::{quantize, QuantizedTimestamp, WindowSet};

pub const GROUND_INSTRUCTION: &str = "Find the relevant windows";
pub const REFLECT_YESNO_INSTRUCTION: &str = "Are the proposed relevant windows correct?";
pub const REFLECT_MC_INSTRUCTION: &str = "Answer the options directly";
pub const ANSWER_INSTRUCTION: &str = "Answer the following questions related to this video";

/// Appended to every timestamp text part; separates one frame block from the next.
pub const FRAME_DELIMITER: &str = "\n";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRef {
    pub time: f64,
    /// Position in the decoded timeline, when the frame was taken from one.
    pub timeline_index: Option<usize>,
    /// Visual tokens the backend spends on this frame.
    pub visual_tokens: usize,
}

impl FrameRef {
    pub fn at(time: f64, visual_tokens: usize) -> Self {
        FrameRef {
            time,
            timeline_index: None,
            visual_tokens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceRole {
    Global,
    Spotlight,
}

impl SequenceRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SequenceRole::Global => "global",
            SequenceRole::Spotlight => "spotlight",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedFrame {
    pub frame: FrameRef,
    pub timestamp: QuantizedTimestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedFrameSequence {
    pub entries: Vec<LinkedFrame>,
    pub pad_width: usize,
    pub role: SequenceRole,
}

impl LinkedFrameSequence {
    pub fn empty(pad_width: usize, role: SequenceRole) -> Self {
        LinkedFrameSequence {
            entries: Vec::new(),
            pad_width,
            role,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.frame.time).collect()
    }

    pub fn visual_tokens(&self) -> usize {
        self.entries.iter().map(|e| e.frame.visual_tokens).sum()
    }

    pub fn timestamp_tokens(&self) -> usize {
        self.entries.len() * self.pad_width
    }

    /// `T * (N + P)`.
    pub fn token_count(&self) -> usize {
        self.visual_tokens() + self.timestamp_tokens()
    }
}

/// Pair each frame with its padded whole-second timestamp.
pub fn link(
    frames: &[FrameRef],
    pad_width: usize,
    role: SequenceRole,
) -> Result<LinkedFrameSequence> {
    if frames.is_empty() {
        return Err(Error::invalid("cannot link an empty frame list"));
    }
    if frames.windows(2).any(|p| p[1].time < p[0].time) {
        return Err(Error::invalid("frames must be sorted by time"));
    }
    let n = frames[0].visual_tokens;
    if frames.iter().any(|f| f.visual_tokens != n) {
        return Err(Error::invalid(
            "visual token count must be constant across frames",
        ));
    }
    let entries = frames
        .iter()
        .map(|&frame| {
            Ok(LinkedFrame {
                frame,
                timestamp: quantize(frame.time, pad_width)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinkedFrameSequence {
        entries,
        pad_width,
        role,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Ground,
    ReflectYesno,
    ReflectMc,
    Answer,
    SpotlightAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: String,
    pub text: String,
}

impl AnswerOption {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        AnswerOption {
            label: label.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptExtras {
    pub options: Vec<AnswerOption>,
    pub prior_windows: Option<WindowSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task: Task,
    pub sequences: Vec<LinkedFrameSequence>,
    pub query: String,
    pub options: Vec<AnswerOption>,
    pub prior_windows: Option<WindowSet>,
}

impl PromptSpec {
    pub fn instruction(&self) -> &'static str {
        match self.task {
            Task::Ground => GROUND_INSTRUCTION,
            Task::ReflectYesno => REFLECT_YESNO_INSTRUCTION,
            Task::ReflectMc => REFLECT_MC_INSTRUCTION,
            Task::Answer => ANSWER_INSTRUCTION,
            Task::SpotlightAnswer => "Please watch the clip of {r} and answer the question.",
        }
    }

    fn option_lines(&self) -> Vec<String> {
        self.options
            .iter()
            .map(|o| format!("{}. {}", o.label, o.text))
            .collect()
    }

    fn proposed(&self) -> String {
        self.prior_windows
            .as_ref()
            .map(WindowSet::to_bracketed)
            .unwrap_or_else(|| "[]".to_string())
    }

    /// The text segment that follows all frames.
    pub fn text_body(&self) -> String {
        let mut lines = Vec::new();
        match self.task {
            Task::Ground => {
                lines.push(self.query.clone());
                lines.push(GROUND_INSTRUCTION.to_string());
            }
            Task::ReflectYesno => {
                lines.push(self.query.clone());
                lines.push(format!("Proposed time range: {}.", self.proposed()));
                lines.push(REFLECT_YESNO_INSTRUCTION.to_string());
            }
            Task::ReflectMc => {
                lines.push(self.query.clone());
                lines.extend(self.option_lines());
                lines.push(format!("Proposed time range: {}.", self.proposed()));
                lines.push(REFLECT_MC_INSTRUCTION.to_string());
            }
            Task::Answer => {
                lines.push(self.query.clone());
                lines.extend(self.option_lines());
                lines.push(ANSWER_INSTRUCTION.to_string());
            }
            Task::SpotlightAnswer => {
                lines.push(format!(
                    "Please watch the clip of {} and answer the question.",
                    self.proposed()
                ));
                lines.push(self.query.clone());
                lines.extend(self.option_lines());
            }
        }
        lines.join("\n")
    }

    pub fn frame_count(&self) -> usize {
        self.sequences.iter().map(LinkedFrameSequence::len).sum()
    }

    /// Role-tagged message document: one user turn holding every frame
    /// (each followed by its timestamp text) and then the text body.
    pub fn to_messages(&self, resolve: &dyn Fn(&FrameRef) -> String) -> Vec<Message> {
        let mut content = Vec::with_capacity(2 * self.frame_count() + 1);
        for seq in &self.sequences {
            for entry in &seq.entries {
                content.push(ContentPart::Frame {
                    role: seq.role,
                    time: entry.frame.time,
                    r#ref: resolve(&entry.frame),
                });
                content.push(ContentPart::Text {
                    text: format!("{}{}", entry.timestamp.text, FRAME_DELIMITER),
                });
            }
        }
        content.push(ContentPart::Text {
            text: self.text_body(),
        });
        vec![Message {
            role: "user".to_string(),
            content,
        }]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: Vec<ContentPart>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text {
        text: String,
    },
    Frame {
        role: SequenceRole,
        time: f64,
        #[serde(rename = "ref")]
        r#ref: String,
    },
}

pub fn build_prompt(
    task: Task,
    sequences: Vec<LinkedFrameSequence>,
    query: &str,
    extras: PromptExtras,
) -> Result<PromptSpec> {
    if let Some(i) = sequences
        .windows(2)
        .position(|p| p[0].role == SequenceRole::Spotlight && p[1].role == SequenceRole::Global)
    {
        return Err(Error::invalid(format!(
            "global sequence {} follows a spotlight sequence",
            i + 1
        )));
    }
    if let Some(first) = sequences.first() {
        if sequences.iter().any(|s| s.pad_width != first.pad_width) {
            return Err(Error::invalid(
                "all sequences in a prompt must share one pad width",
            ));
        }
    }
    let needs_windows = matches!(
        task,
        Task::ReflectYesno | Task::ReflectMc | Task::SpotlightAnswer
    );
    if needs_windows && extras.prior_windows.is_none() {
        return Err(Error::invalid(format!(
            "{task:?} prompt requires proposed windows"
        )));
    }
    if task == Task::ReflectMc && extras.options.is_empty() {
        return Err(Error::invalid(
            "multiple-choice reflection requires options",
        ));
    }
    Ok(PromptSpec {
        task,
        sequences,
        query: query.to_string(),
        options: extras.options,
        prior_windows: extras.prior_windows,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub visual_tokens: usize,
    pub timestamp_tokens: usize,
    pub text_tokens_estimate: usize,
    pub total_frames: usize,
}

impl TokenBudget {
    pub fn total(&self) -> usize {
        self.visual_tokens + self.timestamp_tokens + self.text_tokens_estimate
    }
}

/// Token accounting for a prompt. Text is estimated at four characters per
/// token since no tokenizer is available here.
pub fn token_budget(spec: &PromptSpec) -> TokenBudget {
    let mut b = TokenBudget::default();
    for seq in &spec.sequences {
        b.visual_tokens += seq.visual_tokens();
        b.timestamp_tokens += seq.timestamp_tokens();
        b.total_frames += seq.len();
    }
    b.text_tokens_estimate = spec.text_body().chars().count().div_ceil(4);
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::uniform_sample;

    fn frames(times: &[f64], n: usize) -> Vec<FrameRef> {
        times.iter().map(|&t| FrameRef::at(t, n)).collect()
    }

    fn texts(seq: &LinkedFrameSequence) -> Vec<String> {
        seq.entries
            .iter()
            .map(|e| e.timestamp.text.clone())
            .collect()
    }

    #[test]
    fn link_quantizes_and_pads() {
        let times = uniform_sample(10.0, 4).unwrap();
        let seq = link(&frames(&times, 8), 2, SequenceRole::Global).unwrap();
        assert_eq!(texts(&seq), ["00", "03", "07", "10"]);

        let seq = link(&frames(&[0.0], 8), 4, SequenceRole::Global).unwrap();
        assert_eq!(texts(&seq), ["0000"]);
    }

    #[test]
    fn link_token_count() {
        let times = uniform_sample(600.0, 64).unwrap();
        let seq = link(&frames(&times, 170), 3, SequenceRole::Global).unwrap();
        assert_eq!(seq.token_count(), 11072);
    }

    #[test]
    fn link_errors() {
        assert!(link(&[], 2, SequenceRole::Global).is_err());
        assert!(link(&frames(&[150.0], 4), 2, SequenceRole::Global).is_err());
        assert!(link(&frames(&[5.0, 1.0], 4), 2, SequenceRole::Global).is_err());
    }

    #[test]
    fn reflect_prompt_text() {
        let seq = link(&frames(&[0.0, 89.0], 4), 2, SequenceRole::Global).unwrap();
        let spec = build_prompt(
            Task::ReflectYesno,
            vec![seq],
            "a person puts down a bag",
            PromptExtras {
                prior_windows: Some(WindowSet::from_pairs(&[(73.0, 89.0)]).unwrap()),
                ..Default::default()
            },
        )
        .unwrap();
        let body = spec.text_body();
        let proposed = body.find("Proposed time range: [[73, 89]]").unwrap();
        let instr = body.find(REFLECT_YESNO_INSTRUCTION).unwrap();
        assert!(proposed < instr);
    }

    #[test]
    fn ground_prompt_ends_with_instruction() {
        let spec = build_prompt(Task::Ground, vec![], "q", PromptExtras::default()).unwrap();
        assert!(spec.text_body().ends_with(GROUND_INSTRUCTION));
    }

    #[test]
    fn spotlight_answer_prompt() {
        let spec = build_prompt(
            Task::SpotlightAnswer,
            vec![],
            "what happens?",
            PromptExtras {
                prior_windows: Some(WindowSet::from_pairs(&[(100.0, 116.0)]).unwrap()),
                options: vec![AnswerOption::new("A", "x")],
            },
        )
        .unwrap();
        assert!(spec
            .text_body()
            .contains("Please watch the clip of [[100, 116]]"));
    }

    #[test]
    fn missing_extras_rejected() {
        assert!(build_prompt(Task::ReflectYesno, vec![], "q", PromptExtras::default()).is_err());
        assert!(build_prompt(Task::SpotlightAnswer, vec![], "q", PromptExtras::default()).is_err());
        let extras = PromptExtras {
            prior_windows: Some(WindowSet::empty()),
            options: vec![],
        };
        assert!(build_prompt(Task::ReflectMc, vec![], "q", extras).is_err());
    }

    #[test]
    fn spotlight_must_follow_global() {
        let g = link(&frames(&[0.0], 4), 2, SequenceRole::Global).unwrap();
        let s = link(&frames(&[5.0], 4), 2, SequenceRole::Spotlight).unwrap();
        assert!(build_prompt(
            Task::Ground,
            vec![s.clone(), g.clone()],
            "q",
            PromptExtras::default()
        )
        .is_err());
        assert!(build_prompt(Task::Ground, vec![g, s], "q", PromptExtras::default()).is_ok());
    }

    #[test]
    fn budgets() {
        let empty = build_prompt(Task::Ground, vec![], "", PromptExtras::default()).unwrap();
        let b = token_budget(&empty);
        assert_eq!(
            (b.visual_tokens, b.timestamp_tokens, b.total_frames),
            (0, 0, 0)
        );

        let g = link(
            &frames(&uniform_sample(600.0, 64).unwrap(), 170),
            3,
            SequenceRole::Global,
        )
        .unwrap();
        let spec =
            build_prompt(Task::Ground, vec![g.clone()], "q", PromptExtras::default()).unwrap();
        let b = token_budget(&spec);
        assert_eq!((b.visual_tokens, b.timestamp_tokens), (10880, 192));

        let s = link(
            &frames(&uniform_sample(16.0, 16).unwrap(), 170),
            3,
            SequenceRole::Spotlight,
        )
        .unwrap();
        let spec = build_prompt(Task::Ground, vec![g, s], "q", PromptExtras::default()).unwrap();
        assert_eq!(token_budget(&spec).total_frames, 80);
    }

    #[test]
    fn messages_are_deterministic_and_ordered() {
        let g = link(&frames(&[0.0, 10.0], 4), 2, SequenceRole::Global).unwrap();
        let s = link(&frames(&[3.0], 4), 2, SequenceRole::Spotlight).unwrap();
        let spec = build_prompt(Task::Ground, vec![g, s], "q", PromptExtras::default()).unwrap();
        let resolve = |f: &FrameRef| format!("frame@{}", f.time);
        let a = serde_json::to_string(&spec.to_messages(&resolve)).unwrap();
        let b = serde_json::to_string(&spec.to_messages(&resolve)).unwrap();
        assert_eq!(a, b);
        let msgs = spec.to_messages(&resolve);
        let roles: Vec<SequenceRole> = msgs[0]
            .content
            .iter()
            .filter_map(|p| match p {
                ContentPart::Frame { role, .. } => Some(*role),
                _ => None,
            })
            .collect();
        assert_eq!(
            roles,
            [
                SequenceRole::Global,
                SequenceRole::Global,
                SequenceRole::Spotlight
            ]
        );
        assert_eq!(
            msgs[0].content[1],
            ContentPart::Text {
                text: "00\n".into()
            }
        );
    }
}
