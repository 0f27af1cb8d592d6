//! Corpus runs: search every sample, score it, aggregate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{GroundingSample, QASample};
use super::metrics::{
    answer_label, mean_of, recall_from_ious, top_one_iou, TopOneRule, RECALL_THRESHOLDS,
};
use crate::assembly::{assemble, AssemblyConfig};
use crate::backend::{Backend, BackendCall};
use crate::error::{Error, Result};
use crate::link::{build_prompt, PromptExtras, Task};
use crate::search::{hierarchical_search, Query, SearchConfig, SearchResult, SearchTrace};
use crate::temporal::{default_pad_width, VideoTimeline, WindowSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub search: SearchConfig,
    pub assembly: AssemblyConfig,
    pub top_one: TopOneRule,
    /// Worker threads; 1 runs samples in order on the calling thread.
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            search: SearchConfig::default(),
            assembly: AssemblyConfig::default(),
            top_one: TopOneRule::default(),
            jobs: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            return Err(Error::invalid("jobs must be >= 1"));
        }
        self.search.validate()?;
        self.assembly.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    /// `None` when the sample has no ground-truth window.
    pub iou: Option<f64>,
    pub steps: usize,
    pub cost_ms: f64,
    /// `None` for grounding-only samples.
    pub correct: Option<bool>,
    pub confidence: f64,
    pub best_windows: Vec<(f64, f64)>,
    pub predicted: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub count: usize,
    pub failures: usize,
    /// R@1 at 0.3, 0.5 and 0.7, over samples with ground truth.
    pub recall: Option<[f64; 3]>,
    pub miou: Option<f64>,
    pub vqa_accuracy: Option<f64>,
    /// Means over samples whose search completed.
    pub mean_steps: Option<f64>,
    pub mean_cost_ms: Option<f64>,
    pub records: Vec<SampleRecord>,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub report: MetricsReport,
    /// Per sample, in corpus order; `None` where the search failed.
    pub traces: Vec<Option<SearchTrace>>,
}

impl BenchOutput {
    pub fn traces_jsonl(&self) -> String {
        self.traces
            .iter()
            .flatten()
            .map(SearchTrace::to_jsonl)
            .collect()
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    sample_id: &'a str,
    iou: Option<f64>,
    steps: usize,
    cost_ms: f64,
    correct: Option<bool>,
}

impl MetricsReport {
    /// Columns `sample_id,iou,steps,cost_ms,correct`; missing values blank.
    pub fn results_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(CsvRow {
                sample_id: &r.sample_id,
                iou: r.iou,
                steps: r.steps,
                cost_ms: r.cost_ms,
                correct: r.correct,
            })?;
        }
        if self.records.is_empty() {
            w.write_record(["sample_id", "iou", "steps", "cost_ms", "correct"])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
    }

    pub fn summary(&self) -> String {
        let mut parts = vec![
            format!("samples={}", self.count),
            format!("failures={}", self.failures),
        ];
        if let Some(r) = self.recall {
            parts.push(format!(
                "R@0.3={:.4} R@0.5={:.4} R@0.7={:.4}",
                r[0], r[1], r[2]
            ));
        }
        if let Some(m) = self.miou {
            parts.push(format!("mIoU={m:.4}"));
        }
        if let Some(a) = self.vqa_accuracy {
            parts.push(format!("accuracy={a:.4}"));
        }
        if let Some(s) = self.mean_steps {
            parts.push(format!("mean_steps={s:.4}"));
        }
        if let Some(c) = self.mean_cost_ms {
            parts.push(format!("mean_cost_ms={c:.1}"));
        }
        parts.join(" ")
    }
}

struct Outcome {
    record: SampleRecord,
    trace: Option<SearchTrace>,
}

fn failed(sample_id: &str, has_gt: bool, is_qa: bool, err: Error) -> Outcome {
    log::warn!("sample {sample_id}: {err}");
    Outcome {
        record: SampleRecord {
            sample_id: sample_id.to_string(),
            iou: has_gt.then_some(0.0),
            steps: 0,
            cost_ms: 0.0,
            correct: is_qa.then_some(false),
            confidence: 0.0,
            best_windows: Vec::new(),
            predicted: None,
            error: Some(err.to_string()),
        },
        trace: None,
    }
}

fn searched(
    sample_id: &str,
    r: &SearchResult,
    gt: Option<&WindowSet>,
    rule: TopOneRule,
) -> SampleRecord {
    SampleRecord {
        sample_id: sample_id.to_string(),
        iou: gt.map(|g| top_one_iou(&r.best_windows, g, rule)),
        steps: r.steps,
        cost_ms: r.modeled_cost_ms,
        correct: None,
        confidence: r.best_confidence,
        best_windows: r.best_windows.pairs(),
        predicted: None,
        error: None,
    }
}

fn ground_one(s: &GroundingSample, backend: &dyn Backend, cfg: &BenchConfig) -> Outcome {
    let run = || -> Result<SearchResult> {
        let video = VideoTimeline::from_duration(s.duration)?;
        hierarchical_search(
            &s.video_id,
            &video,
            &Query::open(&s.query),
            backend,
            &cfg.search,
        )
    };
    match run() {
        Ok(r) => Outcome {
            record: searched(&s.id, &r, Some(&s.ground_truth), cfg.top_one),
            trace: Some(r.trace),
        },
        Err(e) => failed(&s.id, true, false, e),
    }
}

/// Search, assemble global plus spotlight frames around the winning windows,
/// then ask the question over that input.
fn answer_one(s: &QASample, backend: &dyn Backend, cfg: &BenchConfig) -> Outcome {
    let video = match VideoTimeline::from_duration(s.duration) {
        Ok(v) => v,
        Err(e) => return failed(&s.id, s.ground_truth.is_some(), true, e),
    };
    let query = Query::choice(&s.question, s.options.clone());
    let r = match hierarchical_search(&s.video_id, &video, &query, backend, &cfg.search) {
        Ok(r) => r,
        Err(e) => return failed(&s.id, s.ground_truth.is_some(), true, e),
    };
    let mut record = searched(&s.id, &r, s.ground_truth.as_ref(), cfg.top_one);
    let ask = || -> Result<Option<String>> {
        let input = assemble(
            &video,
            &r.best_windows,
            &cfg.assembly,
            default_pad_width(s.duration),
        )?;
        let extras = PromptExtras {
            options: s.options.clone(),
            prior_windows: Some(r.best_windows.clone()),
        };
        let prompt = build_prompt(Task::Answer, input.sequences(), &s.question, extras)?;
        let reply = backend.call(&BackendCall::new(prompt, &s.video_id, video.full_window()))?;
        let labels: Vec<&str> = s.options.iter().map(|o| o.label.as_str()).collect();
        Ok(answer_label(&reply.text, &labels))
    };
    match ask() {
        Ok(p) => {
            record.correct = Some(p.as_deref() == Some(s.answer.as_str()));
            record.predicted = p;
        }
        Err(e) => {
            log::warn!("sample {}: answering failed: {e}", s.id);
            record.correct = Some(false);
            record.error = Some(e.to_string());
        }
    }
    Outcome {
        record,
        trace: Some(r.trace),
    }
}

fn run_all<T: Sync>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> Outcome + Sync + Send,
) -> Result<Vec<Outcome>> {
    if jobs <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {jobs} workers: {e}")))?;
    // Indexed collect keeps corpus order whatever the completion order.
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

fn aggregate(outcomes: Vec<Outcome>) -> Result<BenchOutput> {
    let (records, traces): (Vec<_>, Vec<_>) =
        outcomes.into_iter().map(|o| (o.record, o.trace)).unzip();
    let ious: Vec<f64> = records.iter().filter_map(|r| r.iou).collect();
    let answers: Vec<bool> = records.iter().filter_map(|r| r.correct).collect();
    let completed: Vec<&SampleRecord> = records.iter().filter(|r| r.steps > 0).collect();
    let recall = if ious.is_empty() {
        None
    } else {
        let r = recall_from_ious(&ious, &RECALL_THRESHOLDS)?;
        Some([r[0], r[1], r[2]])
    };
    let mean_over = |f: fn(&SampleRecord) -> f64| {
        let xs: Vec<f64> = completed.iter().map(|r| f(r)).collect();
        mean_of(&xs).ok()
    };
    let report = MetricsReport {
        count: records.len(),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        recall,
        miou: mean_of(&ious).ok(),
        vqa_accuracy: (!answers.is_empty())
            .then(|| answers.iter().filter(|&&c| c).count() as f64 / answers.len() as f64),
        mean_steps: mean_over(|r| r.steps as f64),
        mean_cost_ms: mean_over(|r| r.cost_ms),
        records,
    };
    Ok(BenchOutput { report, traces })
}

/// Per-sample failures are recorded and scored as misses; the run goes on.
pub fn run_grounding_benchmark(
    samples: &[GroundingSample],
    backend: &dyn Backend,
    cfg: &BenchConfig,
) -> Result<BenchOutput> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyCorpus("grounding benchmark".into()));
    }
    aggregate(run_all(samples, cfg.jobs, |s| ground_one(s, backend, cfg))?)
}

pub fn run_qa_benchmark(
    samples: &[QASample],
    backend: &dyn Backend,
    cfg: &BenchConfig,
) -> Result<BenchOutput> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyCorpus("QA benchmark".into()));
    }
    aggregate(run_all(samples, cfg.jobs, |s| answer_one(s, backend, cfg))?)
}
