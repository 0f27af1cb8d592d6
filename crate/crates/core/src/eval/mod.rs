//! Benchmark ingestion, metrics, calibration and corpus runs.

pub mod bench;
pub mod calibration;
pub mod corpus;
pub mod metrics;
pub mod sweep;

pub use bench::{
    run_grounding_benchmark, run_qa_benchmark, BenchConfig, BenchOutput, MetricsReport,
    SampleRecord,
};
pub use calibration::{bernoulli_pairs, calibration_bins, CalibrationBin, CalibrationReport};
pub use corpus::{
    load_grounding_corpus, load_qa_corpus, parse_grounding_corpus, CorpusFormat, GroundingSample,
    Loaded, QASample,
};
pub use metrics::{
    answer_label, mean_iou, recall_at, top_one, top_one_iou, vqa_accuracy, TopOneRule,
    RECALL_THRESHOLDS,
};
pub use sweep::{run_sweep, sweep_csv, SweepRow, SweepSpec};

use crate::search::{SearchTrace, TraceEvent};
use crate::temporal::{best_iou, TemporalWindow, WindowSet};

/// `(reflection confidence, IoU of the reflected windows against the
/// ground truth)` for every node evaluated in `traces`. Traces are matched
/// to ground truth by `(video id, query)`; unmatched traces are skipped.
pub fn reflection_pairs(
    traces: &[SearchTrace],
    truth: impl Fn(&str, &str) -> Option<WindowSet>,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for t in traces {
        let Some(gt) = truth(&t.header.video_id, &t.header.query.text) else {
            continue;
        };
        for e in &t.events {
            if let TraceEvent::Evaluate {
                windows,
                confidence,
                ..
            } = e
            {
                let ws = WindowSet::new(
                    windows
                        .iter()
                        .filter_map(|&(s, e)| TemporalWindow::new(s, e).ok())
                        .collect(),
                );
                out.push((confidence.value, best_iou(&ws, &gt)));
            }
        }
    }
    out
}
