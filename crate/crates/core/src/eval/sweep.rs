//! Threshold / floor sweeps over synthetic oracle videos.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{OracleBackend, OracleSpec};
use crate::error::{Error, Result};
use crate::search::{hierarchical_search, Query, SearchConfig};
use crate::seeds::{rng_for, stream_seed, substream};
use crate::temporal::{best_iou, VideoTimeline, WindowSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub videos: usize,
    pub min_duration: f64,
    pub max_duration: f64,
    /// Ground-truth length as a fraction of the video, drawn uniformly.
    pub min_event_fraction: f64,
    pub max_event_fraction: f64,
    pub noise_sigma: f64,
    pub slope: f64,
    pub intercept: f64,
    pub seed: u64,
    /// Everything but epsilon and delta.
    pub search: SearchConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            epsilons: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            deltas: vec![150.0, 300.0, 600.0, 1200.0, 1e9],
            videos: 50,
            min_duration: 600.0,
            max_duration: 3600.0,
            min_event_fraction: 0.01,
            max_event_fraction: 0.1,
            noise_sigma: 0.0,
            slope: 10.0,
            intercept: -5.0,
            seed: 0,
            search: SearchConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.deltas.is_empty() || self.videos == 0 {
            return Err(Error::invalid(
                "sweep needs at least one epsilon, one delta and one video",
            ));
        }
        if !(self.min_duration > 0.0
            && self.min_duration <= self.max_duration
            && self.max_duration.is_finite())
        {
            return Err(Error::invalid(
                "sweep durations must satisfy 0 < min <= max",
            ));
        }
        if !(0.0 < self.min_event_fraction
            && self.min_event_fraction <= self.max_event_fraction
            && self.max_event_fraction <= 1.0)
        {
            return Err(Error::invalid(
                "event fractions must satisfy 0 < min <= max <= 1",
            ));
        }
        for &e in &self.epsilons {
            for &d in &self.deltas {
                SearchConfig {
                    epsilon: e,
                    delta: d,
                    ..self.search.clone()
                }
                .validate()?;
            }
        }
        Ok(())
    }
}

/// One synthetic video with a single ground-truth event.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVideo {
    pub video_id: String,
    pub duration: f64,
    pub query: String,
    pub ground_truth: WindowSet,
    pub oracle_seed: u64,
}

/// Instances come from the `sweep` substream, oracle noise seeds from the
/// `oracle` substream, so changing one never shifts the other.
pub fn synthetic_videos(spec: &SweepSpec) -> Result<Vec<SyntheticVideo>> {
    let mut rng = rng_for(substream(spec.seed, "sweep"), &[b"videos"]);
    let oracle_root = substream(spec.seed, "oracle");
    (0..spec.videos)
        .map(|i| {
            let duration = rng.random_range(spec.min_duration..=spec.max_duration);
            let len =
                duration * rng.random_range(spec.min_event_fraction..=spec.max_event_fraction);
            let start = rng.random_range(0.0..=duration - len);
            Ok(SyntheticVideo {
                video_id: format!("sim{i:04}"),
                duration,
                query: format!("event {i}"),
                ground_truth: WindowSet::from_pairs(&[(start, start + len)])?,
                oracle_seed: stream_seed(oracle_root, &[&(i as u64).to_le_bytes()]),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    pub mean_steps: f64,
    pub mean_iou: f64,
    pub mean_cost_ms: f64,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let videos = synthetic_videos(spec)?;
    let mut backend = OracleBackend::new();
    for v in &videos {
        let mut o = OracleSpec::new(v.ground_truth.clone(), v.oracle_seed);
        o.noise_sigma = spec.noise_sigma;
        o.slope = spec.slope;
        o.intercept = spec.intercept;
        backend.insert(&v.video_id, &v.query, o)?;
    }
    let timelines = videos
        .iter()
        .map(|v| VideoTimeline::from_duration(v.duration))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &delta in &spec.deltas {
        for &epsilon in &spec.epsilons {
            let cfg = SearchConfig {
                epsilon,
                delta,
                ..spec.search.clone()
            };
            let (mut steps, mut iou, mut cost) = (0.0, 0.0, 0.0);
            for (v, t) in videos.iter().zip(&timelines) {
                let r =
                    hierarchical_search(&v.video_id, t, &Query::open(&v.query), &backend, &cfg)?;
                steps += r.steps as f64;
                iou += best_iou(&r.best_windows, &v.ground_truth);
                cost += r.modeled_cost_ms;
            }
            let n = videos.len() as f64;
            rows.push(SweepRow {
                epsilon,
                delta,
                mean_steps: steps / n,
                mean_iou: iou / n,
                mean_cost_ms: cost / n,
            });
        }
    }
    Ok(rows)
}

/// Columns `epsilon,delta,mean_steps,mean_iou,mean_cost_ms`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}
