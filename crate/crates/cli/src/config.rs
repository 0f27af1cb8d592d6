//! Run configuration: built-in defaults, overlaid by a TOML file, overlaid
//! by command-line flags.
//!
//! File schema (every key optional):
//!
//! ```toml
//! backend = "oracle"          # or "remote"
//! seed = 0
//! jobs = 1
//! top_one = "longest"         # or "first"
//!
//! [search]                    # epsilon, delta, split_ratio, frames_per_node,
//! epsilon = 0.8               # spotlight_frames, max_steps, prefix_cache,
//! delta = 600.0               # yes_no_mode, degraded_samples, ...
//! [search.costs.grounding]
//! reference_frames = 64
//! prefill_ms = 1157.0
//! decode_ms = 424.0
//!
//! [assembly]                  # global_frames, spotlight_frames_max,
//! global_frames = 64          # dedupe_tolerance, visual_tokens_per_frame
//!
//! [remote]                    # endpoint, model, frame_uri_template,
//! endpoint = "http://..."     # timeout_ms, retry
//!
//! [oracle]                    # noise_sigma, slope, intercept, answer_min_iou
//! noise_sigma = 0.0
//!
//! [sweep]                     # epsilons, deltas, videos, min_duration, ...
//!
//! [output]
//! trace = "trace.jsonl"
//! results = "results.csv"
//! ```
//!
//! The endpoint credential is never read from the file; it comes from the
//! `TZOOM_API_KEY` environment variable.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tzoom_core::assembly::AssemblyConfig;
use tzoom_core::backend::{RemoteConfig, RetryPolicy};
use tzoom_core::eval::{SweepSpec, TopOneRule};
use tzoom_core::search::SearchConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Oracle,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSection {
    pub endpoint: Option<String>,
    pub model: String,
    pub frame_uri_template: String,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
}

impl Default for RemoteSection {
    fn default() -> Self {
        let d = RemoteConfig::new("");
        RemoteSection {
            endpoint: None,
            model: d.model,
            frame_uri_template: d.frame_uri_template,
            timeout_ms: d.timeout_ms,
            retry: d.retry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub noise_sigma: f64,
    pub slope: f64,
    pub intercept: f64,
    /// QA runs: the oracle answers correctly once the windows it is shown
    /// reach this IoU with the annotated window.
    pub answer_min_iou: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            noise_sigma: 0.0,
            slope: 10.0,
            intercept: -5.0,
            answer_min_iou: 0.5,
        }
    }
}

/// Grid and synthetic corpus for `simulate`. Oracle behaviour comes from
/// `[oracle]`, search settings from `[search]` and the seed from `seed`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub videos: usize,
    pub min_duration: f64,
    pub max_duration: f64,
    pub min_event_fraction: f64,
    pub max_event_fraction: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepSpec::default();
        SweepSection {
            epsilons: d.epsilons,
            deltas: d.deltas,
            videos: d.videos,
            min_duration: d.min_duration,
            max_duration: d.max_duration,
            min_event_fraction: d.min_event_fraction,
            max_event_fraction: d.max_event_fraction,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub trace: Option<PathBuf>,
    pub results: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<BackendKind>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub top_one: Option<TopOneRule>,
    pub search: SearchConfig,
    pub assembly: AssemblyConfig,
    pub remote: RemoteSection,
    pub oracle: OracleSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flags shared by every subcommand. `None` leaves the file or default value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonFlags {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Reflection confidence at which the search stops.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Shortest sub-event (seconds) the search still splits into.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub split_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub global_frames: Option<usize>,
    #[arg(long, global = true)]
    pub spotlight_frames: Option<usize>,
    #[arg(long, global = true)]
    pub frames_per_node: Option<usize>,
    #[arg(long, global = true)]
    pub max_steps: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub backend: Option<BackendKind>,
    /// Model endpoint URL for the remote backend.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Parallel samples during eval.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write search traces (JSON lines) here.
    #[arg(long, global = true)]
    pub trace_out: Option<PathBuf>,
    /// Write the results table (CSV) here instead of standard output.
    #[arg(long, global = true)]
    pub results_out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub remote: RemoteConfig,
    pub search: SearchConfig,
    pub assembly: AssemblyConfig,
    pub oracle: OracleSection,
    pub sweep: SweepSpec,
    pub seed: u64,
    pub jobs: usize,
    pub top_one: TopOneRule,
    pub trace_out: Option<PathBuf>,
    pub results_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(flags: &CommonFlags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::merge(file, flags)
    }

    pub fn merge(file: FileConfig, flags: &CommonFlags) -> Result<Self> {
        let mut search = file.search;
        let mut assembly = file.assembly;
        if let Some(v) = flags.epsilon {
            search.epsilon = v;
        }
        if let Some(v) = flags.delta {
            search.delta = v;
        }
        if let Some(v) = flags.split_ratio {
            search.split_ratio = v;
        }
        if let Some(v) = flags.frames_per_node {
            search.frames_per_node = v;
        }
        if let Some(v) = flags.max_steps {
            search.max_steps = v;
        }
        if let Some(v) = flags.global_frames {
            assembly.global_frames = v;
        }
        if let Some(v) = flags.spotlight_frames {
            search.spotlight_frames = v;
            assembly.spotlight_frames_max = v;
        }
        search.validate()?;
        assembly.validate()?;

        let backend = flags.backend.or(file.backend).unwrap_or_default();
        let endpoint = flags
            .endpoint
            .clone()
            .or(file.remote.endpoint)
            .unwrap_or_default();
        if backend == BackendKind::Remote && endpoint.trim().is_empty() {
            bail!("the remote backend needs an endpoint (--endpoint or [remote].endpoint)");
        }
        let remote = RemoteConfig {
            endpoint,
            model: file.remote.model,
            frame_uri_template: file.remote.frame_uri_template,
            timeout_ms: file.remote.timeout_ms,
            retry: file.remote.retry,
        };
        let seed = flags.seed.or(file.seed).unwrap_or(0);
        let jobs = flags.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        let sweep = SweepSpec {
            epsilons: file.sweep.epsilons,
            deltas: file.sweep.deltas,
            videos: file.sweep.videos,
            min_duration: file.sweep.min_duration,
            max_duration: file.sweep.max_duration,
            min_event_fraction: file.sweep.min_event_fraction,
            max_event_fraction: file.sweep.max_event_fraction,
            noise_sigma: file.oracle.noise_sigma,
            slope: file.oracle.slope,
            intercept: file.oracle.intercept,
            seed,
            search: search.clone(),
        };
        Ok(RunConfig {
            backend,
            remote,
            search,
            assembly,
            oracle: file.oracle,
            sweep,
            seed,
            jobs,
            top_one: file.top_one.unwrap_or_default(),
            trace_out: flags.trace_out.clone().or(file.output.trace),
            results_out: flags.results_out.clone().or(file.output.results),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file_or_flags() {
        let c = RunConfig::merge(FileConfig::default(), &CommonFlags::default()).unwrap();
        assert_eq!(c.search, SearchConfig::default());
        assert_eq!(c.assembly.global_frames, 64);
        assert_eq!(c.backend, BackendKind::Oracle);
        assert_eq!(c.jobs, 1);
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: FileConfig = toml::from_str(
            "seed = 9\n[search]\nepsilon = 0.6\ndelta = 300.0\n[assembly]\nglobal_frames = 32\n",
        )
        .unwrap();
        let flags = CommonFlags {
            epsilon: Some(0.95),
            ..Default::default()
        };
        let c = RunConfig::merge(file, &flags).unwrap();
        assert_eq!(c.search.epsilon, 0.95);
        assert_eq!(c.search.delta, 300.0);
        assert_eq!(c.search.split_ratio, 0.5);
        assert_eq!(c.assembly.global_frames, 32);
        assert_eq!(c.seed, 9);
        assert_eq!(c.sweep.seed, 9);
    }

    #[test]
    fn remote_needs_endpoint() {
        let flags = CommonFlags {
            backend: Some(BackendKind::Remote),
            ..Default::default()
        };
        assert!(RunConfig::merge(FileConfig::default(), &flags).is_err());
        let flags = CommonFlags {
            endpoint: Some("http://127.0.0.1:9/".into()),
            ..flags
        };
        assert!(RunConfig::merge(FileConfig::default(), &flags).is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("[search]\nepsilonn = 0.5\n").is_err());
        assert!(toml::from_str::<FileConfig>("api_key = \"x\"\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let flags = CommonFlags {
            split_ratio: Some(1.5),
            ..Default::default()
        };
        assert!(RunConfig::merge(FileConfig::default(), &flags).is_err());
    }
}
