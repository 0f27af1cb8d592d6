use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tzoom_core::backend::{AnswerRule, Backend, OracleBackend, OracleSpec, RemoteBackend};
use tzoom_core::eval::{
    bernoulli_pairs, calibration_bins, load_grounding_corpus, load_qa_corpus, reflection_pairs,
    run_grounding_benchmark, run_qa_benchmark, run_sweep, sweep_csv, BenchConfig, BenchOutput,
    CorpusFormat,
};
use tzoom_core::link::AnswerOption;
use tzoom_core::search::{hierarchical_search, Query, SearchTrace};
use tzoom_core::seeds::{stream_seed, substream};
use tzoom_core::temporal::{VideoTimeline, WindowSet};

use crate::config::{BackendKind, OracleSection, RunConfig};

#[derive(Debug, clap::Args)]
pub struct SearchArgs {
    /// Video length in seconds.
    #[arg(long)]
    pub duration: f64,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value = "video")]
    pub video_id: String,
    /// Answer option as `LABEL=text`; repeat for each. Switches reflection
    /// to multiple choice.
    #[arg(long = "option", value_name = "LABEL=TEXT")]
    pub options: Vec<String>,
    /// Ground truth for the oracle backend, e.g. `[[100, 150]]`.
    #[arg(long, value_name = "WINDOWS")]
    pub gt: Option<String>,
    /// Oracle grounding noise (seconds); overrides `[oracle].noise_sigma`.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalFormat {
    CharadesSta,
    ActivitynetCaptions,
    GenericJsonl,
    /// Multiple-choice questions, one JSON object per line.
    QaJsonl,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub format: EvalFormat,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Comma-separated thresholds; overrides `[sweep].epsilons`.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    /// Comma-separated floors in seconds; overrides `[sweep].deltas`.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub videos: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct CalibrateArgs {
    /// Traces written by `search` or `eval`.
    #[arg(long, requires_all = ["corpus", "format"], conflicts_with = "synthetic")]
    pub traces: Option<PathBuf>,
    /// Corpus holding the ground truth for those traces.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<EvalFormat>,
    /// Count a node as correct when its IoU reaches this; mean IoU otherwise.
    #[arg(long)]
    pub iou_threshold: Option<f64>,
    /// Draw this many perfectly calibrated synthetic pairs instead.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_windows_arg(text: &str) -> Result<WindowSet> {
    let pairs: Vec<(f64, f64)> = serde_json::from_str(text)
        .with_context(|| format!("windows {text:?} are not of the form [[s, e], ...]"))?;
    Ok(WindowSet::from_pairs(&pairs)?)
}

fn parse_option(text: &str) -> Result<AnswerOption> {
    match text.split_once('=') {
        Some((l, t)) if !l.trim().is_empty() => Ok(AnswerOption::new(l.trim(), t.trim())),
        _ => bail!("option {text:?} must look like LABEL=text"),
    }
}

fn oracle_spec(gt: WindowSet, seed: u64, o: &OracleSection) -> OracleSpec {
    let mut spec = OracleSpec::new(gt, seed);
    spec.noise_sigma = o.noise_sigma;
    spec.slope = o.slope;
    spec.intercept = o.intercept;
    spec
}

fn remote(cfg: &RunConfig) -> Result<Box<dyn Backend>> {
    Ok(Box::new(RemoteBackend::http(cfg.remote.clone())?))
}

pub fn search(cfg: &RunConfig, args: &SearchArgs) -> Result<()> {
    let video = VideoTimeline::from_duration(args.duration)?;
    let options = args
        .options
        .iter()
        .map(|o| parse_option(o))
        .collect::<Result<Vec<_>>>()?;
    let query = Query::choice(&args.query, options);
    let backend: Box<dyn Backend> = match cfg.backend {
        BackendKind::Remote => remote(cfg)?,
        BackendKind::Oracle => {
            let Some(gt) = &args.gt else {
                bail!("the oracle backend needs --gt");
            };
            let mut o = cfg.oracle.clone();
            if let Some(s) = args.noise_sigma {
                o.noise_sigma = s;
            }
            Box::new(OracleBackend::single(oracle_spec(
                parse_windows_arg(gt)?,
                substream(cfg.seed, "oracle"),
                &o,
            ))?)
        }
    };
    let r = hierarchical_search(
        &args.video_id,
        &video,
        &query,
        backend.as_ref(),
        &cfg.search,
    )?;
    if let Some(p) = &cfg.trace_out {
        write_file(p, &r.trace.to_jsonl())?;
    }
    println!("best_windows={}", r.best_windows.to_bracketed());
    println!("best_windows_exact={}", r.best_windows.to_bracketed_exact());
    println!("best_confidence={}", r.best_confidence);
    println!("steps={}", r.steps);
    println!("nodes_reflected={}", r.nodes_reflected);
    println!("ground_calls={}", r.ground_calls);
    println!("reflect_calls={}", r.reflect_calls);
    println!(
        "terminated_by={}",
        serde_json::to_value(r.terminated_by)?
            .as_str()
            .unwrap_or("?")
    );
    println!("modeled_cost_ms={}", r.modeled_cost_ms);
    Ok(())
}

fn sample_seed(root: u64, index: usize) -> u64 {
    stream_seed(substream(root, "oracle"), &[&(index as u64).to_le_bytes()])
}

fn bench_config(cfg: &RunConfig) -> BenchConfig {
    BenchConfig {
        search: cfg.search.clone(),
        assembly: cfg.assembly,
        top_one: cfg.top_one,
        jobs: cfg.jobs,
    }
}

fn corpus_format(f: EvalFormat) -> Option<CorpusFormat> {
    match f {
        EvalFormat::CharadesSta => Some(CorpusFormat::CharadesSta),
        EvalFormat::ActivitynetCaptions => Some(CorpusFormat::ActivitynetCaptions),
        EvalFormat::GenericJsonl => Some(CorpusFormat::GenericJsonl),
        EvalFormat::QaJsonl => None,
    }
}

fn finish_eval(cfg: &RunConfig, out: &BenchOutput, skipped: usize) -> Result<()> {
    if let Some(p) = &cfg.results_out {
        write_file(p, &out.report.results_csv()?)?;
    }
    if let Some(p) = &cfg.trace_out {
        write_file(p, &out.traces_jsonl())?;
    }
    println!("skipped={skipped} {}", out.report.summary());
    Ok(())
}

pub fn eval(cfg: &RunConfig, args: &EvalArgs) -> Result<()> {
    let bench = bench_config(cfg);
    match corpus_format(args.format) {
        Some(format) => {
            let loaded = load_grounding_corpus(&args.corpus, format)?;
            let backend: Box<dyn Backend> = match cfg.backend {
                BackendKind::Remote => remote(cfg)?,
                BackendKind::Oracle => {
                    let mut b = OracleBackend::new();
                    for (i, s) in loaded.samples.iter().enumerate() {
                        b.insert(
                            &s.video_id,
                            &s.query,
                            oracle_spec(
                                s.ground_truth.clone(),
                                sample_seed(cfg.seed, i),
                                &cfg.oracle,
                            ),
                        )?;
                    }
                    Box::new(b)
                }
            };
            let out = run_grounding_benchmark(&loaded.samples, backend.as_ref(), &bench)?;
            finish_eval(cfg, &out, loaded.skipped)
        }
        None => {
            let loaded = load_qa_corpus(&args.corpus)?;
            let backend: Box<dyn Backend> = match cfg.backend {
                BackendKind::Remote => remote(cfg)?,
                BackendKind::Oracle => {
                    let mut b = OracleBackend::new();
                    for (i, s) in loaded.samples.iter().enumerate() {
                        let gt = s.ground_truth.clone().unwrap_or_default();
                        let mut spec = oracle_spec(gt, sample_seed(cfg.seed, i), &cfg.oracle);
                        spec.answer = Some(AnswerRule {
                            correct: s.answer.clone(),
                            min_iou: cfg.oracle.answer_min_iou,
                        });
                        b.insert(&s.video_id, &s.question, spec)?;
                    }
                    Box::new(b)
                }
            };
            let out = run_qa_benchmark(&loaded.samples, backend.as_ref(), &bench)?;
            finish_eval(cfg, &out, loaded.skipped)
        }
    }
}

pub fn simulate(cfg: &RunConfig, args: &SimulateArgs) -> Result<()> {
    if cfg.backend == BackendKind::Remote {
        bail!("simulate runs on the oracle backend only");
    }
    let mut spec = cfg.sweep.clone();
    if let Some(e) = &args.epsilons {
        spec.epsilons = e.clone();
    }
    if let Some(d) = &args.deltas {
        spec.deltas = d.clone();
    }
    if let Some(n) = args.videos {
        spec.videos = n;
    }
    if let Some(s) = args.noise_sigma {
        spec.noise_sigma = s;
    }
    let rows = run_sweep(&spec)?;
    write_or_print(cfg.results_out.as_deref(), &sweep_csv(&rows)?)
}

pub fn calibrate(cfg: &RunConfig, args: &CalibrateArgs) -> Result<()> {
    let pairs = match (&args.traces, args.synthetic) {
        (None, Some(n)) => bernoulli_pairs(n, substream(cfg.seed, "calibration")),
        (Some(traces), None) => {
            let text = fs::read_to_string(traces)
                .with_context(|| format!("reading {}", traces.display()))?;
            let traces = SearchTrace::read_all_jsonl(&text)?;
            let corpus = args.corpus.as_ref().expect("clap enforces --corpus");
            let format = args.format.expect("clap enforces --format");
            let truth: Vec<(String, String, WindowSet)> = match corpus_format(format) {
                Some(f) => load_grounding_corpus(corpus, f)?
                    .samples
                    .into_iter()
                    .map(|s| (s.video_id, s.query, s.ground_truth))
                    .collect(),
                None => load_qa_corpus(corpus)?
                    .samples
                    .into_iter()
                    .filter_map(|s| Some((s.video_id, s.question, s.ground_truth?)))
                    .collect(),
            };
            let lookup = |v: &str, q: &str| {
                truth
                    .iter()
                    .find(|(tv, tq, _)| tv == v && tq == q)
                    .map(|t| t.2.clone())
            };
            let mut pairs = reflection_pairs(&traces, lookup);
            if let Some(t) = args.iou_threshold {
                for p in &mut pairs {
                    p.1 = if p.1 >= t { 1.0 } else { 0.0 };
                }
            }
            pairs
        }
        _ => bail!("calibrate needs either --traces (with --corpus and --format) or --synthetic N"),
    };
    if pairs.is_empty() {
        bail!("no reflection records matched the corpus");
    }
    let report = calibration_bins(&pairs, args.bins)?;
    eprintln!("pairs={} max_gap={:.4}", report.total, report.max_gap());
    write_or_print(cfg.results_out.as_deref(), &report.to_csv()?)
}
