//! Argument definitions and subcommand handlers.

use std::env;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use abrlab::ladder::{build_bitrate_ladder, build_chunk_map, hull_shots};
use abrlab::metrics::{
    continuous_features, features, indicators, outage_rate, rmse, splits_json, srocc, trace_splits, FEATURE_HEADER,
};
use abrlab::{simulate, PolicyConfig, Registry, SessionConfig, SessionLog};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::grid::{run_grid, ExperimentSpec};
use crate::io::{self, TraceFormat};

pub const OUT_ENV: &str = "ABR_LAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "abrlab", version, about = "Adaptive-streaming laboratory: ladders, trace replay, ABR policies and QoE metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one session and print its indicators.
    Simulate(SimulateArgs),
    /// Run every content under every trace and adaptor.
    Grid(GridArgs),
    /// Build hulls, a bitrate ladder and a chunk map from RQ points.
    Ladder(LadderArgs),
    /// Print min, max, mean, standard deviation and CoV of traces in Kbps.
    TraceStats(TraceStatsArgs),
    /// Export retrospective and continuous features of session logs.
    Features(FeaturesArgs),
    /// List the 21 train/test splits of seven traces as JSON.
    Splits(SplitsArgs),
    /// Compare predictions with ground truth: SROCC, RMSE and outage rate.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    /// Buffer-based reservoir in seconds.
    #[arg(long, default_value_t = 5.0)]
    pub reservoir: f64,
    /// Buffer-based cushion in seconds.
    #[arg(long, default_value_t = 4.5)]
    pub cushion: f64,
    /// Throughput estimation window in chunks.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Quality-based planning horizon in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Quality-based minimum buffer in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub bmin: f64,
    /// Quality-based maximum buffer in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub bmax: f64,
    /// Quality-based terminal buffer target in seconds.
    #[arg(long, default_value_t = 3.0)]
    pub btarget: f64,
    /// Chunks fetched at the lowest stream before playback starts.
    #[arg(long, default_value_t = 1)]
    pub prefetch: usize,
}

impl PolicyArgs {
    pub fn config(&self) -> PolicyConfig {
        PolicyConfig {
            reservoir: self.reservoir,
            cushion: self.cushion,
            window: self.window,
            horizon: self.horizon,
            buffer_min: self.bmin,
            buffer_max: self.bmax,
            buffer_target: self.btarget,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    /// Trace file format.
    #[arg(long, value_enum, default_value = "auto")]
    pub trace_format: TraceFormat,
    /// Cut each trace to `t0,t1` seconds before use.
    #[arg(long, value_parser = io::parse_window, value_name = "T0,T1")]
    pub trace_window: Option<(f64, f64)>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Chunk-map JSON.
    #[arg(long)]
    pub content: PathBuf,
    /// Trace file (canonical CSV or HSDPA log).
    #[arg(long)]
    pub trace: PathBuf,
    /// Adaptation policy.
    #[arg(long, default_value = "bb")]
    pub abr: String,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub trace_opts: TraceArgs,
    /// Write the session log JSON here.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Write the per-second series CSV here.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Chunk-map JSON files or directories containing them.
    #[arg(long, required = true, num_args = 1..)]
    pub contents: Vec<PathBuf>,
    /// Trace files or directories containing `.csv` traces.
    #[arg(long, required = true, num_args = 1..)]
    pub traces: Vec<PathBuf>,
    /// Adaptation policies.
    #[arg(long, value_delimiter = ',', default_value = "bb,rb,qb,oqb")]
    pub abr: Vec<String>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub trace_opts: TraceArgs,
    /// Output directory [default: $ABR_LAB_OUT or ./out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

#[derive(Debug, Args)]
pub struct LadderArgs {
    /// RQ-points CSV: `shot_id,duration_s,resolution_height,qp,bits,quality`.
    #[arg(long)]
    pub rq: PathBuf,
    /// Number of ladder rungs (at least 2).
    #[arg(long)]
    pub rungs: usize,
    /// Content id stored in the chunk map [default: RQ file stem].
    #[arg(long)]
    pub content_id: Option<String>,
    /// Write the chunk-map JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceStatsArgs {
    /// Trace files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub trace_opts: TraceArgs,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Session-log JSON files.
    #[arg(required = true)]
    pub sessions: Vec<PathBuf>,
    /// Continuous-feature interval in seconds.
    #[arg(long, default_value_t = 0.25)]
    pub interval: f64,
    /// Directory for `features.csv` and per-session continuous CSVs;
    /// without it the feature matrix goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitsArgs {
    /// Seven comma-separated trace ids.
    #[arg(long, value_delimiter = ',', required = true)]
    pub traces: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions CSV with a `score` column.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth CSV with a `score` column and optionally `ci_halfwidth`
    /// (taken as 0 when absent).
    #[arg(long)]
    pub truth: PathBuf,
}

/// What the process should exit with once a command has finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    CellFailures,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<Outcome> {
    match cli.command {
        Command::Simulate(a) => simulate_cmd(a, out),
        Command::Grid(a) => grid_cmd(a, out),
        Command::Ladder(a) => ladder_cmd(a, out),
        Command::TraceStats(a) => trace_stats_cmd(a, out),
        Command::Features(a) => features_cmd(a, out),
        Command::Splits(a) => splits_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
    }
    .map(|o| o.unwrap_or(Outcome::Ok))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn simulate_cmd(a: SimulateArgs, out: &mut dyn Write) -> Result<Option<Outcome>> {
    let map = io::load_chunk_map(&a.content)?;
    let trace = io::load_trace(&a.trace, a.trace_opts.trace_format, a.trace_opts.trace_window)?;
    let policy = Registry::builtin().create(&a.abr, a.policy.config())?;
    let log = simulate(&SessionConfig {
        prefetch_chunks: a.policy.prefetch,
        policy: policy.as_ref(),
        trace: &trace,
        chunk_map: &map,
    })?;
    let ind = indicators(&log);
    writeln!(out, "content       {}", log.content_id)?;
    writeln!(out, "trace         {}", log.trace_id)?;
    writeln!(out, "abr           {}", log.abr)?;
    writeln!(out, "startup_delay {:.3}", log.startup_delay)?;
    writeln!(out, "wall_time     {:.3}", log.wall_time)?;
    writeln!(out, "n_switches    {}", ind.n_switches)?;
    writeln!(out, "mean_bitrate  {:.1}", ind.mean_bitrate)?;
    writeln!(out, "n_rebuffers   {}", ind.n_rebuffers)?;
    writeln!(out, "rebuffer_time {:.3}", ind.rebuffer_time)?;
    writeln!(out, "chunk_quality {:.2}", ind.mean_chunk_quality)?;
    writeln!(out, "quality_diff  {:.2}", ind.mean_chunk_quality_diff)?;
    if let Some(p) = &a.log {
        write(p, &log.to_json())?;
    }
    if let Some(p) = &a.series {
        write(p, &log.series_csv())?;
    }
    Ok(None)
}

/// `--out`, else `$ABR_LAB_OUT`, else `./out`.
pub fn output_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn grid_cmd(a: GridArgs, out: &mut dyn Write) -> Result<Option<Outcome>> {
    let contents = io::expand_inputs(&a.contents, "json")?
        .iter()
        .map(|p| io::load_chunk_map(p))
        .collect::<Result<Vec<_>>>()?;
    let traces = io::expand_inputs(&a.traces, "csv")?
        .iter()
        .map(|p| io::load_trace(p, a.trace_opts.trace_format, a.trace_opts.trace_window))
        .collect::<Result<Vec<_>>>()?;
    let spec = ExperimentSpec {
        contents,
        traces,
        abrs: a.abr,
        policy: a.policy.config(),
        prefetch_chunks: a.policy.prefetch,
        out_dir: output_root(a.out),
        parallelism: a.parallelism,
        registry: Registry::builtin(),
    };
    let report = run_grid(&spec)?;
    let failed = report.n_failed();
    writeln!(
        out,
        "{} cells, {} failed, output in {}",
        report.cells.len(),
        failed,
        spec.out_dir.display()
    )?;
    for cell in report.cells.iter().filter(|c| c.result.is_err()) {
        if let Err(e) = &cell.result {
            writeln!(out, "failed {}/{}/{}: {e}", cell.key.content, cell.key.trace, cell.key.abr)?;
        }
    }
    Ok(Some(if failed > 0 { Outcome::CellFailures } else { Outcome::Ok }))
}

fn ladder_cmd(a: LadderArgs, out: &mut dyn Write) -> Result<Option<Outcome>> {
    let shots = io::read_rq_csv(&read(&a.rq)?)?;
    let id = a.content_id.unwrap_or_else(|| io::stem(&a.rq));
    let hulls = hull_shots(&shots)?;
    let ladder = build_bitrate_ladder(&hulls, a.rungs)?;
    if ladder.flat {
        eprintln!("warning: every selection has the same quality; the ladder has a single rung");
    }
    let duration: f64 = shots.iter().map(|s| s.duration).sum();
    writeln!(out, "rung,budget_bits,bitrate_kbps,quality,target")?;
    for (i, ((b, q), t)) in ladder
        .budgets
        .iter()
        .zip(&ladder.qualities)
        .zip(&ladder.targets)
        .enumerate()
    {
        writeln!(out, "{i},{b},{:.3},{:.4},{:.4}", *b as f64 / duration / 1000.0, q, t)?;
    }
    if let Some(p) = &a.out {
        let map = build_chunk_map(&id, &hulls, &ladder.budgets)?;
        write(p, &map.to_json())?;
    }
    Ok(None)
}

fn trace_stats_cmd(a: TraceStatsArgs, out: &mut dyn Write) -> Result<Option<Outcome>> {
    writeln!(out, "trace,min_b,max_b,mean_b,std_b,cov")?;
    for f in &a.files {
        let t = io::load_trace(f, a.trace_opts.trace_format, a.trace_opts.trace_window)?;
        let s = t.stats();
        writeln!(
            out,
            "{},{:.0},{:.0},{:.0},{:.0},{:.3}",
            t.id(),
            s.min_b,
            s.max_b,
            s.mean_b,
            s.std_b,
            s.cov
        )?;
    }
    Ok(None)
}

fn features_cmd(a: FeaturesArgs, out: &mut dyn Write) -> Result<Option<Outcome>> {
    let logs = a
        .sessions
        .iter()
        .map(|p| SessionLog::from_json(&read(p)?).with_context(|| format!("parsing {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FEATURE_HEADER)?;
    for log in &logs {
        let f = features(log);
        w.write_record([
            log.content_id.clone(),
            log.trace_id.clone(),
            log.abr.clone(),
            f.mean_quality.to_string(),
            f.rebuffer_duration.to_string(),
            f.resolution_switch_mag.to_string(),
            f.tll.to_string(),
        ])?;
    }
    let matrix = String::from_utf8(w.into_inner()?)?;
    match &a.out {
        None => write!(out, "{matrix}")?,
        Some(dir) => {
            write(&dir.join("features.csv"), &matrix)?;
            for log in &logs {
                let c = continuous_features(log, a.interval)?;
                let name = format!("{}_{}_{}_continuous.csv", log.content_id, log.trace_id, log.abr);
                write(&dir.join(name), &c.to_csv())?;
            }
            writeln!(out, "{} sessions written to {}", logs.len(), dir.display())?;
        }
    }
    Ok(None)
}

fn splits_cmd(a: SplitsArgs, out: &mut dyn Write) -> Result<Option<Outcome>> {
    let splits = trace_splits(&a.traces)?;
    writeln!(out, "{}", splits_json(&splits))?;
    Ok(None)
}

fn eval_cmd(a: EvalArgs, out: &mut dyn Write) -> Result<Option<Outcome>> {
    let pred = io::read_scores(&read(&a.pred)?)?;
    let truth = io::read_scores(&read(&a.truth)?)?;
    if pred.score.len() != truth.score.len() {
        bail!(
            "{} predictions but {} ground-truth scores",
            pred.score.len(),
            truth.score.len()
        );
    }
    let r = srocc(&pred.score, &truth.score)?;
    writeln!(out, "SROCC {r}")?;
    writeln!(out, "RMSE {}", rmse(&pred.score, &truth.score)?)?;
    let ci = truth
        .ci_halfwidth
        .unwrap_or_else(|| vec![0.0; truth.score.len()]);
    writeln!(out, "OR {}", outage_rate(&pred.score, &truth.score, &ci)?)?;
    Ok(None)
}
