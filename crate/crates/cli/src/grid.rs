//! Full experiment grids: every content under every trace and adaptor.
//!
//! Layout under the output directory:
//!
//! ```text
//! <content>/<trace>/<abr>/session.json
//! <content>/<trace>/<abr>/series.csv
//! aggregate/indicators.csv        one row per cell
//! aggregate/features.csv          one row per cell
//! aggregate/per_abr.csv           indicator means per adaptor
//! aggregate/bitrate_over_time.csv per-second means with 95% half-widths
//! aggregate/buffer_over_time.csv
//! aggregate/rebuffer_ratio.csv
//! aggregate/failures.csv
//! manifest.json
//! ```
//!
//! Cells are sorted by `(content, trace, abr)` before anything is written,
//! so the output does not depend on the number of worker threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use abrlab::metrics::{features, indicators, SessionFeatures, SessionIndicators, FEATURE_HEADER};
use abrlab::sim::rebuffer_ratio;
use abrlab::{simulate, ChunkMap, NetworkTrace, PolicyConfig, Registry, SessionConfig, SessionLog};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

/// z-value of a two-sided 95% normal interval.
const Z95: f64 = 1.96;

pub struct ExperimentSpec {
    pub contents: Vec<ChunkMap>,
    pub traces: Vec<NetworkTrace>,
    pub abrs: Vec<String>,
    pub policy: PolicyConfig,
    pub prefetch_chunks: usize,
    pub out_dir: PathBuf,
    pub parallelism: usize,
    pub registry: Registry,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub content: String,
    pub trace: String,
    pub abr: String,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub key: CellKey,
    pub result: Result<SessionLog, String>,
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub cells: Vec<CellOutcome>,
}

impl GridReport {
    pub fn n_failed(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }

    pub fn logs(&self) -> impl Iterator<Item = (&CellKey, &SessionLog)> {
        self.cells
            .iter()
            .filter_map(|c| c.result.as_ref().ok().map(|l| (&c.key, l)))
    }
}

fn check_unique<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            bail!("duplicate {what} id {id:?}");
        }
    }
    Ok(())
}

impl ExperimentSpec {
    fn validate(&self) -> Result<()> {
        if self.contents.is_empty() || self.traces.is_empty() || self.abrs.is_empty() {
            bail!("grid needs at least one content, trace and adaptor");
        }
        if self.parallelism == 0 {
            bail!("parallelism must be at least 1");
        }
        if self.prefetch_chunks == 0 {
            bail!("prefetch must be at least 1 chunk");
        }
        check_unique("content", self.contents.iter().map(|c| c.content_id.as_str()))?;
        check_unique("trace", self.traces.iter().map(|t| t.id()))?;
        check_unique("abr", self.abrs.iter().map(String::as_str))?;
        for abr in &self.abrs {
            self.registry
                .create(abr, self.policy)
                .with_context(|| format!("adaptor {abr}"))?;
        }
        Ok(())
    }

    fn run_cell(&self, content: &ChunkMap, trace: &NetworkTrace, abr: &str) -> Result<SessionLog, String> {
        let policy = self.registry.create(abr, self.policy).map_err(|e| e.to_string())?;
        simulate(&SessionConfig {
            prefetch_chunks: self.prefetch_chunks,
            policy: policy.as_ref(),
            trace,
            chunk_map: content,
        })
        .map_err(|e| e.to_string())
    }
}

/// Runs every cell, then writes per-cell logs, aggregates and the manifest.
/// Cell failures are recorded, not fatal.
pub fn run_grid(spec: &ExperimentSpec) -> Result<GridReport> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for content in &spec.contents {
        for trace in &spec.traces {
            for abr in &spec.abrs {
                let key = CellKey {
                    content: content.content_id.clone(),
                    trace: trace.id().to_string(),
                    abr: abr.to_ascii_lowercase(),
                };
                jobs.push((key, content, trace));
            }
        }
    }
    jobs.sort_by(|a, b| a.0.cmp(&b.0));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .context("starting worker pool")?;
    let cells: Vec<CellOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|(key, content, trace)| CellOutcome {
                key: key.clone(),
                result: spec.run_cell(content, trace, &key.abr),
            })
            .collect()
    });
    let report = GridReport { cells };
    write_outputs(spec, &report)?;
    Ok(report)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn csv_string<F>(header: &[&str], fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    fill(&mut w)?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn indicator_values(i: &SessionIndicators) -> [f64; 6] {
    [
        i.n_switches as f64,
        i.mean_bitrate,
        i.n_rebuffers as f64,
        i.rebuffer_time,
        i.mean_chunk_quality,
        i.mean_chunk_quality_diff,
    ]
}

/// Mean and 95% half-width of a sample; the half-width is 0 for one value.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * var.sqrt() / n.sqrt())
}

/// Per-adaptor, per-bin mean and half-width over the sessions long enough
/// to have that bin.
fn over_time<'a>(
    by_abr: &BTreeMap<&'a str, Vec<&'a SessionLog>>,
    series: impl Fn(&SessionLog) -> &[f64],
) -> Result<String> {
    csv_string(&["abr", "t", "n", "mean", "ci_halfwidth"], |w| {
        for (abr, logs) in by_abr {
            let len = logs.iter().map(|l| series(l).len()).max().unwrap_or(0);
            for k in 0..len {
                let values: Vec<f64> = logs.iter().filter_map(|l| series(l).get(k).copied()).collect();
                let (mean, ci) = mean_ci(&values);
                w.write_record([
                    abr.to_string(),
                    k.to_string(),
                    values.len().to_string(),
                    mean.to_string(),
                    ci.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ManifestTrace<'a> {
    id: &'a str,
    duration: f64,
    extension: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    policy: &'a PolicyConfig,
    prefetch_chunks: usize,
    abrs: Vec<String>,
    contents: Vec<&'a str>,
    traces: Vec<ManifestTrace<'a>>,
    cells: usize,
    failed: usize,
}

fn write_outputs(spec: &ExperimentSpec, report: &GridReport) -> Result<()> {
    let out = &spec.out_dir;
    for (key, log) in report.logs() {
        let dir = out.join(&key.content).join(&key.trace).join(&key.abr);
        write_file(&dir.join("session.json"), &log.to_json())?;
        write_file(&dir.join("series.csv"), &log.series_csv())?;
    }

    let agg = out.join("aggregate");
    let mut header = vec!["content", "trace", "abr"];
    header.extend(abrlab::metrics::INDICATOR_HEADER);
    header.push("startup_delay");
    let text = csv_string(&header, |w| {
        for (key, log) in report.logs() {
            let mut row = vec![key.content.clone(), key.trace.clone(), key.abr.clone()];
            row.extend(indicator_values(&indicators(log)).iter().map(f64::to_string));
            row.push(log.startup_delay.to_string());
            w.write_record(&row)?;
        }
        Ok(())
    })?;
    write_file(&agg.join("indicators.csv"), &text)?;

    let text = csv_string(&FEATURE_HEADER, |w| {
        for (key, log) in report.logs() {
            let SessionFeatures {
                mean_quality,
                rebuffer_duration,
                resolution_switch_mag,
                tll,
            } = features(log);
            w.write_record([
                key.content.clone(),
                key.trace.clone(),
                key.abr.clone(),
                mean_quality.to_string(),
                rebuffer_duration.to_string(),
                resolution_switch_mag.to_string(),
                tll.to_string(),
            ])?;
        }
        Ok(())
    })?;
    write_file(&agg.join("features.csv"), &text)?;

    let mut by_abr: BTreeMap<&str, Vec<&SessionLog>> = BTreeMap::new();
    for (key, log) in report.logs() {
        by_abr.entry(key.abr.as_str()).or_default().push(log);
    }

    let mut header = vec!["abr", "n_sessions"];
    header.extend(abrlab::metrics::INDICATOR_HEADER);
    let text = csv_string(&header, |w| {
        for (abr, logs) in &by_abr {
            let mut sums = [0.0; 6];
            for log in logs {
                for (s, v) in sums.iter_mut().zip(indicator_values(&indicators(log))) {
                    *s += v;
                }
            }
            let mut row = vec![abr.to_string(), logs.len().to_string()];
            row.extend(sums.iter().map(|s| (s / logs.len() as f64).to_string()));
            w.write_record(&row)?;
        }
        Ok(())
    })?;
    write_file(&agg.join("per_abr.csv"), &text)?;

    write_file(
        &agg.join("bitrate_over_time.csv"),
        &over_time(&by_abr, |l| &l.bitrate_series)?,
    )?;
    write_file(
        &agg.join("buffer_over_time.csv"),
        &over_time(&by_abr, |l| &l.buffer_series)?,
    )?;

    let text = csv_string(&["abr", "t", "ratio"], |w| {
        for (abr, logs) in &by_abr {
            for (k, r) in rebuffer_ratio(logs, 1.0)?.iter().enumerate() {
                w.write_record([abr.to_string(), k.to_string(), r.to_string()])?;
            }
        }
        Ok(())
    })?;
    write_file(&agg.join("rebuffer_ratio.csv"), &text)?;

    let text = csv_string(&["content", "trace", "abr", "error"], |w| {
        for cell in &report.cells {
            if let Err(e) = &cell.result {
                w.write_record([&cell.key.content, &cell.key.trace, &cell.key.abr, e])?;
            }
        }
        Ok(())
    })?;
    write_file(&agg.join("failures.csv"), &text)?;

    let mut contents: Vec<&str> = spec.contents.iter().map(|c| c.content_id.as_str()).collect();
    contents.sort();
    let mut traces: Vec<ManifestTrace> = spec
        .traces
        .iter()
        .map(|t| ManifestTrace {
            id: t.id(),
            duration: t.duration(),
            extension: format!("{:?}", t.extension()).to_lowercase(),
        })
        .collect();
    traces.sort_by(|a, b| a.id.cmp(b.id));
    let mut abrs: Vec<String> = spec.abrs.iter().map(|a| a.to_ascii_lowercase()).collect();
    abrs.sort();
    let manifest = Manifest {
        tool: "abrlab",
        version: env!("CARGO_PKG_VERSION"),
        core_version: abrlab::VERSION,
        policy: &spec.policy,
        prefetch_chunks: spec.prefetch_chunks,
        abrs,
        contents,
        traces,
        cells: report.cells.len(),
        failed: report.n_failed(),
    };
    write_file(&out.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
