//! File formats read and written by the command-line tools.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use abrlab::ladder::{RQPoint, ShotRQCurve};
use abrlab::trace::parse_hsdpa_log;
use abrlab::{ChunkMap, NetworkTrace};
use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TraceFormat {
    /// Canonical CSV if the first line contains a comma, HSDPA log otherwise.
    Auto,
    /// `t_seconds,kbps` with a header row.
    Csv,
    /// `<timestamp_ms> <bytes_received>` per line.
    Hsdpa,
}

/// File stem, used as the trace id.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn load_trace(path: &Path, format: TraceFormat, window: Option<(f64, f64)>) -> Result<NetworkTrace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading trace {}", path.display()))?;
    let id = stem(path);
    let format = match format {
        TraceFormat::Auto => {
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
            if first.contains(',') {
                TraceFormat::Csv
            } else {
                TraceFormat::Hsdpa
            }
        }
        f => f,
    };
    let trace = match format {
        TraceFormat::Csv => NetworkTrace::from_csv(id, &text),
        _ => parse_hsdpa_log(id, &text),
    }
    .with_context(|| format!("parsing trace {}", path.display()))?;
    match window {
        Some((t0, t1)) => trace
            .window(t0, t1)
            .with_context(|| format!("cutting window {t0},{t1} from {}", path.display())),
        None => Ok(trace),
    }
}

pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected t0,t1")?;
    let t0: f64 = a.trim().parse().map_err(|e| format!("t0: {e}"))?;
    let t1: f64 = b.trim().parse().map_err(|e| format!("t1: {e}"))?;
    if !(t0 >= 0.0 && t1 > t0) {
        return Err("need 0 <= t0 < t1".into());
    }
    Ok((t0, t1))
}

pub fn load_chunk_map(path: &Path) -> Result<ChunkMap> {
    let text = fs::read_to_string(path).with_context(|| format!("reading chunk map {}", path.display()))?;
    ChunkMap::from_json(&text).with_context(|| format!("parsing chunk map {}", path.display()))
}

/// Expands directories into their files with the given extension, sorted.
pub fn expand_inputs(paths: &[PathBuf], extension: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|e| e == extension))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!("no .{extension} inputs found");
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RqRow {
    pub shot_id: u32,
    pub duration_s: f64,
    pub resolution_height: u32,
    pub qp: u32,
    pub bits: u64,
    pub quality: f64,
}

/// Reads `shot_id,duration_s,resolution_height,qp,bits,quality` rows into
/// per-shot curves ordered by shot id.
pub fn read_rq_csv(text: &str) -> Result<Vec<ShotRQCurve>> {
    let mut shots: BTreeMap<u32, ShotRQCurve> = BTreeMap::new();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    for (i, row) in reader.deserialize::<RqRow>().enumerate() {
        let row = row.with_context(|| format!("RQ row {}", i + 2))?;
        let shot = shots.entry(row.shot_id).or_insert_with(|| ShotRQCurve {
            shot_id: row.shot_id,
            duration: row.duration_s,
            points: Vec::new(),
        });
        if shot.duration != row.duration_s {
            return Err(anyhow!(
                "RQ row {}: shot {} has durations {} and {}",
                i + 2,
                row.shot_id,
                shot.duration,
                row.duration_s
            ));
        }
        shot.points
            .push(RQPoint::new(row.resolution_height, row.qp, row.bits, row.quality));
    }
    if shots.is_empty() {
        bail!("no RQ rows");
    }
    Ok(shots.into_values().collect())
}

pub fn write_rq_csv(shots: &[ShotRQCurve]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for shot in shots {
        for p in &shot.points {
            w.serialize(RqRow {
                shot_id: shot.shot_id,
                duration_s: shot.duration,
                resolution_height: p.resolution_height,
                qp: p.qp,
                bits: p.bits,
                quality: p.quality,
            })?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// A column of scores, optionally with confidence half-widths, read from a
/// CSV with a `score` column and an optional `ci_halfwidth` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub score: Vec<f64>,
    pub ci_halfwidth: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct ScoreRow {
    score: f64,
    ci_halfwidth: Option<f64>,
}

pub fn read_scores(text: &str) -> Result<Scores> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut score = Vec::new();
    let mut ci = Vec::new();
    for (i, row) in reader.deserialize::<ScoreRow>().enumerate() {
        let row = row.with_context(|| format!("score row {}", i + 2))?;
        score.push(row.score);
        ci.push(row.ci_halfwidth);
    }
    let ci_halfwidth = if !ci.is_empty() && ci.iter().all(Option::is_some) {
        Some(ci.into_iter().flatten().collect())
    } else {
        None
    };
    Ok(Scores { score, ci_halfwidth })
}
