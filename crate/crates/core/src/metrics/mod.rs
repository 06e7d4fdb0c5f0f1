//! Per-session QoE indicators and features, plus the evaluation statistics.

mod splits;
mod stats;

pub use splits::{splits_json, trace_splits, Split, N_TRACES};
pub use stats::{fractional_ranks, outage_rate, pearson, rmse, srocc};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SessionLog;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("expected 7 trace ids, got {0}")]
    SplitSize(usize),
    #[error("duplicate trace id")]
    DuplicateTrace,
    #[error("interval must be positive")]
    BadInterval,
}

/// Objective indicators of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionIndicators {
    /// Consecutive chunks played from different streams.
    pub n_switches: usize,
    /// Time-weighted playout bitrate after startup, counting stalls as 0.
    pub mean_bitrate: f64,
    pub n_rebuffers: usize,
    pub rebuffer_time: f64,
    /// Unweighted mean over chunks.
    pub mean_chunk_quality: f64,
    /// Mean absolute quality change between consecutive chunks.
    pub mean_chunk_quality_diff: f64,
}

/// Retrospective features of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    /// Duration-weighted over played content.
    pub mean_quality: f64,
    pub rebuffer_duration: f64,
    /// Mean absolute change of resolution height over chunk transitions.
    pub resolution_switch_mag: f64,
    /// Content seconds from the onset of the last minimum-quality chunk to
    /// the end of playback.
    pub tll: f64,
}

pub const FEATURE_HEADER: [&str; 7] = [
    "content",
    "trace",
    "abr",
    "mean_quality",
    "rebuffer_duration",
    "resolution_switch_mag",
    "tll",
];

pub const INDICATOR_HEADER: [&str; 6] = [
    "n_switches",
    "mean_bitrate",
    "n_rebuffers",
    "rebuffer_time",
    "mean_chunk_quality",
    "mean_chunk_quality_diff",
];

fn mean_abs_diff(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    if values.len() < 2 {
        return 0.0;
    }
    let total: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    total / (values.len() - 1) as f64
}

pub fn indicators(log: &SessionLog) -> SessionIndicators {
    let p = &log.playback;
    let span = log.playout_span();
    let kbits: f64 = p.iter().map(|c| c.bitrate_kbps * c.duration).sum();
    SessionIndicators {
        n_switches: p.windows(2).filter(|w| w[0].stream != w[1].stream).count(),
        mean_bitrate: if span > 0.0 { kbits / span } else { 0.0 },
        n_rebuffers: log.rebuffers.len(),
        rebuffer_time: log.rebuffer_time(),
        mean_chunk_quality: if p.is_empty() {
            0.0
        } else {
            p.iter().map(|c| c.quality).sum::<f64>() / p.len() as f64
        },
        mean_chunk_quality_diff: mean_abs_diff(p.iter().map(|c| c.quality)),
    }
}

pub fn features(log: &SessionLog) -> SessionFeatures {
    let p = &log.playback;
    let content: f64 = p.iter().map(|c| c.duration).sum();
    let weighted: f64 = p.iter().map(|c| c.quality * c.duration).sum();
    let min_q = p.iter().map(|c| c.quality).fold(f64::INFINITY, f64::min);
    let mut onset = 0.0;
    let mut last_min_onset = 0.0;
    for c in p {
        if c.quality == min_q {
            last_min_onset = onset;
        }
        onset += c.duration;
    }
    SessionFeatures {
        mean_quality: if content > 0.0 { weighted / content } else { 0.0 },
        rebuffer_duration: log.rebuffer_time(),
        resolution_switch_mag: mean_abs_diff(p.iter().map(|c| c.resolution_height as f64)),
        tll: content - last_min_onset,
    }
}

/// Fixed-interval timelines over the post-startup wall clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousFeatures {
    pub interval: f64,
    /// Played quality integrated over each interval and divided by its full
    /// length, so stalled time and time past the end count as 0.
    pub quality: Vec<f64>,
    /// Any stalled instant within the interval.
    pub rebuffering: Vec<bool>,
    /// At the end of each interval: 0 while stalled, otherwise seconds since
    /// the last stall ended (or since playback started), capped at the
    /// content duration.
    pub time_since_rebuffer: Vec<f64>,
}

impl ContinuousFeatures {
    pub fn len(&self) -> usize {
        self.quality.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quality.is_empty()
    }

    /// `t,quality,rebuffering,time_since_rebuffer`, with `t` the start of
    /// each interval on the post-startup clock.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,quality,rebuffering,time_since_rebuffer\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                k as f64 * self.interval,
                self.quality[k],
                self.rebuffering[k] as u8,
                self.time_since_rebuffer[k]
            ));
        }
        out
    }
}

pub fn continuous_features(log: &SessionLog, interval: f64) -> Result<ContinuousFeatures, MetricsError> {
    if !(interval > 0.0) || !interval.is_finite() {
        return Err(MetricsError::BadInterval);
    }
    let start = log.startup_delay;
    let span = log.playout_span();
    let n = ((span / interval) - 1e-9).ceil().max(0.0) as usize;
    let overlap = |a0: f64, a1: f64, b0: f64, b1: f64| (a1.min(b1) - a0.max(b0)).max(0.0);

    let mut out = ContinuousFeatures {
        interval,
        quality: Vec::with_capacity(n),
        rebuffering: Vec::with_capacity(n),
        time_since_rebuffer: Vec::with_capacity(n),
    };
    for k in 0..n {
        let a = start + k as f64 * interval;
        let b = start + (k + 1) as f64 * interval;
        let q: f64 = log
            .playback
            .iter()
            .map(|p| overlap(p.t_play_start, p.t_play_end(), a, b) * p.quality)
            .sum();
        out.quality.push(q / interval);
        out.rebuffering.push(
            log.rebuffers
                .iter()
                .any(|r| overlap(r.t_start, r.t_start + r.duration, a, b) > 1e-9),
        );
        let stalled_now = log.rebuffers.iter().any(|r| b > r.t_start && b < r.t_start + r.duration);
        let since = if stalled_now {
            0.0
        } else {
            let last_end = log
                .rebuffers
                .iter()
                .map(|r| r.t_start + r.duration)
                .filter(|&e| e <= b)
                .fold(start, f64::max);
            b - last_end
        };
        out.time_since_rebuffer.push(since.min(log.content_duration));
    }
    Ok(out)
}
