use std::borrow::Borrow;

use super::{SessionLog, SimError};

const EPS: f64 = 1e-9;

/// Number of windows of length `w` needed to cover `span`.
fn n_windows(span: f64, w: f64) -> usize {
    ((span / w) - EPS).ceil().max(0.0) as usize
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Instants at which the buffer changes slope or jumps.
fn breakpoints(log: &SessionLog) -> Vec<f64> {
    let mut pts: Vec<f64> = log
        .downloads
        .iter()
        .map(|d| d.t_complete)
        .chain(log.playback.iter().flat_map(|p| [p.t_play_start, p.t_play_end()]))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Time-average of the buffer over `[a, b]`. The buffer is linear between
/// breakpoints, so the midpoint of each piece gives its exact mean.
fn mean_buffer(log: &SessionLog, bps: &[f64], a: f64, b: f64) -> f64 {
    let mut cuts = vec![a];
    cuts.extend(bps.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    let area: f64 = cuts
        .windows(2)
        .map(|w| (w[1] - w[0]) * log.buffer_at(0.5 * (w[0] + w[1])))
        .sum();
    (area / (b - a)).max(0.0)
}

pub(super) fn fill(log: &mut SessionLog) {
    let start = log.startup_delay;
    let end = log.wall_time;
    let n = n_windows(end - start, 1.0);
    let bps = breakpoints(log);

    let mut buffer = Vec::with_capacity(n);
    let mut bitrate = Vec::with_capacity(n);
    let mut stalled = Vec::with_capacity(n);
    for k in 0..n {
        let a = start + k as f64;
        let b = (a + 1.0).min(end);
        let len = b - a;
        buffer.push(mean_buffer(log, &bps, a, b));
        let kbits: f64 = log
            .playback
            .iter()
            .map(|p| overlap(p.t_play_start, p.t_play_end(), a, b) * p.bitrate_kbps)
            .sum();
        bitrate.push(kbits / len);
        stalled.push(
            log.rebuffers
                .iter()
                .any(|r| overlap(r.t_start, r.t_start + r.duration, a, b) > EPS),
        );
    }

    let content = log.content_duration;
    let mut quality = Vec::new();
    let mut offset = 0.0;
    let spans: Vec<(f64, f64, f64)> = log
        .playback
        .iter()
        .map(|p| {
            let s = (offset, offset + p.duration, p.quality);
            offset += p.duration;
            s
        })
        .collect();
    for k in 0..n_windows(content, 1.0) {
        let a = k as f64;
        let b = (a + 1.0).min(content);
        let q: f64 = spans.iter().map(|&(s, e, q)| overlap(s, e, a, b) * q).sum();
        quality.push(q / (b - a));
    }

    log.buffer_series = buffer;
    log.bitrate_series = bitrate;
    log.stalled_series = stalled;
    log.quality_series = quality;
}

/// Mean quality of frames played in each per-second wall window.
pub(super) fn wall_quality(log: &SessionLog) -> Vec<f64> {
    let start = log.startup_delay;
    let end = log.wall_time;
    (0..log.bitrate_series.len())
        .map(|k| {
            let a = start + k as f64;
            let b = (a + 1.0).min(end);
            let (mut played, mut q) = (0.0, 0.0);
            for p in &log.playback {
                let o = overlap(p.t_play_start, p.t_play_end(), a, b);
                played += o;
                q += o * p.quality;
            }
            if played > 0.0 {
                q / played
            } else {
                0.0
            }
        })
        .collect()
}

/// Fraction of sessions with any stalled instant in each `window`-second
/// bin of the post-startup clock. The series is as long as the longest
/// session.
pub fn rebuffer_ratio<L: Borrow<SessionLog>>(logs: &[L], window: f64) -> Result<Vec<f64>, SimError> {
    if logs.is_empty() {
        return Err(SimError::NoLogs);
    }
    if !(window > 0.0) || !window.is_finite() {
        return Err(SimError::BadWindow);
    }
    let n = logs
        .iter()
        .map(|l| n_windows(l.borrow().playout_span(), window))
        .max()
        .unwrap_or(0);
    let mut counts = vec![0usize; n];
    for log in logs {
        let log = log.borrow();
        for (k, count) in counts.iter_mut().enumerate() {
            let a = log.startup_delay + k as f64 * window;
            let b = log.startup_delay + (k + 1) as f64 * window;
            if log
                .rebuffers
                .iter()
                .any(|r| overlap(r.t_start, r.t_start + r.duration, a, b) > EPS)
            {
                *count += 1;
            }
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / logs.len() as f64).collect())
}
