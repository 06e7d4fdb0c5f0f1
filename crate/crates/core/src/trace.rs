//! Network bandwidth traces.
//!
//! A trace is a piecewise-constant bandwidth series in Kbps. Each sample
//! holds until the next one; the last sample holds until `duration`. Past
//! the end the trace either wraps around to `t = 0` ([`Extension::Loop`],
//! the default) or keeps its last sample forever ([`Extension::HoldLast`]).
//!
//! 1 byte = 8 bits and 1 Kbps = 1000 bits/s throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("empty trace")]
    Empty,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: timestamp {timestamp} does not increase")]
    NonMonotone { line: usize, timestamp: f64 },
    #[error("invalid trace: {0}")]
    Invalid(String),
    #[error("interval end {t2} precedes start {t1}")]
    ReversedInterval { t1: f64, t2: f64 },
    #[error("invalid window [{0}, {1}]")]
    BadWindow(f64, f64),
    #[error("starved: bandwidth is zero for the rest of the trace")]
    Starved,
}

/// What the trace does past its last sample's hold interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Extension {
    #[default]
    Loop,
    HoldLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub kbps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTrace {
    id: String,
    samples: Vec<Sample>,
    duration: f64,
    extension: Extension,
    /// Bits delivered over `[0, samples[i].t]`; one extra entry for `duration`.
    cumulative: Vec<f64>,
}

/// Duration-weighted bandwidth statistics, in Kbps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub min_b: f64,
    pub max_b: f64,
    pub mean_b: f64,
    pub std_b: f64,
    pub cov: f64,
}

impl NetworkTrace {
    pub fn new(id: impl Into<String>, samples: Vec<Sample>, duration: f64) -> Result<Self, TraceError> {
        if samples.is_empty() {
            return Err(TraceError::Empty);
        }
        if samples[0].t != 0.0 {
            return Err(TraceError::Invalid("first sample must start at t = 0".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(TraceError::Invalid(format!(
                    "sample times must strictly increase ({} then {})",
                    w[0].t, w[1].t
                )));
            }
        }
        if let Some(s) = samples.iter().find(|s| !(s.kbps >= 0.0) || !s.kbps.is_finite()) {
            return Err(TraceError::Invalid(format!("bandwidth {} at t = {}", s.kbps, s.t)));
        }
        let last_t = samples[samples.len() - 1].t;
        if !(duration > last_t) || !duration.is_finite() {
            return Err(TraceError::Invalid(format!(
                "duration {duration} must exceed last sample time {last_t}"
            )));
        }
        let mut cumulative = Vec::with_capacity(samples.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for (i, s) in samples.iter().enumerate() {
            let end = samples.get(i + 1).map_or(duration, |n| n.t);
            acc += s.kbps * 1000.0 * (end - s.t);
            cumulative.push(acc);
        }
        Ok(Self {
            id: id.into(),
            samples,
            duration,
            extension: Extension::Loop,
            cumulative,
        })
    }

    /// Uniform series with one sample per `step` seconds.
    pub fn from_uniform(id: impl Into<String>, kbps: &[f64], step: f64) -> Result<Self, TraceError> {
        let samples = kbps
            .iter()
            .enumerate()
            .map(|(i, &k)| Sample {
                t: i as f64 * step,
                kbps: k,
            })
            .collect();
        Self::new(id, samples, kbps.len() as f64 * step)
    }

    pub fn constant(id: impl Into<String>, kbps: f64, duration: f64) -> Result<Self, TraceError> {
        Self::new(id, vec![Sample { t: 0.0, kbps }], duration)
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.extension = extension;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    fn hold_end(&self, i: usize) -> f64 {
        self.samples.get(i + 1).map_or(self.duration, |n| n.t)
    }

    fn period_bits(&self) -> f64 {
        self.cumulative[self.samples.len()]
    }

    /// Bandwidth in Kbps at time `t` (right-continuous).
    pub fn bandwidth_at(&self, t: f64) -> f64 {
        let local = match self.extension {
            Extension::Loop => t.rem_euclid(self.duration),
            Extension::HoldLast if t >= self.duration => return self.samples[self.samples.len() - 1].kbps,
            Extension::HoldLast => t,
        };
        let i = self.samples.partition_point(|s| s.t <= local).max(1) - 1;
        self.samples[i].kbps
    }

    /// Bits delivered over `[0, t]` within one period, `0 ≤ t ≤ duration`.
    fn bits_within(&self, t: f64) -> f64 {
        let i = self.samples.partition_point(|s| s.t <= t).max(1) - 1;
        let s = &self.samples[i];
        let into = (t.min(self.hold_end(i)) - s.t).max(0.0);
        self.cumulative[i] + s.kbps * 1000.0 * into
    }

    /// Bits delivered over `[0, t]`, extending the trace past its end.
    pub fn cumulative_bits(&self, t: f64) -> f64 {
        match self.extension {
            Extension::Loop => {
                let periods = (t / self.duration).floor();
                let rest = (t - periods * self.duration).clamp(0.0, self.duration);
                periods * self.period_bits() + self.bits_within(rest)
            }
            Extension::HoldLast => {
                if t <= self.duration {
                    self.bits_within(t)
                } else {
                    let last = self.samples[self.samples.len() - 1].kbps;
                    self.period_bits() + last * 1000.0 * (t - self.duration)
                }
            }
        }
    }

    /// Bits deliverable over `[t1, t2]`.
    pub fn bits_deliverable(&self, t1: f64, t2: f64) -> Result<f64, TraceError> {
        if t1 > t2 {
            return Err(TraceError::ReversedInterval { t1, t2 });
        }
        if t1 == t2 {
            return Ok(0.0);
        }
        Ok((self.cumulative_bits(t2) - self.cumulative_bits(t1)).max(0.0))
    }

    /// Earliest time within one period at which `bits` (`0 < bits ≤ period
    /// bits`) have been delivered since `t = 0`.
    fn invert_within(&self, bits: f64) -> f64 {
        // First hold interval whose end reaches the target.
        let i = self.cumulative[1..].partition_point(|&c| c < bits).min(self.samples.len() - 1);
        let s = &self.samples[i];
        if s.kbps <= 0.0 {
            return s.t;
        }
        let t = s.t + (bits - self.cumulative[i]) / (s.kbps * 1000.0);
        t.min(self.hold_end(i))
    }

    /// Smallest `Δ ≥ 0` with `bits_deliverable(t_start, t_start + Δ) ≥ bits`.
    pub fn time_to_deliver(&self, t_start: f64, bits: f64) -> Result<f64, TraceError> {
        if !(bits >= 0.0) {
            return Err(TraceError::Invalid(format!("bits {bits} must be non-negative")));
        }
        if bits == 0.0 {
            return Ok(0.0);
        }
        let target = self.cumulative_bits(t_start) + bits;
        let t_end = match self.extension {
            Extension::Loop => {
                let per = self.period_bits();
                if per <= 0.0 {
                    return Err(TraceError::Starved);
                }
                let mut periods = (target / per).floor();
                let mut rest = target - periods * per;
                if rest <= 0.0 && periods > 0.0 {
                    periods -= 1.0;
                    rest += per;
                }
                periods * self.duration + self.invert_within(rest)
            }
            Extension::HoldLast => {
                if target <= self.period_bits() {
                    self.invert_within(target)
                } else {
                    let last = self.samples[self.samples.len() - 1].kbps;
                    if last <= 0.0 {
                        return Err(TraceError::Starved);
                    }
                    self.duration + (target - self.period_bits()) / (last * 1000.0)
                }
            }
        };
        Ok((t_end - t_start).max(0.0))
    }

    pub fn stats(&self) -> TraceStats {
        let mut min_b = f64::INFINITY;
        let mut max_b = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for (i, s) in self.samples.iter().enumerate() {
            let dt = self.hold_end(i) - s.t;
            min_b = min_b.min(s.kbps);
            max_b = max_b.max(s.kbps);
            sum += s.kbps * dt;
        }
        let mean_b = sum / self.duration;
        let var = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| (self.hold_end(i) - s.t) * (s.kbps - mean_b).powi(2))
            .sum::<f64>()
            / self.duration;
        let std_b = var.sqrt();
        TraceStats {
            min_b,
            max_b,
            mean_b,
            std_b,
            cov: if mean_b > 0.0 { std_b / mean_b } else { 0.0 },
        }
    }

    /// The part of the trace over `[t0, t1]`, rebased to start at 0.
    pub fn window(&self, t0: f64, t1: f64) -> Result<Self, TraceError> {
        if !(t0 >= 0.0 && t1 > t0 && t1 <= self.duration) {
            return Err(TraceError::BadWindow(t0, t1));
        }
        let first = self.samples.partition_point(|s| s.t <= t0).max(1) - 1;
        let mut samples = vec![Sample {
            t: 0.0,
            kbps: self.samples[first].kbps,
        }];
        samples.extend(
            self.samples[first + 1..]
                .iter()
                .take_while(|s| s.t < t1)
                .map(|s| Sample {
                    t: s.t - t0,
                    kbps: s.kbps,
                }),
        );
        Ok(Self::new(self.id.clone(), samples, t1 - t0)?.with_extension(self.extension))
    }

    /// Canonical CSV: `t_seconds,kbps` rows, closed by a row at `duration`
    /// repeating the last bandwidth.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_seconds,kbps\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s.t, s.kbps));
        }
        let last = self.samples[self.samples.len() - 1].kbps;
        out.push_str(&format!("{},{}\n", self.duration, last));
        out
    }

    pub fn from_csv(id: impl Into<String>, text: &str) -> Result<Self, TraceError> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (n == 0 && line.starts_with("t_seconds")) {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let parse = |f: Option<&str>, what: &str| -> Result<f64, TraceError> {
                f.and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| TraceError::Malformed {
                    line: n + 1,
                    reason: format!("missing or invalid {what}"),
                })
            };
            let t = parse(fields.next(), "t_seconds")?;
            let kbps = parse(fields.next(), "kbps")?;
            rows.push((n + 1, Sample { t, kbps }));
        }
        if rows.len() < 2 {
            return Err(TraceError::Empty);
        }
        for w in rows.windows(2) {
            if !(w[1].1.t > w[0].1.t) {
                return Err(TraceError::NonMonotone {
                    line: w[1].0,
                    timestamp: w[1].1.t,
                });
            }
        }
        let (_, end) = rows.pop().expect("at least two rows");
        Self::new(id, rows.into_iter().map(|(_, s)| s).collect(), end.t)
    }
}

/// Parses an HSDPA-style log: each non-empty line holds
/// `<timestamp_ms> <bytes_received>` (extra columns ignored), the byte count
/// covering the interval since the previous timestamp. The first interval is
/// taken to be as long as the second (1 s for single-line logs).
///
/// The result is resampled onto a uniform 1-second grid; each grid sample is
/// the mean rate of the raw series over that second, so total bits are
/// preserved and 1-s aligned logs pass through unchanged.
pub fn parse_hsdpa_log(id: impl Into<String>, text: &str) -> Result<NetworkTrace, TraceError> {
    let mut raw: Vec<(usize, f64, f64)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut field = |what: &str| -> Result<f64, TraceError> {
            let v = fields.next().ok_or_else(|| TraceError::Malformed {
                line: n + 1,
                reason: format!("missing {what}"),
            })?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| TraceError::Malformed {
                    line: n + 1,
                    reason: format!("invalid {what} {v:?}"),
                })
        };
        let ts = field("timestamp")?;
        let bytes = field("byte count")?;
        if bytes < 0.0 {
            return Err(TraceError::Malformed {
                line: n + 1,
                reason: format!("negative byte count {bytes}"),
            });
        }
        if let Some(&(_, prev, _)) = raw.last() {
            if !(ts > prev) {
                return Err(TraceError::NonMonotone {
                    line: n + 1,
                    timestamp: ts,
                });
            }
        }
        raw.push((n + 1, ts, bytes));
    }
    if raw.is_empty() {
        return Err(TraceError::Empty);
    }

    let first_len_ms = if raw.len() >= 2 { raw[1].1 - raw[0].1 } else { 1000.0 };
    let origin = raw[0].1 - first_len_ms;
    // Raw hold intervals in seconds from origin, with their rates in Kbps.
    let mut intervals = Vec::with_capacity(raw.len());
    let mut start = 0.0;
    for &(_, ts, bytes) in &raw {
        let end = (ts - origin) / 1000.0;
        intervals.push((start, end, bytes * 8.0 / 1000.0 / (end - start)));
        start = end;
    }
    let total = start;

    let n_bins = (total - 1e-9).ceil().max(1.0) as usize;
    let mut kbps = Vec::with_capacity(n_bins);
    let mut j = 0;
    for k in 0..n_bins {
        let (lo, hi) = (k as f64, ((k + 1) as f64).min(total));
        let mut acc = 0.0;
        while j < intervals.len() && intervals[j].1 <= lo {
            j += 1;
        }
        let mut m = j;
        while m < intervals.len() && intervals[m].0 < hi {
            let (a, b, r) = intervals[m];
            acc += r * (b.min(hi) - a.max(lo)).max(0.0);
            m += 1;
        }
        kbps.push(acc / (hi - lo));
    }
    let mut samples: Vec<Sample> = kbps
        .into_iter()
        .enumerate()
        .map(|(i, k)| Sample { t: i as f64, kbps: k })
        .collect();
    if samples.len() == 1 {
        samples[0].t = 0.0;
    }
    NetworkTrace::new(id, samples, total)
}
