//! Deterministic synthetic inputs for the bundled reference scenario.
//!
//! Contents are about 25 s long and split into 2 to 6 s shots. Every shot
//! is "encoded" at five resolutions and a range of quantizers with a simple
//! parametric rate–quality model, so the ladder and chunk-map code has
//! realistic-looking input without a video encoder.
//!
//! Traces are 40 s long on a 1 s grid. Their shape comes from an AR(1)
//! process and their minimum, maximum, mean and standard deviation are
//! pinned to the published statistics of seven 3G commute routes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ladder::{
    build_bitrate_ladder, build_chunk_map, hull_shots, ChunkMap, LadderError, RQPoint, ShotRQCurve,
};
use crate::trace::{NetworkTrace, TraceError};

pub const CONTENT_IDS: [&str; 15] = [
    "AS", "AF", "CD", "CF", "CL", "ED", "EM", "GTA", "MC", "MD", "SB", "SO", "SP", "TR", "TS",
];

/// Published per-route statistics in Kbps: `(id, min, max, mean, std)`.
pub const TRACE_TABLE: [(&str, f64, f64, f64, f64); 7] = [
    ("CSS", 234.0, 1768.0, 989.0, 380.0),
    ("TJL", 52.0, 1067.0, 617.0, 207.0),
    ("TVO", 131.0, 1632.0, 702.0, 349.0),
    ("MKJ", 28.0, 1511.0, 696.0, 456.0),
    ("BLO", 9.0, 886.0, 373.0, 235.0),
    ("FNO", 35.0, 3869.0, 1325.0, 761.0),
    ("TLJ", 86.0, 485.0, 269.0, 86.0),
];

pub const TRACE_SECONDS: usize = 40;

const SEED: u64 = 0x5eed_ab21;
const TARGET_CONTENT_SECONDS: f64 = 25.0;

/// `(height, quality ceiling, Kbps at which quality reaches 63% of the
/// ceiling, Kbps at the reference quantizer)` for unit complexity.
const RESOLUTIONS: [(u32, f64, f64, f64); 5] = [
    (240, 58.0, 110.0, 260.0),
    (360, 72.0, 240.0, 520.0),
    (480, 82.0, 420.0, 900.0),
    (720, 93.0, 900.0, 2000.0),
    (1080, 99.0, 1800.0, 4200.0),
];
const QPS: [u32; 7] = [22, 26, 30, 34, 38, 42, 46];
const REFERENCE_QP: f64 = 30.0;
const MIN_KBPS: f64 = 100.0;
const MAX_KBPS: f64 = 7000.0;

/// A synthetic content: per-shot encodes and the number of ladder rungs.
#[derive(Debug, Clone, PartialEq)]
pub struct Content {
    pub id: String,
    pub shots: Vec<ShotRQCurve>,
    pub n_rungs: usize,
}

impl Content {
    pub fn duration(&self) -> f64 {
        self.shots.iter().map(|s| s.duration).sum()
    }

    pub fn chunk_map(&self) -> Result<ChunkMap, LadderError> {
        let hulls = hull_shots(&self.shots)?;
        let ladder = build_bitrate_ladder(&hulls, self.n_rungs)?;
        build_chunk_map(&self.id, &hulls, &ladder.budgets)
    }
}

fn shot_durations(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = Vec::new();
    let mut total = 0.0;
    while total < TARGET_CONTENT_SECONDS - 4.0 {
        // half-second granularity between 2 and 6 s
        let d = rng.gen_range(4..=12) as f64 * 0.5;
        out.push(d);
        total += d;
    }
    let rest = TARGET_CONTENT_SECONDS - total;
    if rest >= 2.0 {
        out.push(rest);
    } else if let Some(last) = out.last_mut() {
        *last = (*last + rest).min(6.0);
    }
    out
}

fn encode(height_idx: usize, qp: u32, complexity: f64, duration: f64) -> Option<RQPoint> {
    let (height, ceiling, knee, reference) = RESOLUTIONS[height_idx];
    let kbps = reference * complexity * 2f64.powf((REFERENCE_QP - qp as f64) / 6.0);
    if !(MIN_KBPS..=MAX_KBPS).contains(&kbps) {
        return None;
    }
    let quality = ceiling * (1.0 - (-kbps / (knee * complexity)).exp());
    let bits = (kbps * 1000.0 * duration).round() as u64;
    Some(RQPoint::new(height, qp, bits, quality))
}

/// The 15 reference contents, identical on every call.
pub fn reference_contents() -> Vec<Content> {
    CONTENT_IDS
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ (i as u64 + 1));
            let base: f64 = rng.gen_range(0.45..1.6);
            let n_rungs = rng.gen_range(6..=9);
            let shots = shot_durations(&mut rng)
                .into_iter()
                .enumerate()
                .map(|(s, duration)| {
                    let complexity = base * rng.gen_range(0.75..1.33);
                    let points = (0..RESOLUTIONS.len())
                        .flat_map(|r| QPS.iter().map(move |&qp| (r, qp)))
                        .filter_map(|(r, qp)| encode(r, qp, complexity, duration))
                        .collect();
                    ShotRQCurve {
                        shot_id: s as u32,
                        duration,
                        points,
                    }
                })
                .collect();
            Content {
                id: id.to_string(),
                shots,
                n_rungs,
            }
        })
        .collect()
}

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Maps `shape` onto values with the given min, max, mean and population
/// standard deviation. The smallest and largest shape samples are pinned to
/// `min` and `max`; the rest are rescaled affinely and clipped, repeating
/// until no sample needs clipping.
pub fn calibrate(shape: &[f64], min: f64, max: f64, mean: f64, std: f64) -> Option<Vec<f64>> {
    let n = shape.len();
    if n < 3 || !(min < max) {
        return None;
    }
    let lo = (0..n).min_by(|&a, &b| shape[a].total_cmp(&shape[b]))?;
    let hi = (0..n).max_by(|&a, &b| shape[a].total_cmp(&shape[b]))?;
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    fixed[lo] = Some(min);
    fixed[hi] = Some(max);
    let total = mean * n as f64;
    let total_sq = (std * std + mean * mean) * n as f64;

    for _ in 0..n {
        let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
        if free.is_empty() {
            return None;
        }
        let pinned_sum: f64 = fixed.iter().flatten().sum();
        let pinned_sq: f64 = fixed.iter().flatten().map(|v| v * v).sum();
        let m = free.len() as f64;
        let free_mean = (total - pinned_sum) / m;
        let free_var = (total_sq - pinned_sq) / m - free_mean * free_mean;
        if free_var < 0.0 {
            return None;
        }
        let raw: Vec<f64> = free.iter().map(|&i| shape[i]).collect();
        let (rm, rs) = moments(&raw);
        let scale = if rs > 0.0 { free_var.sqrt() / rs } else { 0.0 };
        let values: Vec<f64> = raw.iter().map(|v| free_mean + (v - rm) * scale).collect();
        let mut clipped = false;
        for (&i, &v) in free.iter().zip(&values) {
            if v < min {
                fixed[i] = Some(min);
                clipped = true;
            } else if v > max {
                fixed[i] = Some(max);
                clipped = true;
            }
        }
        if !clipped {
            let mut out: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
            for (&i, &v) in free.iter().zip(&values) {
                out[i] = v;
            }
            return Some(out);
        }
    }
    None
}

fn ar1_shape(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(n);
    let mut prev: f64 = rng.sample(StandardNormal);
    for _ in 0..n {
        let e: f64 = rng.sample(StandardNormal);
        prev = rho * prev + (1.0 - rho * rho).sqrt() * e;
        x.push(prev);
    }
    x
}

/// The seven calibrated reference traces, identical on every call.
pub fn reference_traces() -> Result<Vec<NetworkTrace>, TraceError> {
    TRACE_TABLE
        .iter()
        .enumerate()
        .map(|(i, &(id, min, max, mean, std))| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED.rotate_left(17) ^ (i as u64 + 1));
            // Retry with a fresh shape if the clipping loop cannot settle.
            let kbps = loop {
                let shape = ar1_shape(&mut rng, TRACE_SECONDS, 0.7);
                if let Some(v) = calibrate(&shape, min, max, mean, std) {
                    break v;
                }
            };
            NetworkTrace::from_uniform(id, &kbps, 1.0)
        })
        .collect()
}
