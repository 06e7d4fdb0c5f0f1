use serde::{Deserialize, Serialize};

use super::optimizer::{select_from_sweep, sweep_points, HullShot};
use super::LadderError;

/// One encoded segment of the chunk map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub shot_id: u32,
    pub duration: f64,
    pub bits: u64,
    pub bitrate_kbps: f64,
    pub resolution_height: u32,
    pub quality: f64,
}

impl SegmentRecord {
    pub fn new(shot_id: u32, duration: f64, bits: u64, resolution_height: u32, quality: f64) -> Self {
        Self {
            shot_id,
            duration,
            bits,
            bitrate_kbps: bits as f64 / duration / 1000.0,
            resolution_height,
            quality,
        }
    }
}

/// One stream: a segment per shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamRow {
    pub segments: Vec<SegmentRecord>,
}

impl StreamRow {
    pub fn total_bits(&self) -> u64 {
        self.segments.iter().map(|s| s.bits).sum()
    }

    pub fn mean_quality(&self) -> f64 {
        let (w, d) = self
            .segments
            .iter()
            .fold((0.0, 0.0), |(w, d), s| (w + s.duration * s.quality, d + s.duration));
        w / d
    }
}

/// Streams (rows, low to high budget) by shots (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkMap {
    pub content_id: String,
    pub shot_durations: Vec<f64>,
    pub streams: Vec<StreamRow>,
}

impl ChunkMap {
    pub fn n_streams(&self) -> usize {
        self.streams.len()
    }

    pub fn n_chunks(&self) -> usize {
        self.shot_durations.len()
    }

    pub fn segment(&self, stream: usize, chunk: usize) -> &SegmentRecord {
        &self.streams[stream].segments[chunk]
    }

    pub fn chunk_duration(&self, chunk: usize) -> f64 {
        self.shot_durations[chunk]
    }

    pub fn content_duration(&self) -> f64 {
        self.shot_durations.iter().sum()
    }

    /// Highest segment bitrate anywhere in the map.
    pub fn max_bitrate_kbps(&self) -> f64 {
        self.streams
            .iter()
            .flat_map(|r| r.segments.iter())
            .map(|s| s.bitrate_kbps)
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), LadderError> {
        let bad = |m: String| Err(LadderError::InvalidChunkMap(m));
        if self.streams.is_empty() {
            return bad("no streams".into());
        }
        if self.shot_durations.is_empty() {
            return bad("no shots".into());
        }
        if let Some(d) = self.shot_durations.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return bad(format!("non-positive shot duration {d}"));
        }
        for (r, row) in self.streams.iter().enumerate() {
            if row.segments.len() != self.shot_durations.len() {
                return bad(format!(
                    "stream {r} has {} segments for {} shots",
                    row.segments.len(),
                    self.shot_durations.len()
                ));
            }
            for (c, seg) in row.segments.iter().enumerate() {
                if (seg.duration - self.shot_durations[c]).abs() > 1e-9 * self.shot_durations[c] {
                    return bad(format!("stream {r} chunk {c}: duration mismatch"));
                }
                let expect = seg.bits as f64 / seg.duration / 1000.0;
                if (seg.bitrate_kbps - expect).abs() > 1e-9 * expect.abs().max(1e-300) {
                    return bad(format!("stream {r} chunk {c}: bitrate inconsistent with bits"));
                }
                if !(0.0..=100.0).contains(&seg.quality) {
                    return bad(format!("stream {r} chunk {c}: quality {} outside [0, 100]", seg.quality));
                }
            }
        }
        for (r, pair) in self.streams.windows(2).enumerate() {
            if pair[1].total_bits() < pair[0].total_bits() {
                return bad(format!("stream {} has fewer bits than stream {r}", r + 1));
            }
            if pair[1].mean_quality() < pair[0].mean_quality() {
                return bad(format!("stream {} has lower quality than stream {r}", r + 1));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, LadderError> {
        let map: ChunkMap =
            serde_json::from_str(text).map_err(|e| LadderError::InvalidChunkMap(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chunk map serializes")
    }
}

/// One row per budget, each the shot-level selection at that budget.
pub fn build_chunk_map(
    content_id: &str,
    shots: &[HullShot],
    ladder_budgets: &[u64],
) -> Result<ChunkMap, LadderError> {
    if ladder_budgets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LadderError::BudgetsNotIncreasing);
    }
    let sweep = sweep_points(shots)?;
    let streams = ladder_budgets
        .iter()
        .map(|&budget| {
            let sel = select_from_sweep(shots, &sweep, budget)?;
            Ok(StreamRow {
                segments: shots
                    .iter()
                    .zip(&sel.points)
                    .map(|(shot, p)| {
                        SegmentRecord::new(shot.shot_id, shot.duration, p.bits, p.resolution_height, p.quality)
                    })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>, LadderError>>()?;
    let map = ChunkMap {
        content_id: content_id.to_string(),
        shot_durations: shots.iter().map(|s| s.duration).collect(),
        streams,
    };
    map.validate()?;
    Ok(map)
}
