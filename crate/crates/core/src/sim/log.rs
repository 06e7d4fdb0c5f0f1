use serde::{Deserialize, Serialize};

use crate::ladder::ChunkMap;

pub const SESSION_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownloadRecord {
    pub chunk: usize,
    pub stream: usize,
    pub t_request: f64,
    pub t_complete: f64,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebufferRecord {
    pub t_start: f64,
    pub duration: f64,
    /// The chunk whose late arrival caused the stall.
    pub chunk: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauseRecord {
    pub t_start: f64,
    pub duration: f64,
    /// The chunk requested once the pause ended.
    pub chunk: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackRecord {
    pub chunk: usize,
    pub stream: usize,
    pub t_play_start: f64,
    pub duration: f64,
    pub bitrate_kbps: f64,
    pub quality: f64,
    pub resolution_height: u32,
}

impl PlaybackRecord {
    pub(crate) fn new(map: &ChunkMap, chunk: usize, stream: usize, t_play_start: f64) -> Self {
        let seg = map.segment(stream, chunk);
        Self {
            chunk,
            stream,
            t_play_start,
            duration: seg.duration,
            bitrate_kbps: seg.bitrate_kbps,
            quality: seg.quality,
            resolution_height: seg.resolution_height,
        }
    }

    pub fn t_play_end(&self) -> f64 {
        self.t_play_start + self.duration
    }
}

/// Everything that happened in one simulated session.
///
/// The per-second series use left-closed one-second windows starting at the
/// end of startup; the last window may be shorter. `quality_series` is
/// indexed by seconds of content instead, since it only covers played
/// frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub schema: u32,
    pub content_id: String,
    pub trace_id: String,
    pub abr: String,
    pub content_duration: f64,
    pub startup_delay: f64,
    /// Wall-clock instant at which the last frame was played.
    pub wall_time: f64,
    pub downloads: Vec<DownloadRecord>,
    pub rebuffers: Vec<RebufferRecord>,
    pub pauses: Vec<PauseRecord>,
    pub playback: Vec<PlaybackRecord>,
    pub buffer_series: Vec<f64>,
    pub bitrate_series: Vec<f64>,
    pub quality_series: Vec<f64>,
    pub stalled_series: Vec<bool>,
}

/// One row of the per-second CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub bitrate_kbps: f64,
    pub buffer_s: f64,
    pub quality: f64,
    pub stalled: bool,
}

impl SessionLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session log serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn rebuffer_time(&self) -> f64 {
        self.rebuffers.iter().map(|r| r.duration).sum()
    }

    /// Wall-clock time from the end of startup to the last played frame.
    pub fn playout_span(&self) -> f64 {
        self.wall_time - self.startup_delay
    }

    /// Seconds of content downloaded by wall time `t`.
    pub fn downloaded_at(&self, t: f64) -> f64 {
        self.downloads
            .iter()
            .filter(|d| d.t_complete <= t)
            .map(|d| self.playback[d.chunk].duration)
            .sum()
    }

    /// Seconds of content played by wall time `t`.
    pub fn played_at(&self, t: f64) -> f64 {
        self.playback
            .iter()
            .map(|p| (t - p.t_play_start).clamp(0.0, p.duration))
            .sum()
    }

    /// Buffered content in seconds at wall time `t`.
    pub fn buffer_at(&self, t: f64) -> f64 {
        self.downloaded_at(t) - self.played_at(t)
    }

    /// Whether playback is stalled at `t`. Stall intervals are half-open.
    pub fn is_stalled(&self, t: f64) -> bool {
        self.rebuffers
            .iter()
            .any(|r| t >= r.t_start && t < r.t_start + r.duration)
    }

    /// The chunk playing at wall time `t`, if any.
    pub fn playing_at(&self, t: f64) -> Option<&PlaybackRecord> {
        self.playback
            .iter()
            .find(|p| t >= p.t_play_start && t < p.t_play_end())
    }

    pub fn series_rows(&self) -> Vec<SeriesRow> {
        let quality = super::series::wall_quality(self);
        (0..self.bitrate_series.len())
            .map(|k| SeriesRow {
                t: k as f64,
                bitrate_kbps: self.bitrate_series[k],
                buffer_s: self.buffer_series[k],
                quality: quality[k],
                stalled: self.stalled_series[k],
            })
            .collect()
    }

    /// Per-second series as `t,bitrate_kbps,buffer_s,quality,stalled`, where
    /// `t` counts seconds since the end of startup and `quality` is the mean
    /// over frames played in that second (0 when none were).
    pub fn series_csv(&self) -> String {
        let mut out = String::from("t,bitrate_kbps,buffer_s,quality,stalled\n");
        for row in self.series_rows() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.t, row.bitrate_kbps, row.buffer_s, row.quality, row.stalled as u8
            ));
        }
        out
    }
}
