//! Client adaptation policies.
//!
//! Every policy implements [`AbrPolicy`]: given the client's view of the
//! session ([`ClientState`]) it returns the stream for the next chunk, or
//! asks the downloader to pause. Policies are stateless; anything a policy
//! needs to remember across decisions (the pending-pause flag of the
//! quality-based policies) is carried in [`ClientState`] by the simulator.
//!
//! Policies are looked up by name through [`Registry`].

mod buffer_based;
pub mod dp;
mod quality_based;
mod rate_based;
mod registry;

pub use buffer_based::BufferBased;
pub use quality_based::{ConstantThroughput, OracleThroughput, QualityBased, ThroughputModel};
pub use rate_based::RateBased;
pub use registry::{PolicyFactory, Registry};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ladder::ChunkMap;
use crate::trace::NetworkTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbrError {
    #[error("empty download history")]
    EmptyHistory,
    #[error("unknown ABR policy {0:?}")]
    UnknownPolicy(String),
    #[error("invalid policy config: {0}")]
    InvalidConfig(String),
    #[error("policy {0} needs the oracle trace")]
    MissingOracle(&'static str),
    #[error("chunk {0} is past the end of the content")]
    NoSuchChunk(usize),
}

/// Tunables shared by the policies. Defaults are the reference values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// BB reservoir, seconds.
    pub reservoir: f64,
    /// BB cushion, seconds.
    pub cushion: f64,
    /// Throughput estimation window, chunks.
    pub window: usize,
    /// QB/OQB look-ahead horizon, seconds.
    pub horizon: f64,
    /// QB/OQB minimum buffer, seconds.
    pub buffer_min: f64,
    /// QB/OQB maximum buffer, seconds.
    pub buffer_max: f64,
    /// QB/OQB terminal target buffer, seconds.
    pub buffer_target: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            reservoir: 5.0,
            cushion: 4.5,
            window: 5,
            horizon: 10.0,
            buffer_min: 1.0,
            buffer_max: 10.0,
            buffer_target: 3.0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), AbrError> {
        let bad = |m: &str| Err(AbrError::InvalidConfig(m.to_string()));
        if !(self.reservoir > 0.0 && self.cushion > 0.0 && self.horizon > 0.0) {
            return bad("reservoir, cushion and horizon must be positive");
        }
        if self.window == 0 {
            return bad("window must be at least one chunk");
        }
        if !(0.0 < self.buffer_min
            && self.buffer_min < self.buffer_target
            && self.buffer_target < self.buffer_max)
        {
            return bad("need 0 < min buffer < target buffer < max buffer");
        }
        Ok(())
    }
}

/// A completed download as seen by the client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownloadSample {
    pub bits: f64,
    /// Seconds spent downloading (pauses excluded).
    pub duration: f64,
}

impl DownloadSample {
    pub fn kbps(&self) -> f64 {
        self.bits / self.duration / 1000.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClientState<'a> {
    /// Wall-clock seconds since the session's first request.
    pub now: f64,
    pub next_chunk: usize,
    /// Buffered playback, seconds.
    pub buffer: f64,
    /// Completed downloads, oldest first.
    pub history: &'a [DownloadSample],
    pub chunk_map: &'a ChunkMap,
    /// The true trace, for policies that are allowed to see the future.
    pub oracle: Option<&'a NetworkTrace>,
    /// Set on the decision immediately following a pause.
    pub resumed_from_pause: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decision {
    Stream(usize),
    /// Idle until the buffer has drained to `until_buffer` seconds, then ask
    /// again.
    Pause { until_buffer: f64 },
}

pub trait AbrPolicy: Send + Sync {
    fn name(&self) -> &'static str;

    fn decide(&self, state: &ClientState<'_>) -> Result<Decision, AbrError>;
}

/// Mean per-chunk throughput in Kbps over the last `min(window, len)`
/// downloads.
pub fn estimate_throughput(history: &[DownloadSample], window: usize) -> Result<f64, AbrError> {
    if history.is_empty() || window == 0 {
        return Err(AbrError::EmptyHistory);
    }
    let recent = &history[history.len().saturating_sub(window)..];
    Ok(recent.iter().map(DownloadSample::kbps).sum::<f64>() / recent.len() as f64)
}

/// Bitrates of every stream for `chunk`.
pub(crate) fn chunk_bitrates(map: &ChunkMap, chunk: usize) -> Result<Vec<f64>, AbrError> {
    if chunk >= map.n_chunks() {
        return Err(AbrError::NoSuchChunk(chunk));
    }
    Ok(map.streams.iter().map(|r| r.segments[chunk].bitrate_kbps).collect())
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::ladder::{ChunkMap, SegmentRecord, StreamRow};

    /// `n_chunks` chunks of `duration` seconds, one stream per bitrate,
    /// quality per stream from `qualities`.
    pub fn flat_map(bitrates: &[f64], qualities: &[f64], n_chunks: usize, duration: f64) -> ChunkMap {
        ChunkMap {
            content_id: "test".into(),
            shot_durations: vec![duration; n_chunks],
            streams: bitrates
                .iter()
                .zip(qualities)
                .map(|(&kbps, &q)| StreamRow {
                    segments: (0..n_chunks)
                        .map(|c| SegmentRecord::new(c as u32, duration, (kbps * duration * 1000.0) as u64, 720, q))
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(bits: f64, duration: f64) -> DownloadSample {
        DownloadSample { bits, duration }
    }

    #[test]
    fn throughput_single_chunk() {
        assert_eq!(estimate_throughput(&[sample(4e6, 4.0)], 5).unwrap(), 1000.0);
    }

    #[test]
    fn throughput_uses_last_window() {
        let h: Vec<_> = (1..=6).map(|m| sample(m as f64 * 1e6, 1.0)).collect();
        assert_eq!(estimate_throughput(&h, 5).unwrap(), 4000.0);
    }

    #[test]
    fn throughput_constant_rate() {
        let h = vec![sample(3e6, 2.0), sample(1.5e6, 1.0), sample(6e6, 4.0)];
        assert_eq!(estimate_throughput(&h, 5).unwrap(), 1500.0);
    }

    #[test]
    fn throughput_empty_history() {
        assert_eq!(estimate_throughput(&[], 5), Err(AbrError::EmptyHistory));
    }

    #[test]
    fn default_config_is_valid() {
        PolicyConfig::default().validate().unwrap();
        let bad = PolicyConfig {
            buffer_target: 12.0,
            ..PolicyConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
