//! Discrete-event playback simulator.
//!
//! The client downloads one chunk at a time against the trace. The first
//! `prefetch_chunks` chunks are fetched at stream 0 and playback starts when
//! they are in; that instant is the startup delay and is excluded from all
//! QoE series. From then on the policy picks a stream at every request
//! instant, requests are back-to-back, and the buffer gains a chunk's
//! duration when its download completes while draining at 1 s/s during
//! playback. Only chunks the policy chose enter the throughput history, so
//! the first decision after startup sees an empty history.
//!
//! If the buffer empties before the next chunk is in, playback stalls until
//! that chunk completes; a chunk arriving exactly as the buffer empties does
//! not stall. A [`Decision::Pause`] idles the downloader until the buffer has
//! drained to the requested level, after which the policy is asked again
//! with `resumed_from_pause` set.
//!
//! All times in the log are wall-clock seconds since the first request,
//! which is also trace time.

mod log;
mod series;

pub use log::{
    DownloadRecord, PauseRecord, PlaybackRecord, RebufferRecord, SeriesRow, SessionLog, SESSION_SCHEMA,
};
pub use series::rebuffer_ratio;

use thiserror::Error;

use crate::abr::{AbrError, AbrPolicy, ClientState, Decision, DownloadSample};
use crate::ladder::ChunkMap;
use crate::trace::{NetworkTrace, TraceError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("prefetch must cover at least one chunk")]
    NoPrefetch,
    #[error("chunk map has no chunks")]
    EmptyContent,
    #[error("policy chose stream {stream} for chunk {chunk}, but there are {n_streams} streams")]
    InvalidStream {
        chunk: usize,
        stream: usize,
        n_streams: usize,
    },
    #[error("policy paused twice for chunk {0} without the buffer draining")]
    PauseWithoutProgress(usize),
    #[error("no session logs")]
    NoLogs,
    #[error("window must be positive")]
    BadWindow,
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Abr(#[from] AbrError),
}

pub struct SessionConfig<'a> {
    /// Chunks fetched at stream 0 before playback starts.
    pub prefetch_chunks: usize,
    pub policy: &'a dyn AbrPolicy,
    pub trace: &'a NetworkTrace,
    pub chunk_map: &'a ChunkMap,
}

pub fn simulate(config: &SessionConfig<'_>) -> Result<SessionLog, SimError> {
    let map = config.chunk_map;
    let trace = config.trace;
    let n = map.n_chunks();
    if config.prefetch_chunks == 0 {
        return Err(SimError::NoPrefetch);
    }
    if n == 0 || map.n_streams() == 0 {
        return Err(SimError::EmptyContent);
    }

    let mut t = 0.0;
    let mut history: Vec<DownloadSample> = Vec::with_capacity(n);
    let mut downloads = Vec::with_capacity(n);
    let mut playback = Vec::with_capacity(n);
    let mut rebuffers = Vec::new();
    let mut pauses = Vec::new();

    let mut fetch = |t: &mut f64, chunk: usize, stream: usize| {
        let bits = map.segment(stream, chunk).bits;
        let dt = trace.time_to_deliver(*t, bits as f64)?;
        downloads.push(DownloadRecord {
            chunk,
            stream,
            t_request: *t,
            t_complete: *t + dt,
            bits,
        });
        *t += dt;
        Ok::<DownloadSample, SimError>(DownloadSample {
            bits: bits as f64,
            duration: dt,
        })
    };

    let prefetch = config.prefetch_chunks.min(n);
    for chunk in 0..prefetch {
        fetch(&mut t, chunk, 0)?;
    }
    let startup_delay = t;
    // Wall time at which everything downloaded so far has been played.
    let mut play_end = startup_delay;
    for chunk in 0..prefetch {
        playback.push(PlaybackRecord::new(map, chunk, 0, play_end));
        play_end += map.chunk_duration(chunk);
    }

    let mut chunk = prefetch;
    let mut resumed = false;
    while chunk < n {
        let buffer = (play_end - t).max(0.0);
        let state = ClientState {
            now: t,
            next_chunk: chunk,
            buffer,
            history: &history,
            chunk_map: map,
            oracle: Some(trace),
            resumed_from_pause: resumed,
        };
        let stream = match config.policy.decide(&state)? {
            Decision::Pause { until_buffer } => {
                let wait = (buffer - until_buffer.max(0.0)).max(0.0);
                if resumed && wait <= 0.0 {
                    return Err(SimError::PauseWithoutProgress(chunk));
                }
                if wait > 0.0 {
                    pauses.push(PauseRecord {
                        t_start: t,
                        duration: wait,
                        chunk,
                    });
                    t += wait;
                }
                resumed = true;
                continue;
            }
            Decision::Stream(s) => s,
        };
        if stream >= map.n_streams() {
            return Err(SimError::InvalidStream {
                chunk,
                stream,
                n_streams: map.n_streams(),
            });
        }
        resumed = false;

        history.push(fetch(&mut t, chunk, stream)?);
        let done = t;
        let play_start = if done > play_end {
            rebuffers.push(RebufferRecord {
                t_start: play_end,
                duration: done - play_end,
                chunk,
            });
            done
        } else {
            play_end
        };
        playback.push(PlaybackRecord::new(map, chunk, stream, play_start));
        play_end = play_start + map.chunk_duration(chunk);
        chunk += 1;
    }

    let mut log = SessionLog {
        schema: SESSION_SCHEMA,
        content_id: map.content_id.clone(),
        trace_id: trace.id().to_string(),
        abr: config.policy.name().to_string(),
        content_duration: map.content_duration(),
        startup_delay,
        wall_time: play_end,
        downloads,
        rebuffers,
        pauses,
        playback,
        buffer_series: Vec::new(),
        bitrate_series: Vec::new(),
        quality_series: Vec::new(),
        stalled_series: Vec::new(),
    };
    series::fill(&mut log);
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abr::{BufferBased, PolicyConfig, Registry};
    use crate::ladder::{SegmentRecord, StreamRow};
    use crate::trace::Extension;

    fn single_stream(n: usize, duration: f64, kbps: f64) -> ChunkMap {
        ChunkMap {
            content_id: "golden".into(),
            shot_durations: vec![duration; n],
            streams: vec![StreamRow {
                segments: (0..n)
                    .map(|c| SegmentRecord::new(c as u32, duration, (kbps * duration * 1000.0) as u64, 1080, 80.0))
                    .collect(),
            }],
        }
    }

    #[test]
    fn golden_constant_session() {
        let map = single_stream(5, 4.0, 1000.0);
        let trace = NetworkTrace::constant("flat", 1000.0, 40.0).unwrap();
        let bb = BufferBased::new(PolicyConfig::default());
        let log = simulate(&SessionConfig {
            prefetch_chunks: 1,
            policy: &bb,
            trace: &trace,
            chunk_map: &map,
        })
        .unwrap();
        assert_eq!(log.startup_delay, 4.0);
        assert!(log.rebuffers.is_empty());
        assert_eq!(log.wall_time, 24.0);
        let starts: Vec<f64> = log.playback.iter().map(|p| p.t_play_start).collect();
        assert_eq!(starts, vec![4.0, 8.0, 12.0, 16.0, 20.0]);
        let requests: Vec<f64> = log.downloads.iter().map(|d| d.t_request).collect();
        assert_eq!(requests, vec![0.0, 4.0, 8.0, 12.0, 16.0]);
        assert_eq!(log.bitrate_series, vec![1000.0; 20]);
        assert_eq!(log.stalled_series, vec![false; 20]);
        // buffer sawtooth: 4 s at each request, draining to 0 as the next chunk lands
        assert!(log.buffer_series.iter().all(|&b| b > 0.0 && b <= 4.0));
    }

    #[test]
    fn infinite_bandwidth() {
        let map = single_stream(6, 4.0, 3000.0);
        let trace = NetworkTrace::constant("fast", 1e9, 40.0).unwrap();
        let rb = Registry::builtin().create("rb", PolicyConfig::default()).unwrap();
        let log = simulate(&SessionConfig {
            prefetch_chunks: 1,
            policy: rb.as_ref(),
            trace: &trace,
            chunk_map: &map,
        })
        .unwrap();
        assert!(log.rebuffers.is_empty());
        assert!(log.startup_delay < 1e-4);
        assert!((log.wall_time - log.startup_delay - 24.0).abs() < 1e-9);
        // everything is buffered almost instantly
        let t_last = log.downloads.last().unwrap().t_complete;
        assert!(t_last < 1e-3);
    }

    #[test]
    fn starvation_after_prefetch() {
        let map = single_stream(2, 4.0, 500.0);
        let trace = NetworkTrace::from_uniform("cliff", &[1000.0, 0.0], 2.0)
            .unwrap()
            .with_extension(Extension::HoldLast);
        let bb = BufferBased::new(PolicyConfig::default());
        let err = simulate(&SessionConfig {
            prefetch_chunks: 1,
            policy: &bb,
            trace: &trace,
            chunk_map: &map,
        })
        .unwrap_err();
        assert_eq!(err, SimError::Trace(TraceError::Starved));
    }

    #[test]
    fn stall_until_chunk_completes() {
        // 4 s chunks at 1000 Kbps over a 500 Kbps link: each download takes 8 s.
        let map = single_stream(3, 4.0, 1000.0);
        let trace = NetworkTrace::constant("slow", 500.0, 40.0).unwrap();
        let bb = BufferBased::new(PolicyConfig::default());
        let log = simulate(&SessionConfig {
            prefetch_chunks: 1,
            policy: &bb,
            trace: &trace,
            chunk_map: &map,
        })
        .unwrap();
        assert_eq!(log.startup_delay, 8.0);
        let stalls: Vec<(f64, f64, usize)> = log.rebuffers.iter().map(|r| (r.t_start, r.duration, r.chunk)).collect();
        assert_eq!(stalls, vec![(12.0, 4.0, 1), (20.0, 4.0, 2)]);
        assert_eq!(log.wall_time, 28.0);
        assert_eq!(log.stalled_series[4..8], [true; 4]);
        assert_eq!(log.bitrate_series[4..8], [0.0; 4]);
        assert_eq!(log.buffer_series[4..8], [0.0; 4]);
    }

    struct BadPolicy;

    impl AbrPolicy for BadPolicy {
        fn name(&self) -> &'static str {
            "bad"
        }

        fn decide(&self, _: &ClientState<'_>) -> Result<Decision, AbrError> {
            Ok(Decision::Stream(7))
        }
    }

    #[test]
    fn invalid_stream_rejected() {
        let map = single_stream(3, 4.0, 1000.0);
        let trace = NetworkTrace::constant("c", 1000.0, 40.0).unwrap();
        let err = simulate(&SessionConfig {
            prefetch_chunks: 1,
            policy: &BadPolicy,
            trace: &trace,
            chunk_map: &map,
        })
        .unwrap_err();
        assert!(matches!(err, SimError::InvalidStream { chunk: 1, stream: 7, .. }));
    }

    struct PauseOnce;

    impl AbrPolicy for PauseOnce {
        fn name(&self) -> &'static str {
            "pause-once"
        }

        fn decide(&self, state: &ClientState<'_>) -> Result<Decision, AbrError> {
            if state.next_chunk == 2 && !state.resumed_from_pause {
                Ok(Decision::Pause { until_buffer: 3.0 })
            } else {
                Ok(Decision::Stream(0))
            }
        }
    }

    #[test]
    fn pause_idles_downloader() {
        // 2000 Kbps link, 1000 Kbps chunks of 4 s: downloads take 2 s.
        let map = single_stream(3, 4.0, 1000.0);
        let trace = NetworkTrace::constant("c", 2000.0, 40.0).unwrap();
        let log = simulate(&SessionConfig {
            prefetch_chunks: 1,
            policy: &PauseOnce,
            trace: &trace,
            chunk_map: &map,
        })
        .unwrap();
        // chunk 1 requested at 2 and done at 4 (buffer 6); pause until buffer 3 at t = 7
        assert_eq!(log.pauses.len(), 1);
        assert_eq!((log.pauses[0].t_start, log.pauses[0].duration), (4.0, 3.0));
        assert_eq!(log.downloads[2].t_request, 7.0);
        assert!(log.rebuffers.is_empty());
        assert_eq!(log.wall_time, 14.0);
    }
}
