use super::buffer_based::highest;
use super::dp::{self, ChunkOptions, DpOutcome, DpProblem, StreamOption};
use super::{chunk_bitrates, estimate_throughput, AbrError, AbrPolicy, ClientState, Decision, PolicyConfig};

pub use super::dp::{ConstantThroughput, OracleThroughput, ThroughputModel};

/// Quality-based adaptation: re-plans at every chunk with a finite-horizon
/// dynamic program over buffer levels (see [`dp`]), maximising quality.
///
/// The QB variant predicts a constant bandwidth equal to the windowed
/// throughput estimate; the oracle variant (OQB) reads the true trace.
///
/// Fallbacks: when no plan keeps the buffer above the minimum the lowest
/// stream is fetched; when every plan overflows the maximum the policy
/// pauses until the buffer has room for the next chunk and then fetches the
/// highest stream.
#[derive(Debug, Clone)]
pub struct QualityBased {
    config: PolicyConfig,
    oracle: bool,
}

impl QualityBased {
    pub fn estimated(config: PolicyConfig) -> Self {
        Self { config, oracle: false }
    }

    pub fn oracle(config: PolicyConfig) -> Self {
        Self { config, oracle: true }
    }

    /// Chunks from `next` whose playback starts within the horizon; at
    /// least one.
    fn horizon_chunks(&self, state: &ClientState<'_>) -> Vec<ChunkOptions> {
        let map = state.chunk_map;
        let mut out = Vec::new();
        let mut covered = 0.0;
        for chunk in state.next_chunk..map.n_chunks() {
            if !out.is_empty() && covered >= self.config.horizon {
                break;
            }
            let duration = map.chunk_duration(chunk);
            out.push(ChunkOptions {
                duration,
                options: map
                    .streams
                    .iter()
                    .map(|row| StreamOption {
                        bits: row.segments[chunk].bits as f64,
                        quality: row.segments[chunk].quality,
                    })
                    .collect(),
            });
            covered += duration;
        }
        out
    }

    /// Full DP outcome for `state`; `None` when the estimate is unavailable.
    pub fn plan(&self, state: &ClientState<'_>) -> Result<Option<DpOutcome>, AbrError> {
        chunk_bitrates(state.chunk_map, state.next_chunk)?;
        let constant;
        let oracle;
        let model: &dyn ThroughputModel = if self.oracle {
            let trace = state.oracle.ok_or(AbrError::MissingOracle("oqb"))?;
            oracle = OracleThroughput { trace };
            &oracle
        } else {
            match estimate_throughput(state.history, self.config.window) {
                Ok(kbps) => {
                    constant = ConstantThroughput { kbps };
                    &constant
                }
                Err(AbrError::EmptyHistory) => return Ok(None),
                Err(e) => return Err(e),
            }
        };
        let problem = DpProblem {
            now: state.now,
            buffer: state.buffer,
            chunks: self.horizon_chunks(state),
            buffer_min: self.config.buffer_min,
            buffer_max: self.config.buffer_max,
            buffer_target: self.config.buffer_target,
            model,
        };
        Ok(Some(dp::solve(&problem)))
    }
}

impl AbrPolicy for QualityBased {
    fn name(&self) -> &'static str {
        if self.oracle {
            "oqb"
        } else {
            "qb"
        }
    }

    fn decide(&self, state: &ClientState<'_>) -> Result<Decision, AbrError> {
        let rates = chunk_bitrates(state.chunk_map, state.next_chunk)?;
        if state.resumed_from_pause {
            return Ok(Decision::Stream(highest(&rates)));
        }
        Ok(match self.plan(state)? {
            None => Decision::Stream(0),
            Some(DpOutcome::Plan(plan)) => Decision::Stream(plan.streams[0]),
            Some(DpOutcome::BelowMinimum) => Decision::Stream(0),
            Some(DpOutcome::AboveMaximum) => {
                let room = self.config.buffer_max - state.chunk_map.chunk_duration(state.next_chunk);
                Decision::Pause {
                    until_buffer: room.max(0.0),
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abr::test_support::flat_map;
    use crate::abr::DownloadSample;
    use crate::trace::NetworkTrace;

    fn state<'a>(
        map: &'a crate::ladder::ChunkMap,
        buffer: f64,
        history: &'a [DownloadSample],
        oracle: Option<&'a NetworkTrace>,
    ) -> ClientState<'a> {
        ClientState {
            now: 0.0,
            next_chunk: 0,
            buffer,
            history,
            chunk_map: map,
            oracle,
            resumed_from_pause: false,
        }
    }

    #[test]
    fn empty_history_lowest() {
        let map = flat_map(&[200.0, 400.0], &[40.0, 60.0], 4, 2.0);
        let qb = QualityBased::estimated(PolicyConfig::default());
        assert_eq!(qb.decide(&state(&map, 4.0, &[], None)).unwrap(), Decision::Stream(0));
    }

    #[test]
    fn zero_bandwidth_falls_back_to_lowest() {
        let map = flat_map(&[200.0, 400.0], &[40.0, 60.0], 4, 2.0);
        let hist = [DownloadSample { bits: 0.0, duration: 1.0 }];
        let qb = QualityBased::estimated(PolicyConfig::default());
        assert_eq!(qb.decide(&state(&map, 4.0, &hist, None)).unwrap(), Decision::Stream(0));
        let zero = NetworkTrace::constant("z", 0.0, 40.0).unwrap();
        let oqb = QualityBased::oracle(PolicyConfig::default());
        assert_eq!(oqb.decide(&state(&map, 4.0, &[], Some(&zero))).unwrap(), Decision::Stream(0));
    }

    #[test]
    fn overflow_pauses_then_top() {
        let map = flat_map(&[200.0, 400.0], &[40.0, 60.0], 4, 2.0);
        let hist = [DownloadSample { bits: 1e9, duration: 1.0 }];
        let qb = QualityBased::estimated(PolicyConfig::default());
        let mut s = state(&map, 9.5, &hist, None);
        assert_eq!(qb.decide(&s).unwrap(), Decision::Pause { until_buffer: 8.0 });
        s.resumed_from_pause = true;
        assert_eq!(qb.decide(&s).unwrap(), Decision::Stream(1));
    }

    #[test]
    fn oracle_requires_trace() {
        let map = flat_map(&[200.0], &[40.0], 2, 2.0);
        let oqb = QualityBased::oracle(PolicyConfig::default());
        assert_eq!(
            oqb.decide(&state(&map, 4.0, &[], None)),
            Err(AbrError::MissingOracle("oqb"))
        );
    }

    #[test]
    fn constant_trace_oracle_matches_estimate() {
        let map = flat_map(&[150.0, 300.0, 600.0, 1200.0], &[30.0, 50.0, 70.0, 85.0], 8, 2.0);
        let trace = NetworkTrace::constant("c", 700.0, 60.0).unwrap();
        let hist = [DownloadSample { bits: 700_000.0, duration: 1.0 }];
        let qb = QualityBased::estimated(PolicyConfig::default());
        let oqb = QualityBased::oracle(PolicyConfig::default());
        for buffer in [1.5, 2.0, 3.3, 4.0, 6.1, 8.0] {
            let s = state(&map, buffer, &hist, Some(&trace));
            assert_eq!(qb.decide(&s).unwrap(), oqb.decide(&s).unwrap(), "buffer {buffer}");
        }
    }

    #[test]
    fn oracle_sees_cliff_inside_horizon() {
        // 1 s chunks. Bandwidth is 1000 Kbps now but drops to 100 Kbps at t = 2.
        let map = flat_map(&[100.0, 500.0, 900.0], &[30.0, 60.0, 80.0], 10, 1.0);
        let mut kbps = vec![1000.0, 1000.0];
        kbps.extend(std::iter::repeat_n(100.0, 38));
        let trace = NetworkTrace::from_uniform("cliff", &kbps, 1.0).unwrap();
        let hist = [DownloadSample { bits: 1e6, duration: 1.0 }];
        let s = state(&map, 4.0, &hist, Some(&trace));
        let pick = |p: &QualityBased| match p.decide(&s).unwrap() {
            Decision::Stream(i) => i,
            d => panic!("unexpected {d:?}"),
        };
        let qb = pick(&QualityBased::estimated(PolicyConfig::default()));
        let oqb = pick(&QualityBased::oracle(PolicyConfig::default()));
        assert!(oqb < qb, "oqb {oqb} qb {qb}");
    }
}
