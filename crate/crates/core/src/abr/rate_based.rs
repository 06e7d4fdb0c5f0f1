use super::{chunk_bitrates, estimate_throughput, AbrError, AbrPolicy, ClientState, Decision, PolicyConfig};

/// Rate-based adaptation: the largest stream whose next chunk, at the
/// estimated throughput, downloads before the buffer runs out.
#[derive(Debug, Clone)]
pub struct RateBased {
    config: PolicyConfig,
}

impl RateBased {
    pub fn new(config: PolicyConfig) -> Self {
        Self { config }
    }
}

impl AbrPolicy for RateBased {
    fn name(&self) -> &'static str {
        "rb"
    }

    fn decide(&self, state: &ClientState<'_>) -> Result<Decision, AbrError> {
        chunk_bitrates(state.chunk_map, state.next_chunk)?;
        let estimate = match estimate_throughput(state.history, self.config.window) {
            Ok(kbps) => kbps,
            Err(AbrError::EmptyHistory) => return Ok(Decision::Stream(0)),
            Err(e) => return Err(e),
        };
        let pick = (0..state.chunk_map.n_streams())
            .rev()
            .find(|&s| {
                let bits = state.chunk_map.segment(s, state.next_chunk).bits as f64;
                bits / (estimate * 1000.0) <= state.buffer
            })
            .unwrap_or(0);
        Ok(Decision::Stream(pick))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abr::test_support::flat_map;
    use crate::abr::DownloadSample;
    use proptest::prelude::*;

    fn decide(buffer: f64, history: &[DownloadSample]) -> usize {
        let map = flat_map(&[200.0, 400.0, 800.0], &[30.0, 50.0, 70.0], 3, 4.0);
        let state = ClientState {
            now: 0.0,
            next_chunk: 1,
            buffer,
            history,
            chunk_map: &map,
            oracle: None,
            resumed_from_pause: false,
        };
        match RateBased::new(PolicyConfig::default()).decide(&state).unwrap() {
            Decision::Stream(s) => s,
            d => panic!("unexpected {d:?}"),
        }
    }

    fn at(kbps: f64) -> Vec<DownloadSample> {
        vec![DownloadSample {
            bits: kbps * 1000.0,
            duration: 1.0,
        }]
    }

    #[test]
    fn picks_largest_that_fits() {
        // download times 1.6, 3.2, 6.4 s against a 4 s buffer
        assert_eq!(decide(4.0, &at(500.0)), 1);
    }

    #[test]
    fn empty_history_lowest() {
        assert_eq!(decide(4.0, &[]), 0);
    }

    #[test]
    fn huge_buffer_top() {
        assert_eq!(decide(1e6, &at(1.0)), 2);
    }

    #[test]
    fn nothing_fits_lowest() {
        assert_eq!(decide(0.1, &at(100.0)), 0);
    }

    proptest! {
        #[test]
        fn monotone_in_estimate_and_buffer(
            k1 in 10.0f64..3000.0, k2 in 10.0f64..3000.0,
            b1 in 0.0f64..20.0, b2 in 0.0f64..20.0,
        ) {
            let (klo, khi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let (blo, bhi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            prop_assert!(decide(blo, &at(klo)) <= decide(blo, &at(khi)));
            prop_assert!(decide(blo, &at(klo)) <= decide(bhi, &at(klo)));
        }
    }
}
