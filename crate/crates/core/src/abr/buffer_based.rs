use super::{chunk_bitrates, AbrError, AbrPolicy, ClientState, Decision, PolicyConfig};

/// Buffer-based adaptation: the next chunk's rate is a function of buffer
/// occupancy only.
///
/// At or below the reservoir the lowest rate is used, at or above
/// reservoir + cushion the highest; in between the allowed rate rises
/// linearly from the chunk's lowest to its highest bitrate and the highest
/// stream not exceeding it is picked.
#[derive(Debug, Clone)]
pub struct BufferBased {
    config: PolicyConfig,
}

impl BufferBased {
    pub fn new(config: PolicyConfig) -> Self {
        Self { config }
    }
}

/// Index of the highest bitrate not above `limit`; lowest stream if none.
pub(crate) fn highest_below(bitrates: &[f64], limit: f64) -> usize {
    let mut pick: Option<usize> = None;
    for (i, &b) in bitrates.iter().enumerate() {
        if b <= limit && pick.is_none_or(|p| b > bitrates[p]) {
            pick = Some(i);
        }
    }
    pick.unwrap_or_else(|| lowest(bitrates))
}

pub(crate) fn lowest(bitrates: &[f64]) -> usize {
    (0..bitrates.len())
        .min_by(|&a, &b| bitrates[a].total_cmp(&bitrates[b]))
        .unwrap_or(0)
}

pub(crate) fn highest(bitrates: &[f64]) -> usize {
    (0..bitrates.len())
        .rev()
        .max_by(|&a, &b| bitrates[a].total_cmp(&bitrates[b]))
        .unwrap_or(0)
}

impl AbrPolicy for BufferBased {
    fn name(&self) -> &'static str {
        "bb"
    }

    fn decide(&self, state: &ClientState<'_>) -> Result<Decision, AbrError> {
        let rates = chunk_bitrates(state.chunk_map, state.next_chunk)?;
        let (r, c) = (self.config.reservoir, self.config.cushion);
        let pick = if state.buffer <= r {
            lowest(&rates)
        } else if state.buffer >= r + c {
            highest(&rates)
        } else {
            let (lo, hi) = (rates[lowest(&rates)], rates[highest(&rates)]);
            let limit = lo + (state.buffer - r) / c * (hi - lo);
            highest_below(&rates, limit)
        };
        Ok(Decision::Stream(pick))
    }
}
