use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const N_TRACES: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// All 21 ways of holding out two of seven traces. Ids are sorted first, so
/// the order depends only on the set of ids: test pairs run `(a,b), (a,c),
/// ..., (f,g)`.
pub fn trace_splits<S: AsRef<str>>(trace_ids: &[S]) -> Result<Vec<Split>, MetricsError> {
    let mut ids: Vec<String> = trace_ids.iter().map(|s| s.as_ref().to_string()).collect();
    if ids.len() != N_TRACES {
        return Err(MetricsError::SplitSize(ids.len()));
    }
    ids.sort();
    ids.dedup();
    if ids.len() != N_TRACES {
        return Err(MetricsError::DuplicateTrace);
    }
    let mut out = Vec::with_capacity(21);
    for i in 0..N_TRACES {
        for j in i + 1..N_TRACES {
            out.push(Split {
                test: vec![ids[i].clone(), ids[j].clone()],
                train: ids
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .map(|(_, id)| id.clone())
                    .collect(),
            });
        }
    }
    Ok(out)
}

impl Split {
    /// Number of (train, test) sessions when every trace is paired with
    /// every content and adaptor.
    pub fn video_counts(&self, n_contents: usize, n_abrs: usize) -> (usize, usize) {
        let per_trace = n_contents * n_abrs;
        (self.train.len() * per_trace, self.test.len() * per_trace)
    }
}

pub fn splits_json(splits: &[Split]) -> String {
    serde_json::to_string_pretty(splits).expect("splits serialize")
}
