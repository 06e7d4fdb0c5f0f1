//! Finite-horizon dynamic program behind the quality-based policies.
//!
//! The buffer is tracked on a 0.1 s grid. Choosing stream `s` for chunk `j`
//! from buffer `b` (grid units) costs `Δ = ceil(download_time / 0.1)` units
//! and yields `b' = b − Δ + round(duration_j / 0.1)`. A transition is
//! infeasible when the download cannot complete, when `b − Δ` falls below
//! the minimum buffer, or when `b'` exceeds the maximum buffer. Plans
//! maximise `Σ duration_j · quality_j`.
//!
//! Plans must end at the target buffer. The terminal state is the reachable
//! grid state nearest the target (ties to the larger buffer), which is the
//! target itself whenever that state can be reached. Among plans ending
//! there, ties in value go to the lexicographically smallest stream
//! sequence, so the lowest first-chunk stream wins.
//!
//! When no plan exists the outcome says which bound is responsible: if no
//! stream sequence even keeps the buffer above the minimum the result is
//! [`DpOutcome::BelowMinimum`], otherwise every such sequence overflows the
//! maximum and the result is [`DpOutcome::AboveMaximum`].
//!
//! Download start times follow from the state: with back-to-back downloads
//! the elapsed grid time before chunk `j` is `b₀ + Σ_{i<j} dur_i − b`, so the
//! time-varying (oracle) model fits the same one-dimensional state.

use std::collections::{BTreeMap, BTreeSet};

use crate::trace::NetworkTrace;

/// Buffer grid resolution, seconds.
pub const GRID_STEP: f64 = 0.1;
const EPS: f64 = 1e-9;

/// Predicts how long a download takes.
pub trait ThroughputModel {
    /// Seconds to fetch `bits` starting at wall time `start`, or `None` if
    /// the download never completes.
    fn download_time(&self, start: f64, bits: f64) -> Option<f64>;
}

/// Bandwidth assumed constant at an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantThroughput {
    pub kbps: f64,
}

impl ThroughputModel for ConstantThroughput {
    fn download_time(&self, _start: f64, bits: f64) -> Option<f64> {
        if bits <= 0.0 || (self.kbps.is_infinite() && self.kbps > 0.0) {
            Some(0.0)
        } else if self.kbps > 0.0 {
            Some(bits / (self.kbps * 1000.0))
        } else {
            None
        }
    }
}

/// The true trace.
#[derive(Debug, Clone, Copy)]
pub struct OracleThroughput<'a> {
    pub trace: &'a NetworkTrace,
}

impl ThroughputModel for OracleThroughput<'_> {
    fn download_time(&self, start: f64, bits: f64) -> Option<f64> {
        self.trace.time_to_deliver(start, bits).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamOption {
    pub bits: f64,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkOptions {
    pub duration: f64,
    /// Indexed by stream.
    pub options: Vec<StreamOption>,
}

pub struct DpProblem<'a> {
    pub now: f64,
    pub buffer: f64,
    pub chunks: Vec<ChunkOptions>,
    pub buffer_min: f64,
    pub buffer_max: f64,
    pub buffer_target: f64,
    pub model: &'a dyn ThroughputModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    /// Stream per horizon chunk.
    pub streams: Vec<usize>,
    pub value: f64,
    /// Buffer (grid units) after each chunk completes.
    pub buffers: Vec<i64>,
}

impl Plan {
    pub fn terminal_units(&self) -> i64 {
        *self.buffers.last().expect("plan covers at least one chunk")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DpOutcome {
    Plan(Plan),
    BelowMinimum,
    AboveMaximum,
}

/// Grid quantities of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridBounds {
    pub start: i64,
    pub min: i64,
    pub max: i64,
    pub target: i64,
}

impl DpProblem<'_> {
    pub fn grid(&self) -> GridBounds {
        GridBounds {
            start: (self.buffer / GRID_STEP + EPS).floor().max(0.0) as i64,
            min: (self.buffer_min / GRID_STEP - EPS).ceil() as i64,
            max: (self.buffer_max / GRID_STEP + EPS).floor() as i64,
            target: (self.buffer_target / GRID_STEP).round() as i64,
        }
    }

    pub fn duration_units(&self) -> Vec<i64> {
        self.chunks
            .iter()
            .map(|c| (c.duration / GRID_STEP).round() as i64)
            .collect()
    }

    /// Wall time at which a download starts after `elapsed` grid units.
    pub fn start_time(&self, elapsed: i64) -> f64 {
        self.now + GRID_STEP * elapsed as f64
    }

    /// Grid units a download takes, or `None` if it never completes.
    pub fn download_units(&self, start: f64, bits: f64) -> Option<i64> {
        let t = self.model.download_time(start, bits)?;
        if !t.is_finite() {
            return None;
        }
        Some((t / GRID_STEP - EPS).ceil().max(0.0) as i64)
    }
}

struct Entry {
    value: f64,
    path: Vec<usize>,
    buffers: Vec<i64>,
}

fn better(value: f64, path: &[usize], than: &Entry) -> bool {
    value > than.value || (value == than.value && path < than.path.as_slice())
}

pub fn solve(problem: &DpProblem<'_>) -> DpOutcome {
    let grid = problem.grid();
    let dur = problem.duration_units();

    let mut layer: BTreeMap<i64, Entry> = BTreeMap::new();
    layer.insert(
        grid.start,
        Entry {
            value: 0.0,
            path: Vec::new(),
            buffers: Vec::new(),
        },
    );
    let mut elapsed_base = grid.start;
    for (j, chunk) in problem.chunks.iter().enumerate() {
        let mut next: BTreeMap<i64, Entry> = BTreeMap::new();
        for (&b, entry) in &layer {
            let start = problem.start_time(elapsed_base - b);
            for (s, opt) in chunk.options.iter().enumerate() {
                let Some(du) = problem.download_units(start, opt.bits) else {
                    continue;
                };
                if b - du < grid.min {
                    continue;
                }
                let nb = b - du + dur[j];
                if nb > grid.max {
                    continue;
                }
                let value = entry.value + chunk.duration * opt.quality;
                let mut path = entry.path.clone();
                path.push(s);
                let replace = next.get(&nb).is_none_or(|cur| better(value, &path, cur));
                if replace {
                    let mut buffers = entry.buffers.clone();
                    buffers.push(nb);
                    next.insert(nb, Entry { value, path, buffers });
                }
            }
        }
        layer = next;
        elapsed_base += dur[j];
    }

    let terminal = layer
        .keys()
        .copied()
        .min_by(|&a, &b| (a - grid.target).abs().cmp(&(b - grid.target).abs()).then(b.cmp(&a)));
    match terminal {
        Some(t) => {
            let e = layer.remove(&t).expect("terminal state present");
            DpOutcome::Plan(Plan {
                streams: e.path,
                value: e.value,
                buffers: e.buffers,
            })
        }
        None if reachable_ignoring_max(problem, grid, &dur) => DpOutcome::AboveMaximum,
        None => DpOutcome::BelowMinimum,
    }
}

/// Whether some stream sequence completes while respecting only the minimum.
fn reachable_ignoring_max(problem: &DpProblem<'_>, grid: GridBounds, dur: &[i64]) -> bool {
    let mut states = BTreeSet::from([grid.start]);
    let mut elapsed_base = grid.start;
    for (j, chunk) in problem.chunks.iter().enumerate() {
        let mut next = BTreeSet::new();
        for &b in &states {
            let start = problem.start_time(elapsed_base - b);
            for opt in &chunk.options {
                if let Some(du) = problem.download_units(start, opt.bits) {
                    if b - du >= grid.min {
                        next.insert(b - du + dur[j]);
                    }
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        states = next;
        elapsed_base += dur[j];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(duration: f64, opts: &[(f64, f64)]) -> ChunkOptions {
        ChunkOptions {
            duration,
            options: opts
                .iter()
                .map(|&(bits, quality)| StreamOption { bits, quality })
                .collect(),
        }
    }

    fn problem<'a>(buffer: f64, chunks: Vec<ChunkOptions>, model: &'a dyn ThroughputModel) -> DpProblem<'a> {
        DpProblem {
            now: 0.0,
            buffer,
            chunks,
            buffer_min: 1.0,
            buffer_max: 10.0,
            buffer_target: 3.0,
            model,
        }
    }

    #[test]
    fn single_stage_argmax_among_feasible() {
        // 1000 Kbps; 2 s chunk; buffer 3 s. Download times 0.5, 1.0, 2.0 s.
        // Terminal buffers 4.5, 4.0, 3.0 -> only the top stream lands on 3.0.
        let m = ConstantThroughput { kbps: 1000.0 };
        let p = problem(3.0, vec![chunk(2.0, &[(5e5, 40.0), (1e6, 60.0), (2e6, 80.0)])], &m);
        match solve(&p) {
            DpOutcome::Plan(plan) => {
                assert_eq!(plan.streams, vec![2]);
                assert_eq!(plan.terminal_units(), 30);
                assert_eq!(plan.value, 160.0);
            }
            o => panic!("unexpected {o:?}"),
        }
    }

    #[test]
    fn greedy_first_choice_would_miss_target() {
        // 1000 Kbps, 1 s chunks, start 3.0 s, target 3.0 s.
        // Chunk 0: {0.5 s, q 40} or {1.5 s, q 90}; chunk 1: {1.5 s, q 50} or {2.5 s, q 60}.
        // Greedy takes stream 1 first (buffer 2.5 s) and can then only end at
        // 2.0 s or drop below the minimum. Only (0, 0) ends at 3.0 s.
        let m = ConstantThroughput { kbps: 1000.0 };
        let p = problem(
            3.0,
            vec![
                chunk(1.0, &[(5e5, 40.0), (1.5e6, 90.0)]),
                chunk(1.0, &[(1.5e6, 50.0), (2.5e6, 60.0)]),
            ],
            &m,
        );
        match solve(&p) {
            DpOutcome::Plan(plan) => {
                assert_eq!(plan.streams, vec![0, 0]);
                assert_eq!(plan.value, 90.0);
                assert_eq!(plan.buffers, vec![35, 30]);
            }
            o => panic!("unexpected {o:?}"),
        }
    }

    #[test]
    fn zero_bandwidth_below_minimum() {
        let m = ConstantThroughput { kbps: 0.0 };
        let p = problem(4.0, vec![chunk(2.0, &[(5e5, 40.0), (1e6, 60.0)])], &m);
        assert_eq!(solve(&p), DpOutcome::BelowMinimum);
    }

    #[test]
    fn low_buffer_below_minimum() {
        // 0.5 s buffer can never stay above 1 s while downloading.
        let m = ConstantThroughput { kbps: 1e6 };
        let p = problem(0.5, vec![chunk(4.0, &[(1e3, 40.0)])], &m);
        assert_eq!(solve(&p), DpOutcome::BelowMinimum);
    }

    #[test]
    fn fast_link_full_buffer_above_maximum() {
        let m = ConstantThroughput { kbps: 1e6 };
        let p = problem(8.0, vec![chunk(4.0, &[(1e3, 40.0), (2e3, 60.0)])], &m);
        assert_eq!(solve(&p), DpOutcome::AboveMaximum);
    }

    #[test]
    fn oracle_model_uses_start_time() {
        let trace = NetworkTrace::from_uniform("cliff", &[1000.0, 1000.0, 100.0, 100.0], 1.0).unwrap();
        let m = OracleThroughput { trace: &trace };
        let p = problem(5.0, vec![chunk(1.0, &[(1e6, 50.0)]), chunk(1.0, &[(1e5, 50.0)])], &m);
        match solve(&p) {
            DpOutcome::Plan(plan) => {
                // first download 1.0 s, second starts at t = 1.0 and takes 0.1 s
                assert_eq!(plan.buffers, vec![50, 59]);
            }
            o => panic!("unexpected {o:?}"),
        }
    }
}
