//! Exhaustive reference implementations and random instance generators
//! shared by the integration and acceptance tests.
#![allow(dead_code)]

use abrlab::abr::dp::{ChunkOptions, StreamOption, ThroughputModel};
use abrlab::ladder::{ChunkMap, HullShot, SegmentRecord, StreamRow};
use abrlab::NetworkTrace;
use rand::Rng;

// ---------------------------------------------------------------------------
// Quality-based planning

#[derive(Debug, Clone, PartialEq)]
pub enum BruteOutcome {
    Plan { streams: Vec<usize>, value: f64, terminal: i64 },
    BelowMinimum,
    AboveMaximum,
}

pub struct BruteProblem<'a> {
    pub now: f64,
    pub buffer: f64,
    pub chunks: &'a [ChunkOptions],
    pub buffer_min: f64,
    pub buffer_max: f64,
    pub buffer_target: f64,
    pub model: &'a dyn ThroughputModel,
}

/// Tries every stream sequence on a 0.1 s buffer grid.
///
/// Rules: the start buffer is floored onto the grid, the bounds are rounded
/// inwards and the target to the nearest grid point; download times are
/// rounded up and chunk durations to the nearest grid point. A sequence is
/// feasible when every download completes, the buffer never dips below the
/// minimum while downloading and never exceeds the maximum on completion.
/// The plan must end on the feasible end state nearest the target (ties to
/// the larger buffer); among those the best value wins, ties going to the
/// lexicographically smallest sequence.
pub fn brute_force_plan(p: &BruteProblem<'_>) -> BruteOutcome {
    let start = (p.buffer * 10.0 + 1e-9).floor().max(0.0) as i64;
    let min = (p.buffer_min * 10.0 - 1e-9).ceil() as i64;
    let max = (p.buffer_max * 10.0 + 1e-9).floor() as i64;
    let target = (p.buffer_target * 10.0).round() as i64;
    let dur: Vec<i64> = p.chunks.iter().map(|c| (c.duration * 10.0).round() as i64).collect();

    let n = p.chunks.len();
    let radix: Vec<usize> = p.chunks.iter().map(|c| c.options.len()).collect();
    let total: usize = radix.iter().product();
    let mut feasible: Vec<(Vec<usize>, f64, i64)> = Vec::new();
    let mut min_only = false;
    // Counting in mixed radix with chunk 0 most significant visits the
    // sequences in lexicographic order.
    for code in 0..total {
        let mut seq = vec![0usize; n];
        let mut rest = code;
        for j in (0..n).rev() {
            seq[j] = rest % radix[j];
            rest /= radix[j];
        }
        let mut b = start;
        let mut elapsed = 0i64;
        let mut value = 0.0;
        let mut respects_min = true;
        let mut respects_max = true;
        for j in 0..n {
            let opt = p.chunks[j].options[seq[j]];
            let t0 = p.now + 0.1 * elapsed as f64;
            let Some(t) = p.model.download_time(t0, opt.bits).filter(|t| t.is_finite()) else {
                respects_min = false;
                break;
            };
            let du = (t * 10.0 - 1e-9).ceil().max(0.0) as i64;
            if b - du < min {
                respects_min = false;
                break;
            }
            b = b - du + dur[j];
            if b > max {
                respects_max = false;
            }
            elapsed += du;
            value += p.chunks[j].duration * opt.quality;
        }
        if respects_min {
            min_only = true;
            if respects_max {
                feasible.push((seq, value, b));
            }
        }
    }

    let Some(terminal) = feasible
        .iter()
        .map(|f| f.2)
        .min_by(|&a, &b| (a - target).abs().cmp(&(b - target).abs()).then(b.cmp(&a)))
    else {
        return if min_only {
            BruteOutcome::AboveMaximum
        } else {
            BruteOutcome::BelowMinimum
        };
    };
    let mut best: Option<&(Vec<usize>, f64, i64)> = None;
    for f in feasible.iter().filter(|f| f.2 == terminal) {
        if best.is_none_or(|b| f.1 > b.1) {
            best = Some(f);
        }
    }
    let best = best.expect("terminal state has a sequence");
    BruteOutcome::Plan {
        streams: best.0.clone(),
        value: best.1,
        terminal,
    }
}

/// Random planning instance: up to `max_chunks` chunks and `max_streams`
/// streams with increasing bits and quality.
pub fn random_chunks(rng: &mut impl Rng, max_chunks: usize, max_streams: usize) -> Vec<ChunkOptions> {
    let n_chunks = rng.gen_range(1..=max_chunks);
    let n_streams = rng.gen_range(1..=max_streams);
    (0..n_chunks)
        .map(|_| {
            let duration = rng.gen_range(5..=40) as f64 / 10.0;
            let mut kbps = rng.gen_range(50.0..400.0);
            let mut q = rng.gen_range(10.0..40.0);
            let options = (0..n_streams)
                .map(|_| {
                    let o = StreamOption {
                        bits: (kbps * duration * 1000.0f64).round(),
                        quality: q,
                    };
                    kbps *= rng.gen_range(1.2..2.5);
                    q = (q + rng.gen_range(1.0..20.0)).min(100.0);
                    o
                })
                .collect();
            ChunkOptions { duration, options }
        })
        .collect()
}

/// A chunk map built from planning options (all chunks share one layout).
pub fn map_from_chunks(chunks: &[ChunkOptions]) -> ChunkMap {
    let n_streams = chunks[0].options.len();
    ChunkMap {
        content_id: "random".into(),
        shot_durations: chunks.iter().map(|c| c.duration).collect(),
        streams: (0..n_streams)
            .map(|s| StreamRow {
                segments: chunks
                    .iter()
                    .enumerate()
                    .map(|(i, c)| SegmentRecord::new(i as u32, c.duration, c.options[s].bits as u64, 720, c.options[s].quality))
                    .collect(),
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Shot-level encode selection

/// Best duration-weighted quality sum over every combination of hull points
/// within `budget`, or `None` if nothing fits.
pub fn brute_force_select(shots: &[HullShot], budget: u64) -> Option<(f64, u64)> {
    let mut best: Option<(f64, u64)> = None;
    let mut idx = vec![0usize; shots.len()];
    loop {
        let bits: u64 = shots.iter().zip(&idx).map(|(s, &i)| s.hull.points()[i].bits).sum();
        if bits <= budget {
            let wq: f64 = shots
                .iter()
                .zip(&idx)
                .map(|(s, &i)| s.duration * s.hull.points()[i].quality)
                .sum();
            if best.is_none_or(|(b, _)| wq > b) {
                best = Some((wq, bits));
            }
        }
        let mut k = 0;
        while k < shots.len() {
            idx[k] += 1;
            if idx[k] < shots[k].hull.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == shots.len() {
            return best;
        }
    }
}

/// Random concave hulls: `1..=max_shots` shots with `1..=max_points` points.
pub fn random_hull_shots(rng: &mut impl Rng, max_shots: usize, max_points: usize) -> Vec<HullShot> {
    let n = rng.gen_range(1..=max_shots);
    (0..n)
        .map(|i| {
            let mut points = Vec::new();
            let mut bits = rng.gen_range(50u64..500);
            let mut q = rng.gen_range(5.0..30.0);
            for _ in 0..rng.gen_range(1..=max_points) {
                points.push(abrlab::RQPoint::new(720, 30, bits, q));
                bits += rng.gen_range(20u64..600);
                q = (q + rng.gen_range(0.5..15.0)).min(100.0);
            }
            let hull = abrlab::ladder::build_convex_hull(&points).expect("non-empty");
            HullShot {
                shot_id: i as u32,
                duration: rng.gen_range(1..=12) as f64 / 2.0,
                hull,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Sessions

/// A random chunk map with streams ordered by bitrate.
pub fn random_chunk_map(rng: &mut impl Rng) -> ChunkMap {
    let n_chunks = rng.gen_range(2..=8);
    let n_streams = rng.gen_range(1..=5);
    let durations: Vec<f64> = (0..n_chunks).map(|_| rng.gen_range(2..=12) as f64 / 2.0).collect();
    let mut kbps: Vec<f64> = (0..n_streams).map(|_| rng.gen_range(100.0..3000.0)).collect();
    kbps.sort_by(f64::total_cmp);
    let heights = [240, 360, 480, 720, 1080];
    ChunkMap {
        content_id: "random".into(),
        shot_durations: durations.clone(),
        streams: kbps
            .iter()
            .enumerate()
            .map(|(s, &k)| StreamRow {
                segments: durations
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| {
                        let bits = (k * d * 1000.0 * rng.gen_range(0.8..1.2)).round() as u64;
                        SegmentRecord::new(i as u32, d, bits, heights[s.min(4)], 20.0 + 15.0 * s as f64)
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// A random 1 s trace with strictly positive bandwidth.
pub fn random_trace(rng: &mut impl Rng) -> NetworkTrace {
    let n = rng.gen_range(5..=40);
    let kbps: Vec<f64> = (0..n).map(|_| rng.gen_range(50.0..3000.0)).collect();
    NetworkTrace::from_uniform("random", &kbps, 1.0).expect("valid trace")
}

/// Checks the physical consistency of a simulated session against the
/// inputs that produced it. Returns a description of the first violation.
pub fn check_session(log: &abrlab::SessionLog, map: &ChunkMap, trace: &NetworkTrace) -> Result<(), String> {
    const TOL: f64 = 1e-6;
    let n = map.n_chunks();
    if log.downloads.len() != n || log.playback.len() != n {
        return Err(format!("{} downloads, {} played, {} chunks", log.downloads.len(), log.playback.len(), n));
    }

    // Wall time is startup plus content plus stalls.
    let expected = log.startup_delay + map.content_duration() + log.rebuffer_time();
    if (log.wall_time - expected).abs() > TOL {
        return Err(format!("wall time {} but startup+content+stalls = {}", log.wall_time, expected));
    }

    // Downloads are sequential, in order, priced by the trace and the map.
    let mut prev_end = 0.0;
    for (i, d) in log.downloads.iter().enumerate() {
        if d.chunk != i {
            return Err(format!("download {i} fetched chunk {}", d.chunk));
        }
        if d.bits != map.segment(d.stream, i).bits {
            return Err(format!("chunk {i}: {} bits logged", d.bits));
        }
        if d.t_request < prev_end - TOL {
            return Err(format!("chunk {i} requested at {} before {prev_end}", d.t_request));
        }
        let delivered = trace.cumulative_bits(d.t_complete) - trace.cumulative_bits(d.t_request);
        if (delivered - d.bits as f64).abs() > 1e-6 * (d.bits as f64).max(1.0) {
            return Err(format!("chunk {i}: trace delivers {delivered} bits, logged {}", d.bits));
        }
        prev_end = d.t_complete;
    }
    // Time between downloads is exactly the logged pauses.
    let gaps: f64 = log.downloads.windows(2).map(|w| w[1].t_request - w[0].t_complete).sum();
    let paused: f64 = log.pauses.iter().map(|p| p.duration).sum();
    if (gaps - paused).abs() > TOL {
        return Err(format!("idle {gaps} s between downloads, paused {paused} s"));
    }

    // Playback is contiguous apart from stalls and never precedes arrival.
    let mut play_end = log.startup_delay;
    for (i, p) in log.playback.iter().enumerate() {
        if p.stream != log.downloads[i].stream {
            return Err(format!("chunk {i}: played stream {}", p.stream));
        }
        if p.t_play_start < log.downloads[i].t_complete - TOL {
            return Err(format!("chunk {i} plays before it arrives"));
        }
        let stall: f64 = log.rebuffers.iter().filter(|r| r.chunk == i).map(|r| r.duration).sum();
        if (p.t_play_start - play_end - stall).abs() > TOL {
            return Err(format!("chunk {i} starts at {}, expected {}", p.t_play_start, play_end + stall));
        }
        play_end = p.t_play_end();
    }

    // Buffer never negative; zero exactly when stalled.
    let mut pts: Vec<f64> = log
        .downloads
        .iter()
        .flat_map(|d| [d.t_request, d.t_complete])
        .chain(log.playback.iter().flat_map(|p| [p.t_play_start, p.t_play_end()]))
        .chain(log.rebuffers.iter().flat_map(|r| [r.t_start, r.t_start + r.duration]))
        .filter(|&t| t >= log.startup_delay)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    for w in pts.windows(2) {
        if w[1] - w[0] < 1e-7 {
            continue;
        }
        let t = 0.5 * (w[0] + w[1]);
        let b = log.buffer_at(t);
        if b < -TOL {
            return Err(format!("buffer {b} at {t}"));
        }
        let stalled = log.is_stalled(t);
        if stalled != (b <= TOL) {
            return Err(format!("at {t}: buffer {b}, stalled {stalled}"));
        }
        if stalled == log.playing_at(t).is_some() {
            return Err(format!("at {t}: stalled {stalled} but playing state disagrees"));
        }
    }
    Ok(())
}
