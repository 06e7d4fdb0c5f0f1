//! Shot-level encode selection under a total bit budget.
//!
//! Maximises duration-weighted mean quality subject to `Σ bits ≤ budget` by a
//! Lagrangian sweep: for a multiplier `λ ≥ 0` every shot independently takes
//! `argmax(duration · quality − λ · bits)` over its hull, ties going to fewer
//! bits. On concave hulls the argmax only changes when `λ` crosses one of the
//! segment slopes, so instead of bisecting on `λ` the full family of sweep
//! selections is enumerated exactly by walking the segment slopes in
//! decreasing order. A budget between two sweep points gets the lower one;
//! encodes are atomic, so there is no fractional selection.

use serde::{Deserialize, Serialize};

use super::{ConvexHullCurve, LadderError, RQPoint};

/// A shot's hull together with its duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullShot {
    pub shot_id: u32,
    pub duration: f64,
    pub hull: ConvexHullCurve,
}

/// One selection on the Lagrangian sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Hull index chosen for every shot.
    pub choice: Vec<usize>,
    pub total_bits: u64,
    /// `Σ duration · quality`, summed in shot order.
    pub weighted_quality: f64,
    pub mean_quality: f64,
    /// Multipliers for which this selection is the argmax lie in
    /// `(lambda_low, lambda_high)`; `lambda_high` is infinite for the
    /// cheapest selection.
    pub lambda_low: f64,
    pub lambda_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub choice: Vec<usize>,
    pub points: Vec<RQPoint>,
    pub total_bits: u64,
    pub mean_quality: f64,
    /// Unused budget: `budget − total_bits`.
    pub gap_bits: u64,
}

fn evaluate(shots: &[HullShot], choice: &[usize]) -> (u64, f64, f64) {
    let mut bits = 0u64;
    let mut weighted = 0.0;
    let mut duration = 0.0;
    for (shot, &j) in shots.iter().zip(choice) {
        let p = &shot.hull.points()[j];
        bits += p.bits;
        weighted += shot.duration * p.quality;
        duration += shot.duration;
    }
    (bits, weighted, weighted / duration)
}

/// Per-shot argmax of `duration · quality − λ · bits`, ties to fewer bits.
pub fn argmax_at(shots: &[HullShot], lambda: f64) -> Vec<usize> {
    shots
        .iter()
        .map(|shot| {
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (j, p) in shot.hull.points().iter().enumerate() {
                let v = shot.duration * p.quality - lambda * p.bits as f64;
                if v > best_val {
                    best = j;
                    best_val = v;
                }
            }
            best
        })
        .collect()
}

/// All distinct selections of the Lagrangian sweep, cheapest first.
pub fn sweep_points(shots: &[HullShot]) -> Result<Vec<SweepPoint>, LadderError> {
    if shots.is_empty() {
        return Err(LadderError::NoShots);
    }

    struct Segment {
        shot: usize,
        slope: f64,
    }
    let mut segments = Vec::new();
    for (i, shot) in shots.iter().enumerate() {
        for pair in shot.hull.points().windows(2) {
            let dq = shot.duration * (pair[1].quality - pair[0].quality);
            let db = (pair[1].bits - pair[0].bits) as f64;
            segments.push(Segment {
                shot: i,
                slope: dq / db,
            });
        }
    }
    // Stable: a shot's own segments keep their (already decreasing) order.
    segments.sort_by(|a, b| b.slope.total_cmp(&a.slope));

    let mut choice = vec![0usize; shots.len()];
    let mut out = Vec::new();
    let mut lambda_high = f64::INFINITY;

    let mut k = 0;
    while k < segments.len() {
        let slope = segments[k].slope;
        out.push(SweepPoint {
            choice: choice.clone(),
            total_bits: 0,
            weighted_quality: 0.0,
            mean_quality: 0.0,
            lambda_low: slope,
            lambda_high,
        });
        while k < segments.len() && segments[k].slope == slope {
            choice[segments[k].shot] += 1;
            k += 1;
        }
        lambda_high = slope;
    }
    out.push(SweepPoint {
        choice: choice.clone(),
        total_bits: 0,
        weighted_quality: 0.0,
        mean_quality: 0.0,
        lambda_low: 0.0,
        lambda_high,
    });

    for p in &mut out {
        let (b, w, m) = evaluate(shots, &p.choice);
        p.total_bits = b;
        p.weighted_quality = w;
        p.mean_quality = m;
    }
    Ok(out)
}

/// Best sweep selection whose total bits fit in `budget`.
pub fn select_from_sweep(
    shots: &[HullShot],
    sweep: &[SweepPoint],
    budget: u64,
) -> Result<Selection, LadderError> {
    let minimum = sweep[0].total_bits;
    if budget < minimum {
        return Err(LadderError::BudgetInfeasible { budget, minimum });
    }
    let idx = sweep.partition_point(|p| p.total_bits <= budget) - 1;
    let p = &sweep[idx];
    Ok(Selection {
        points: shots
            .iter()
            .zip(&p.choice)
            .map(|(s, &j)| s.hull.points()[j])
            .collect(),
        choice: p.choice.clone(),
        total_bits: p.total_bits,
        mean_quality: p.mean_quality,
        gap_bits: budget - p.total_bits,
    })
}

pub fn do_select(shots: &[HullShot], bit_budget: u64) -> Result<Selection, LadderError> {
    let sweep = sweep_points(shots)?;
    select_from_sweep(shots, &sweep, bit_budget)
}
