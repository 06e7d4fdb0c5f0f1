//! Encoding side of the pipeline: rate–quality hulls, shot-level encode
//! selection under a bit budget, bitrate ladders and chunk maps.
//!
//! Quality is an abstract score on `[0, 100]`; it is ingested as data and
//! never computed here.

mod bitrate_ladder;
mod chunk_map;
mod hull;
mod optimizer;

pub use bitrate_ladder::{build_bitrate_ladder, Ladder};
pub use chunk_map::{build_chunk_map, ChunkMap, SegmentRecord, StreamRow};
pub use hull::{build_convex_hull, ConvexHullCurve};
pub use optimizer::{argmax_at, do_select, sweep_points, HullShot, Selection, SweepPoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LadderError {
    #[error("no encode points")]
    NoEncodePoints,
    #[error("no shots")]
    NoShots,
    #[error("budget infeasible: {budget} bits < minimum {minimum} bits")]
    BudgetInfeasible { budget: u64, minimum: u64 },
    #[error("ladder needs at least 2 rungs, got {0}")]
    TooFewRungs(usize),
    #[error("{requested} rungs requested but only {available} distinct operating points exist")]
    TooManyRungs { requested: usize, available: usize },
    #[error("ladder budgets must be strictly increasing")]
    BudgetsNotIncreasing,
    #[error("invalid encode point: {0}")]
    InvalidPoint(String),
    #[error("invalid shot: {0}")]
    InvalidShot(String),
    #[error("invalid chunk map: {0}")]
    InvalidChunkMap(String),
}

/// One encode of a shot: resolution and quantizer, total bits, mean quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RQPoint {
    pub resolution_height: u32,
    pub qp: u32,
    pub bits: u64,
    pub quality: f64,
}

impl RQPoint {
    pub fn new(resolution_height: u32, qp: u32, bits: u64, quality: f64) -> Self {
        Self {
            resolution_height,
            qp,
            bits,
            quality,
        }
    }

    pub fn validate(&self) -> Result<(), LadderError> {
        if !(0.0..=100.0).contains(&self.quality) {
            return Err(LadderError::InvalidPoint(format!(
                "quality {} outside [0, 100]",
                self.quality
            )));
        }
        Ok(())
    }
}

/// All measured encodes of one shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRQCurve {
    pub shot_id: u32,
    pub duration: f64,
    pub points: Vec<RQPoint>,
}

impl ShotRQCurve {
    pub fn validate(&self) -> Result<(), LadderError> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(LadderError::InvalidShot(format!(
                "shot {} has non-positive duration {}",
                self.shot_id, self.duration
            )));
        }
        if self.points.is_empty() {
            return Err(LadderError::NoEncodePoints);
        }
        self.points.iter().try_for_each(RQPoint::validate)
    }

    /// Builds the shot's hull and pairs it with the duration.
    pub fn to_hull_shot(&self) -> Result<HullShot, LadderError> {
        self.validate()?;
        Ok(HullShot {
            shot_id: self.shot_id,
            duration: self.duration,
            hull: build_convex_hull(&self.points)?,
        })
    }
}

/// Hulls for every shot of a content, in shot order.
pub fn hull_shots(shots: &[ShotRQCurve]) -> Result<Vec<HullShot>, LadderError> {
    if shots.is_empty() {
        return Err(LadderError::NoShots);
    }
    shots.iter().map(ShotRQCurve::to_hull_shot).collect()
}
