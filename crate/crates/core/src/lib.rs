//! A deterministic adaptive-streaming laboratory.
//!
//! The crate is organised along the streaming pipeline:
//!
//! - [`ladder`]: per-shot rate–quality convex hulls, Lagrangian shot-level
//!   encode selection, equally-quality-spaced bitrate ladders and the 2D
//!   encoding chunk map.
//! - [`trace`]: network bandwidth traces (HSDPA-style logs), their statistics
//!   and delivery-time queries.
//! - [`abr`]: the client adaptation policies behind one [`abr::AbrPolicy`]
//!   trait, selected by name through an [`abr::Registry`].
//! - [`sim`]: the discrete-event playback simulator producing a
//!   [`sim::SessionLog`].
//! - [`metrics`]: objective indicators, retrospective and continuous QoE
//!   features, train/test splits and evaluation statistics.
//! - [`scenario`]: deterministic synthetic contents and calibrated traces used
//!   for the bundled reference fixtures.

// Input checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod abr;
pub mod ladder;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use abr::{AbrPolicy, Decision, PolicyConfig, Registry};
pub use ladder::{ChunkMap, ConvexHullCurve, RQPoint, ShotRQCurve};
pub use sim::{simulate, SessionConfig, SessionLog};
pub use trace::{NetworkTrace, TraceStats};
