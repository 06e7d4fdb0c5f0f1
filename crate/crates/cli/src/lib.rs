//! Command-line harness around the `abrlab` library: single sessions, full
//! experiment grids, ladder construction, trace statistics, feature export,
//! train/test splits and evaluation.

pub mod commands;
pub mod grid;
pub mod io;

pub use commands::{run, Cli, Outcome};
pub use grid::{run_grid, CellKey, CellOutcome, ExperimentSpec, GridReport};
