//! Solvers and execution machinery for lifelong multi-agent path finding on
//! 4-connected grids.
//!
//! Each planning period of a lifelong run is solved either as a classic MAPF
//! problem (every agent must end on its target) or as a transient one (every
//! agent must visit its target somewhere along its path). The crate provides:
//!
//! - [`grid`]: MovingAI map/scenario parsing and exact distance tables.
//! - [`model`]: paths, conflicts, solution costs and validators.
//! - [`search`]: space-time A* in both goal modes, with reservation tables.
//! - [`prp`]: prioritized planning and large-neighborhood search on top of it.
//! - [`cbs`]: conflict-based search with either low level.
//! - [`pibt`]: priority inheritance with backtracking, one step at a time.
//! - [`lifelong`]: the rolling-horizon execution engine and throughput counter.
//! - [`scenario`]: instance constructors, including the two pathological cases.
//! - [`experiment`]: config-driven experiment matrices, CSV output, replay.

pub mod cbs;
pub mod experiment;
pub mod grid;
pub mod lifelong;
pub mod model;
pub mod pibt;
pub mod prp;
pub mod scenario;
pub mod search;

pub use grid::{Cell, DistanceTable, GridGraph, Vertex};
pub use model::{Conflict, ConflictKind, Mode, Path, Solution};
pub use search::Horizon;
