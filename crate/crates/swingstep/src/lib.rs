//! Swing-leg trajectory planning and desk-scale terrain simulation for
//! heavy statically-stable walkers.
//!
//! The crate provides two stepping strategies driven by a per-leg state
//! machine with force feedback: a blind strategy built from compound
//! step curves, and a terrain-aware strategy that descends an
//! attractive/repulsive potential over the local map and patches the map
//! with predictions at contact points. A seeded terrain oracle, a step
//! episode executor, a batch benchmark runner, and a planar static-walk
//! simulation reproduce the desk-scale experiments end to end.

pub mod apf;
pub mod cycloid;
pub mod fsm;
pub mod gait;
pub mod geometry;
pub mod sim;
pub mod spline;
pub mod svg;
pub mod terrain;

pub use apf::{ApfConfig, ApfPlanner, DescentOutcome, PotentialGrid};
pub use cycloid::{CycloidParams, Phase, SegmentSource, TrajectorySegment};
pub use fsm::{AdjustmentCase, FsmConfig, LegState, StepCommand, StopEvent};
pub use geometry::{EndpointInterval, ForceSample, LocalMap, ObstaclePatch, Point, Provenance, Region};
pub use sim::{execute_step, run_batch, BatchRow, EpisodeConfig, EpisodeResult, Strategy};
pub use terrain::{Ground, TerrainParams, TerrainProfile};
