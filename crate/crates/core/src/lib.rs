//! Reachability-based drivable-area analysis for driving scenarios.
//!
//! For every frame of a scenario, other road users (ORUs) are rolled out
//! under "surprising" kinematic limits and projected onto a ground raster
//! as occupied areas. The ego is rolled out under its normal limits for the
//! replanning delay and responder limits after it, and whatever remains
//! free of the roadgraph and of ORU occupied areas is its drivable area.
//! An empty drivable area at the horizon is a frame violation.

pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod metrics;
pub mod raster;
pub mod reachability;
pub mod roadgraph;
pub mod scenario;

pub use error::{FsmError, Result};
pub use kinematics::{AgentBody, ControlTarget, KinematicProfile, KinematicState, ModelKind};
pub use metrics::{FrameResult, ScenarioMetrics};
pub use raster::{GroundRaster, RasterSpec};
pub use reachability::{AssumptionSet, EgoLaneRestriction, ProfilePair, RoadUserType};
pub use roadgraph::{Lane, LanePoint, Roadgraph};
pub use scenario::{RunConfig, Scenario};
