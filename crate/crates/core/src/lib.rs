//! Rotation scheduling and routing for reconfiguring mmWave backhaul meshes
//! built from steerable directional antennas.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod greedy;
pub mod kinematics;
pub mod linkbudget;
pub mod model;
pub mod multistart;
pub mod preprocess;
pub mod ranking;
pub mod result;
pub mod routing;
pub mod scenarios;

pub use error::{Result, SbraError};
pub use model::{InterfaceId, Link, MultiStartParams, Scenario, WeightSet};
pub use result::{Algorithm, ReconfigResult};
