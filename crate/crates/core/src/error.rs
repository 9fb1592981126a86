use thiserror::Error;

use crate::model::{InterfaceId, Violation};

pub type Result<T, E = SbraError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SbraError {
    #[error("invalid scenario: {} violation(s), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidScenario(Vec<Violation>),

    #[error("degenerate pair: positions coincide")]
    DegeneratePair,

    #[error("angle {angle_deg}° is not a multiple of the {step_deg}° rotation step")]
    NonGridAngle { angle_deg: f64, step_deg: f64 },

    #[error("nodes {0} and {1} are not neighbors")]
    NotNeighbors(usize, usize),

    #[error("non-positive distance {0} m")]
    NonPositiveDistance(f64),

    #[error("infeasible schedule: interface {iface} cannot reach its final link by slot {slot_count}")]
    Infeasible { iface: InterfaceId, slot_count: usize },

    #[error("schedule conflict: interface {0} was assigned two movements in the same slot")]
    ScheduleConflict(InterfaceId),

    #[error("link {0} is not a candidate")]
    UnknownCandidate(String),

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("instance exceeds oracle limits: {reason} (estimated {estimated_states} states)")]
    OracleLimit { reason: String, estimated_states: u128 },

    #[error("cannot connect every node to the core under {iface_count} interface(s) per node")]
    Connectivity { iface_count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SbraError {
    /// True when the final topology cannot be reached within the slot budget.
    pub fn is_infeasible(&self) -> bool {
        match self {
            SbraError::Infeasible { .. } => true,
            SbraError::InvalidScenario(v) => v.iter().any(|v| v.path.starts_with("final_links[") && v.message.contains(" needs ")),
            _ => false,
        }
    }
}
