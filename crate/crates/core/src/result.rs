//! Algorithm output and its JSON document form.

use serde::{Deserialize, Serialize};

use crate::greedy::SelectionTrace;
use crate::kinematics::{RotationSchedule, Segment};
use crate::model::{Link, Scenario, WeightSet};
use crate::routing::LossReport;

pub const TOOL_NAME: &str = "sbra";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Greedy,
    MsGreedy,
    AllFixed,
    Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::MsGreedy => "ms-greedy",
            Algorithm::AllFixed => "all-fixed",
            Algorithm::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Algorithm::Greedy, Algorithm::MsGreedy, Algorithm::AllFixed, Algorithm::Oracle]
            .into_iter()
            .find(|a| a.name() == s)
    }
}

/// Wall time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub preprocess_ms: f64,
    pub rank_ms: f64,
    pub select_ms: f64,
    pub assign_ms: f64,
    pub routing_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconfigResult {
    pub algorithm: Algorithm,
    pub schedule: RotationSchedule,
    pub links_per_slot: Vec<Vec<Link>>,
    pub loss: LossReport,
    pub weights: Option<WeightSet>,
    pub xi: Option<usize>,
    pub seed: Option<u64>,
    pub trace: Option<SelectionTrace>,
    pub timings: Timings,
    /// Set when the result is a proven optimum.
    pub oracle: bool,
}

impl ReconfigResult {
    pub fn total_loss_bytes(&self) -> f64 {
        self.loss.total_bytes
    }

    /// Equality on everything except wall-clock timings.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let strip = |r: &Self| Self { timings: Timings::default(), ..r.clone() };
        strip(self) == strip(other)
    }

    pub fn document(&self, s: &Scenario, params: serde_json::Value) -> ResultDocument {
        let schedule = s
            .interfaces()
            .map(|x| InterfaceSchedule { node: x.node, iface: x.iface, segments: self.schedule.segments(x) })
            .collect();
        ResultDocument {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            scenario_digest: s.digest(),
            algorithm: self.algorithm,
            params,
            seed: self.seed,
            weights: self.weights,
            xi: self.xi,
            oracle: self.oracle,
            total_loss_bytes: self.loss.total_bytes,
            total_loss_mbps_slots: self.loss.total_mbps_slots,
            per_node_loss: (0..s.node_count)
                .map(|d| NodeLoss {
                    node: d,
                    mbps_slots: self.loss.per_node_mbps_slots[d],
                    bytes: self.loss.per_node_bytes[d],
                })
                .collect(),
            per_slot_loss_mbps: self.loss.per_slot_mbps.clone(),
            selected_links: self.trace.as_ref().map(|t| t.chosen.clone()),
            schedule,
            links_per_slot: self.links_per_slot.clone(),
            timings_ms: self.timings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLoss {
    pub node: usize,
    pub mbps_slots: f64,
    pub bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSchedule {
    pub node: usize,
    pub iface: usize,
    pub segments: Vec<Segment>,
}

/// Self-describing result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub tool: String,
    pub version: String,
    pub scenario_digest: String,
    pub algorithm: Algorithm,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub weights: Option<WeightSet>,
    pub xi: Option<usize>,
    pub oracle: bool,
    pub total_loss_bytes: f64,
    pub total_loss_mbps_slots: f64,
    pub per_node_loss: Vec<NodeLoss>,
    pub per_slot_loss_mbps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_links: Option<Vec<Link>>,
    pub schedule: Vec<InterfaceSchedule>,
    pub links_per_slot: Vec<Vec<Link>>,
    pub timings_ms: Timings,
}

impl ResultDocument {
    /// Rebuilds the rotation schedule from its run-length encoding.
    pub fn rotation_schedule(&self, s: &Scenario) -> crate::error::Result<RotationSchedule> {
        let per_iface: Vec<Vec<Segment>> = self.schedule.iter().map(|i| i.segments.clone()).collect();
        RotationSchedule::from_segments(s.node_count, s.iface_count, s.slot_count, &per_iface)
    }
}
