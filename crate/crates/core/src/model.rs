//! Problem-instance types and their validation.
//!
//! Angles are carried as integer step counts: an angle of `s` steps is
//! `s * rotation_step_deg` degrees, with `0 <= s < turn_steps()`. Alignment
//! checks are therefore exact integer comparisons.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SbraError};
use crate::kinematics;
use crate::linkbudget::LinkBudgetParams;

pub const SCENARIO_FORMAT: &str = "sbra-scenario/1";

pub type NodeId = usize;

/// Interface `iface` of node `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InterfaceId {
    pub node: NodeId,
    pub iface: usize,
}

impl InterfaceId {
    pub const fn new(node: NodeId, iface: usize) -> Self {
        Self { node, iface }
    }
}

impl fmt::Display for InterfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.node, self.iface)
    }
}

/// An undirected interface pair. Endpoints are kept in ascending order so
/// that two links compare equal iff they join the same interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct Link {
    pub a: InterfaceId,
    pub b: InterfaceId,
}

impl Link {
    pub fn new(x: InterfaceId, y: InterfaceId) -> Self {
        if x <= y {
            Self { a: x, b: y }
        } else {
            Self { a: y, b: x }
        }
    }

    pub fn from_parts(d: NodeId, n: usize, d2: NodeId, n2: usize) -> Self {
        Self::new(InterfaceId::new(d, n), InterfaceId::new(d2, n2))
    }

    pub fn touches(&self, x: InterfaceId) -> bool {
        self.a == x || self.b == x
    }

    pub fn shares_interface(&self, other: &Link) -> bool {
        self.touches(other.a) || self.touches(other.b)
    }

    /// The endpoint opposite to `x`, if `x` is an endpoint.
    pub fn other(&self, x: InterfaceId) -> Option<InterfaceId> {
        if self.a == x {
            Some(self.b)
        } else if self.b == x {
            Some(self.a)
        } else {
            None
        }
    }

    pub fn endpoints(&self) -> [InterfaceId; 2] {
        [self.a, self.b]
    }
}

impl From<[usize; 4]> for Link {
    fn from(v: [usize; 4]) -> Self {
        Link::from_parts(v[0], v[1], v[2], v[3])
    }
}

impl From<Link> for [usize; 4] {
    fn from(l: Link) -> Self {
        [l.a.node, l.a.iface, l.b.node, l.b.iface]
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {})", self.a, self.b)
    }
}

/// One broken invariant, with a JSON-path-like location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// An immutable reconfiguration instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub format: String,
    pub node_count: usize,
    pub iface_count: usize,
    pub slot_count: usize,
    pub rotation_step_deg: f64,
    pub slot_duration_s: f64,
    /// Planar coordinates in meters.
    pub positions: Vec<[f64; 2]>,
    pub core_nodes: Vec<NodeId>,
    /// Binary node-pair adjacency, row-major.
    pub adjacency: Vec<Vec<u8>>,
    /// Bearing from row node to column node in steps; `None` for non-neighbors.
    pub align_angles: Vec<Vec<Option<u32>>>,
    /// Link throughput in Mbps.
    pub link_rate: Vec<Vec<f64>>,
    /// Downstream demand per node in Mbps.
    pub demand: Vec<f64>,
    /// Initial interface angles in steps, `[node][iface]`.
    pub initial_alignment: Vec<Vec<u32>>,
    pub initial_links: Vec<Link>,
    pub final_links: Vec<Link>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_budget: Option<LinkBudgetParams>,
}

impl Scenario {
    /// Steps in a full turn (`360 / rotation_step_deg`).
    pub fn turn_steps(&self) -> u32 {
        (360.0 / self.rotation_step_deg).round() as u32
    }

    pub fn is_neighbor(&self, d: NodeId, d2: NodeId) -> bool {
        self.adjacency.get(d).and_then(|r| r.get(d2)).copied() == Some(1)
    }

    /// Bearing from `d` toward `d2` in steps.
    pub fn bearing(&self, d: NodeId, d2: NodeId) -> Option<u32> {
        if !self.is_neighbor(d, d2) {
            return None;
        }
        self.align_angles[d][d2]
    }

    pub fn is_core(&self, d: NodeId) -> bool {
        self.core_nodes.contains(&d)
    }

    pub fn interfaces(&self) -> impl Iterator<Item = InterfaceId> + '_ {
        (0..self.node_count)
            .flat_map(move |d| (0..self.iface_count).map(move |n| InterfaceId::new(d, n)))
    }

    /// Mbps sustained over one slot, expressed in bytes.
    pub fn mbps_slots_to_bytes(&self, mbps_slots: f64) -> f64 {
        mbps_slots * self.slot_duration_s * 1e6 / 8.0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        let violations = validate_scenario(&s);
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(SbraError::InvalidScenario(violations))
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// Hex SHA-256 of the compact JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }
}

/// Per-interface partner lookup for the initial and final link sets.
#[derive(Debug, Clone)]
pub struct LinkIndex {
    iface_count: usize,
    initial: Vec<Option<Link>>,
    final_: Vec<Option<Link>>,
}

impl LinkIndex {
    pub fn new(s: &Scenario) -> Self {
        let slots = s.node_count * s.iface_count;
        let mut initial = vec![None; slots];
        let mut final_ = vec![None; slots];
        for l in &s.initial_links {
            for x in l.endpoints() {
                initial[x.node * s.iface_count + x.iface] = Some(*l);
            }
        }
        for l in &s.final_links {
            for x in l.endpoints() {
                final_[x.node * s.iface_count + x.iface] = Some(*l);
            }
        }
        Self { iface_count: s.iface_count, initial, final_ }
    }

    fn slot(&self, x: InterfaceId) -> usize {
        x.node * self.iface_count + x.iface
    }

    pub fn initial_link(&self, x: InterfaceId) -> Option<Link> {
        self.initial[self.slot(x)]
    }

    pub fn final_link(&self, x: InterfaceId) -> Option<Link> {
        self.final_[self.slot(x)]
    }

    pub fn final_partner(&self, x: InterfaceId) -> Option<InterfaceId> {
        self.final_link(x).and_then(|l| l.other(x))
    }

    pub fn is_initial(&self, l: &Link) -> bool {
        self.initial_link(l.a) == Some(*l)
    }

    pub fn is_final(&self, l: &Link) -> bool {
        self.final_link(l.a) == Some(*l)
    }
}

/// Attribute weights for the link ranking, one per attribute, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightSet([f64; 7]);

impl WeightSet {
    pub fn new(w: [f64; 7]) -> Result<Self> {
        if let Some(bad) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(SbraError::InvalidParams(format!("weight {bad} outside [0, 1]")));
        }
        Ok(Self(w))
    }

    pub fn from_slice(w: &[f64]) -> Result<Self> {
        let arr: [f64; 7] = w
            .try_into()
            .map_err(|_| SbraError::InvalidParams(format!("expected 7 weights, got {}", w.len())))?;
        Self::new(arr)
    }

    pub fn values(&self) -> &[f64; 7] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for WeightSet {
    type Error = SbraError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::from_slice(&v)
    }
}

impl From<WeightSet> for Vec<f64> {
    fn from(w: WeightSet) -> Self {
        w.0.to_vec()
    }
}

/// Parameters of the multi-start search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiStartParams {
    /// Number of random weight sets.
    pub weight_trials: usize,
    /// Randomized restarts per weight set, after the pure-greedy run.
    pub restarts_per_trial: usize,
    /// Selection window used by the randomized restarts.
    pub extraction_window: usize,
    pub master_seed: u64,
}

impl MultiStartParams {
    pub fn validate(&self) -> Result<()> {
        if self.weight_trials == 0 {
            return Err(SbraError::InvalidParams("weight_trials must be >= 1".into()));
        }
        if self.extraction_window == 0 {
            return Err(SbraError::InvalidParams("extraction_window must be >= 1".into()));
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> usize {
        self.weight_trials * (1 + self.restarts_per_trial)
    }
}

/// Converts an angle in degrees to grid steps; `None` when off-grid.
pub fn steps_from_deg(angle_deg: f64, step_deg: f64) -> Option<u32> {
    if !angle_deg.is_finite() || !(0.0..360.0).contains(&angle_deg) {
        return None;
    }
    let q = angle_deg / step_deg;
    let r = q.round();
    if (q - r).abs() > 1e-9 {
        return None;
    }
    Some(r as u32)
}

/// Degree-valued angle tables converted to steps, collecting off-grid entries.
pub fn angles_from_degrees(
    align_deg: &[Vec<Option<f64>>],
    initial_deg: &[Vec<f64>],
    step_deg: f64,
) -> std::result::Result<(Vec<Vec<Option<u32>>>, Vec<Vec<u32>>), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut grid = |path: String, deg: f64| match steps_from_deg(deg, step_deg) {
        Some(s) => s,
        None => {
            violations.push(Violation::new(
                path,
                format!("{deg}° is not a multiple of θ={step_deg}° in [0, 360)"),
            ));
            0
        }
    };
    let align: Vec<Vec<Option<u32>>> = align_deg
        .iter()
        .enumerate()
        .map(|(d, row)| {
            row.iter()
                .enumerate()
                .map(|(d2, v)| v.map(|deg| grid(format!("align_angles[{d}][{d2}]"), deg)))
                .collect()
        })
        .collect();
    let initial: Vec<Vec<u32>> = initial_deg
        .iter()
        .enumerate()
        .map(|(d, row)| {
            row.iter()
                .enumerate()
                .map(|(n, &deg)| grid(format!("initial_alignment[{d}][{n}]"), deg))
                .collect()
        })
        .collect();
    if violations.is_empty() {
        Ok((align, initial))
    } else {
        Err(violations)
    }
}

fn check_matrix<T>(out: &mut Vec<Violation>, name: &str, m: &[Vec<T>], rows: usize, cols: usize) -> bool {
    let mut ok = true;
    if m.len() != rows {
        out.push(Violation::new(name, format!("expected {rows} rows, found {}", m.len())));
        return false;
    }
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            out.push(Violation::new(format!("{name}[{i}]"), format!("expected {cols} columns, found {}", r.len())));
            ok = false;
        }
    }
    ok
}

fn check_link_set(out: &mut Vec<Violation>, name: &str, links: &[Link], s: &Scenario) -> bool {
    let mut ok = true;
    let mut seen = HashSet::new();
    for (i, l) in links.iter().enumerate() {
        let path = format!("{name}[{i}]");
        let in_bounds = l
            .endpoints()
            .iter()
            .all(|x| x.node < s.node_count && x.iface < s.iface_count);
        if !in_bounds {
            out.push(Violation::new(path, format!("link {l} references an interface out of bounds")));
            ok = false;
            continue;
        }
        if l.a.node == l.b.node {
            out.push(Violation::new(&path, format!("link {l} joins two interfaces of the same node")));
            ok = false;
        } else if !s.is_neighbor(l.a.node, l.b.node) {
            out.push(Violation::new(&path, format!("link {l} joins nodes with δ=0")));
            ok = false;
        }
        for x in l.endpoints() {
            if !seen.insert(x) {
                out.push(Violation::new(&path, format!("interface {x} appears in more than one link")));
                ok = false;
            }
        }
    }
    ok
}

/// Lists every invariant violation of `s`; empty iff the scenario is valid.
///
/// Structural checks run first; checks that index into matrices only run
/// once the dimensions are known to be consistent, so arbitrary input never
/// panics.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.format != SCENARIO_FORMAT {
        out.push(Violation::new("format", format!("expected \"{SCENARIO_FORMAT}\", found \"{}\"", s.format)));
    }
    let (d_count, n_count) = (s.node_count, s.iface_count);
    if d_count == 0 {
        out.push(Violation::new("node_count", "must be at least 1"));
    }
    if n_count == 0 {
        out.push(Violation::new("iface_count", "must be at least 1"));
    }
    if s.slot_count == 0 {
        out.push(Violation::new("slot_count", "must be at least 1"));
    }
    let theta = s.rotation_step_deg;
    let theta_ok = theta.is_finite() && theta > 0.0 && theta <= 360.0 && {
        let q = 360.0 / theta;
        (q - q.round()).abs() < 1e-9
    };
    if !theta_ok {
        out.push(Violation::new("rotation_step_deg", format!("360 must be divisible by θ={theta}")));
    }
    if !(s.slot_duration_s.is_finite() && s.slot_duration_s > 0.0) {
        out.push(Violation::new("slot_duration_s", "must be positive"));
    }
    if s.positions.len() != d_count {
        out.push(Violation::new("positions", format!("expected {d_count} entries, found {}", s.positions.len())));
    }
    for (i, p) in s.positions.iter().enumerate() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            out.push(Violation::new(format!("positions[{i}]"), "coordinates must be finite"));
        }
    }
    let mut cores = BTreeSet::new();
    for (i, &c) in s.core_nodes.iter().enumerate() {
        if c >= d_count {
            out.push(Violation::new(format!("core_nodes[{i}]"), format!("node {c} out of bounds")));
        } else if !cores.insert(c) {
            out.push(Violation::new(format!("core_nodes[{i}]"), format!("node {c} listed twice")));
        }
    }
    let mut dims_ok = d_count > 0 && n_count > 0;
    dims_ok &= check_matrix(&mut out, "adjacency", &s.adjacency, d_count, d_count);
    dims_ok &= check_matrix(&mut out, "align_angles", &s.align_angles, d_count, d_count);
    dims_ok &= check_matrix(&mut out, "link_rate", &s.link_rate, d_count, d_count);
    dims_ok &= check_matrix(&mut out, "initial_alignment", &s.initial_alignment, d_count, n_count);
    if s.demand.len() != d_count {
        out.push(Violation::new("demand", format!("expected {d_count} entries, found {}", s.demand.len())));
        dims_ok = false;
    }
    if let Some(lb) = &s.link_budget {
        if let Err(e) = lb.validate() {
            out.push(Violation::new("link_budget", e.to_string()));
        }
    }
    if !dims_ok || !theta_ok {
        return out;
    }

    let turn = s.turn_steps();
    for d in 0..d_count {
        for d2 in 0..d_count {
            let delta = s.adjacency[d][d2];
            if delta > 1 {
                out.push(Violation::new(format!("adjacency[{d}][{d2}]"), "must be 0 or 1"));
            }
            if d == d2 && delta != 0 {
                out.push(Violation::new(format!("adjacency[{d}][{d}]"), "diagonal must be 0"));
            }
            if delta != s.adjacency[d2][d] && d < d2 {
                out.push(Violation::new(format!("adjacency[{d}][{d2}]"), "matrix must be symmetric"));
            }
        }
    }
    for d in 0..d_count {
        for d2 in 0..d_count {
            if s.adjacency[d][d2] != 1 || d == d2 {
                continue;
            }
            let path = format!("align_angles[{d}][{d2}]");
            match (s.align_angles[d][d2], s.align_angles[d2][d]) {
                (Some(v), Some(w)) => {
                    if v >= turn {
                        out.push(Violation::new(path, format!("{v} steps is outside [0, {turn})")));
                    } else if w < turn {
                        // opposite bearings may drift by at most one step after quantization
                        let opposite = (w as f64 * theta + 180.0).rem_euclid(360.0);
                        let diff = (v as f64 * theta - opposite).rem_euclid(360.0);
                        if diff.min(360.0 - diff) > theta + 1e-9 {
                            out.push(Violation::new(path, "bearing is not opposite to the reverse bearing"));
                        }
                    }
                }
                (None, _) => out.push(Violation::new(path, "δ=1 but the bearing is missing")),
                _ => {}
            }
            let r = s.link_rate[d][d2];
            if !(r.is_finite() && r > 0.0) {
                out.push(Violation::new(format!("link_rate[{d}][{d2}]"), "rate must be positive where δ=1"));
            }
        }
    }
    for (d, row) in s.initial_alignment.iter().enumerate() {
        for (n, &a) in row.iter().enumerate() {
            if a >= turn {
                out.push(Violation::new(format!("initial_alignment[{d}][{n}]"), format!("{a} steps is outside [0, {turn})")));
            }
        }
    }
    for (d, &rho) in s.demand.iter().enumerate() {
        if !(rho.is_finite() && rho >= 0.0) {
            out.push(Violation::new(format!("demand[{d}]"), "demand must be a non-negative number"));
        }
    }
    let init_ok = check_link_set(&mut out, "initial_links", &s.initial_links, s);
    let final_ok = check_link_set(&mut out, "final_links", &s.final_links, s);
    if !out.is_empty() || !init_ok || !final_ok {
        return out;
    }

    for (i, l) in s.initial_links.iter().enumerate() {
        for (x, y) in [(l.a, l.b), (l.b, l.a)] {
            let want = s.align_angles[x.node][y.node];
            if Some(s.initial_alignment[x.node][x.iface]) != want {
                out.push(Violation::new(
                    format!("initial_links[{i}]"),
                    format!("initial link {l}: interface {x} is not aligned toward node {}", y.node),
                ));
            }
        }
    }
    if out.is_empty() {
        let aligned: BTreeSet<Link> = kinematics::aligned_pairs(&s.initial_alignment, s).into_iter().collect();
        let expected: BTreeSet<Link> = s.initial_links.iter().copied().collect();
        for extra in aligned.difference(&expected) {
            out.push(Violation::new(
                "initial_alignment",
                format!("interfaces {} and {} face each other but {extra} is not an initial link", extra.a, extra.b),
            ));
        }
    }
    let budget = s.slot_count.saturating_sub(1) as u32;
    for (i, l) in s.final_links.iter().enumerate() {
        let need = kinematics::min_slots_to_form(l, &s.initial_alignment, s).unwrap_or(u32::MAX);
        if need > budget {
            out.push(Violation::new(
                format!("final_links[{i}]"),
                format!("final link {l} needs {need} slots but only {budget} rotation slots fit in K={}", s.slot_count),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn fig2_fixture_is_valid() {
        let s = scenarios::fig2();
        assert_eq!(validate_scenario(&s), vec![]);
        assert_eq!((s.node_count, s.iface_count, s.slot_count), (5, 1, 20));
        assert_eq!(s.initial_links, vec![Link::from_parts(0, 0, 2, 0)]);
        assert_eq!(s.final_links, vec![Link::from_parts(0, 0, 4, 0)]);
    }

    #[test]
    fn misaligned_initial_link_is_reported_once() {
        let mut s = scenarios::fig2();
        s.initial_alignment[0][0] = (s.initial_alignment[0][0] + 1) % s.turn_steps();
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("(0_0 2_0)"));
    }

    #[test]
    fn off_grid_degree_angle_is_reported() {
        let err = angles_from_degrees(&[vec![None]], &[vec![15.0]], 10.0).unwrap_err();
        assert_eq!(err.len(), 1);
        assert!(err[0].message.contains("not a multiple of θ"));
        let (_, a0) = angles_from_degrees(&[vec![None]], &[vec![350.0]], 10.0).unwrap();
        assert_eq!(a0, vec![vec![35]]);
    }

    #[test]
    fn validation_is_total_on_broken_dimensions() {
        let mut s = scenarios::fig2();
        s.adjacency.pop();
        s.initial_alignment[1].clear();
        s.final_links.push(Link::from_parts(9, 0, 1, 0));
        s.rotation_step_deg = 7.0;
        assert!(!validate_scenario(&s).is_empty());
    }

    #[test]
    fn duplicate_interface_and_self_link() {
        let mut s = scenarios::fig2();
        s.final_links.push(Link::from_parts(0, 0, 1, 0));
        s.initial_links.push(Link::from_parts(3, 0, 3, 0));
        let v = validate_scenario(&s);
        assert!(v.iter().any(|x| x.message.contains("more than one link")));
        assert!(v.iter().any(|x| x.message.contains("same node")));
    }

    #[test]
    fn unreachable_final_link_is_rejected() {
        let mut s = scenarios::fig2();
        s.slot_count = 17; // 1_1 needs 17 rotation slots, only 16 fit
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].path.starts_with("final_links"));
    }

    #[test]
    fn spurious_initial_alignment_is_rejected() {
        let mut s = scenarios::fig2();
        // node 4's interface turned toward node 1, which does not point back: fine
        s.initial_alignment[3][0] = s.align_angles[3][0].unwrap();
        assert!(validate_scenario(&s).is_empty());
        // node 1 and node 4 facing each other without an initial link: rejected
        let mut t = scenarios::fig2();
        t.initial_links.clear();
        t.initial_alignment[2][0] = 0;
        t.initial_alignment[0][0] = t.align_angles[0][3].unwrap();
        t.initial_alignment[3][0] = t.align_angles[3][0].unwrap();
        let v = validate_scenario(&t);
        assert!(v.iter().any(|x| x.message.contains("face each other")), "{v:?}");
    }

    #[test]
    fn weight_set_bounds() {
        assert!(WeightSet::new([0.0, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(WeightSet::new([0.0, 1.1, 0.5, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(WeightSet::from_slice(&[0.5; 6]).is_err());
        let w: WeightSet = serde_json::from_str("[0,0.33,0.66,1,0,0,0]").unwrap();
        assert_eq!(w.values()[2], 0.66);
    }

    #[test]
    fn link_json_is_a_four_tuple_and_canonical() {
        let l: Link = serde_json::from_str("[4,0,0,0]").unwrap();
        assert_eq!(l, Link::from_parts(0, 0, 4, 0));
        assert_eq!(serde_json::to_string(&l).unwrap(), "[0,0,4,0]");
    }
}
