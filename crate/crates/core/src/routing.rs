//! Per-slot loss-minimizing routing and the aggregated reconfiguration loss.
//!
//! Loss minimization under flow conservation is a maximum-flow problem: a
//! super-source feeds every core node without limit, every other node
//! drains into a super-sink with capacity equal to its demand, and every
//! formed link may carry up to its rate in either direction. Undelivered
//! demand is the loss. Core nodes serve their own demand over fiber.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::Result;
use crate::kinematics::{self, RotationSchedule};
use crate::model::{Link, NodeId, Scenario};

const EPS: f64 = 1e-9;

/// Capacitated topology of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTopology {
    pub demand: Vec<f64>,
    pub cores: Vec<NodeId>,
    /// `(u, v, capacity)`, usable in both directions.
    pub edges: Vec<(NodeId, NodeId, f64)>,
}

impl SlotTopology {
    pub fn from_links(s: &Scenario, links: &[Link]) -> Self {
        Self {
            demand: s.demand.clone(),
            cores: s.core_nodes.clone(),
            edges: links.iter().map(|l| (l.a.node, l.b.node, s.link_rate[l.a.node][l.b.node])).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.demand.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSolution {
    /// Injection at each core node, aligned with `SlotTopology::cores`.
    pub injection: Vec<f64>,
    /// Net flow on each edge, positive in the listed `u -> v` direction.
    pub edge_flow: Vec<f64>,
    pub loss: Vec<f64>,
    pub delivered: f64,
    pub total_loss: f64,
}

struct Arc {
    to: usize,
    cap: f64,
}

/// Dinic's algorithm on an adjacency-list residual graph; arcs are stored in
/// pairs so that `i ^ 1` is the reverse of arc `i`.
struct Dinic {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Self { arcs: Vec::new(), out: vec![Vec::new(); n], level: vec![0; n], next: vec![0; n] }
    }

    /// Adds `u -> v` with capacity `cap` and `v -> u` with `back`; returns the forward arc id.
    fn add(&mut self, u: usize, v: usize, cap: f64, back: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap });
        self.arcs.push(Arc { to: u, cap: back });
        self.out[u].push(id);
        self.out[v].push(id + 1);
        id
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.out[u] {
                let v = self.arcs[a].to;
                if self.arcs[a].cap > EPS && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.out[u].len() {
            let a = self.out[u][self.next[u]];
            let v = self.arcs[a].to;
            if self.arcs[a].cap > EPS && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.arcs[a].cap));
                if got > EPS {
                    self.arcs[a].cap -= got;
                    self.arcs[a ^ 1].cap += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|x| *x = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= EPS {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}

pub fn min_loss_routing(t: &SlotTopology) -> FlowSolution {
    let n = t.node_count();
    let (src, sink) = (n, n + 1);
    let mut g = Dinic::new(n + 2);
    let is_core = |d: usize| t.cores.contains(&d);
    let unlimited: f64 = t.demand.iter().sum::<f64>() + 1.0;
    let inject: Vec<usize> = t.cores.iter().map(|&c| g.add(src, c, unlimited, 0.0)).collect();
    let drain: Vec<Option<usize>> =
        (0..n).map(|d| (!is_core(d) && t.demand[d] > 0.0).then(|| g.add(d, sink, t.demand[d], 0.0))).collect();
    let edge_arcs: Vec<usize> = t.edges.iter().map(|&(u, v, c)| g.add(u, v, c, c)).collect();
    let delivered = g.max_flow(src, sink);
    let loss: Vec<f64> = (0..n)
        .map(|d| match drain[d] {
            Some(a) => g.arcs[a].cap.max(0.0),
            None => 0.0,
        })
        .collect();
    let required: f64 = (0..n).filter(|&d| !is_core(d)).map(|d| t.demand[d]).sum();
    FlowSolution {
        injection: inject.iter().map(|&a| unlimited - g.arcs[a].cap).collect(),
        edge_flow: edge_arcs.iter().zip(&t.edges).map(|(&a, e)| e.2 - g.arcs[a].cap).collect(),
        loss,
        delivered,
        total_loss: (required - delivered).max(0.0),
    }
}

/// Per-node and total loss over a whole timeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    /// Lost rate per slot, in Mbps.
    pub per_slot_mbps: Vec<f64>,
    pub per_node_mbps_slots: Vec<f64>,
    pub per_node_bytes: Vec<f64>,
    pub total_mbps_slots: f64,
    pub total_bytes: f64,
}

/// Routes every slot of `links_per_slot`, reusing the previous solution
/// while the link set does not change.
pub fn total_reconfig_loss(s: &Scenario, links_per_slot: &[Vec<Link>]) -> LossReport {
    let mut per_slot = Vec::with_capacity(links_per_slot.len());
    let mut per_node = vec![0.0; s.node_count];
    let mut last: Option<(&Vec<Link>, FlowSolution)> = None;
    for links in links_per_slot {
        let sol = match &last {
            Some((prev, sol)) if *prev == links => sol.clone(),
            _ => min_loss_routing(&SlotTopology::from_links(s, links)),
        };
        per_slot.push(sol.total_loss);
        for (acc, l) in per_node.iter_mut().zip(&sol.loss) {
            *acc += l;
        }
        last = Some((links, sol));
    }
    let total: f64 = per_slot.iter().sum();
    LossReport {
        per_node_bytes: per_node.iter().map(|x| s.mbps_slots_to_bytes(*x)).collect(),
        per_slot_mbps: per_slot,
        per_node_mbps_slots: per_node,
        total_mbps_slots: total,
        total_bytes: s.mbps_slots_to_bytes(total),
    }
}

/// Unrolls `schedule`, resolves the per-slot links and routes them.
pub fn evaluate_schedule(s: &Scenario, schedule: &RotationSchedule) -> Result<(Vec<Vec<Link>>, LossReport)> {
    let timeline = kinematics::unroll(schedule, s)?;
    let links = kinematics::links_per_slot(&timeline, s);
    let report = total_reconfig_loss(s, &links);
    Ok((links, report))
}

/// Which nodes have a path to a core node over `links`.
pub fn reachable_from_core(s: &Scenario, links: &[Link]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); s.node_count];
    for l in links {
        adj[l.a.node].push(l.b.node);
        adj[l.b.node].push(l.a.node);
    }
    let mut seen = vec![false; s.node_count];
    let mut q: VecDeque<usize> = s.core_nodes.iter().copied().collect();
    for &c in &s.core_nodes {
        seen[c] = true;
    }
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                q.push_back(v);
            }
        }
    }
    seen
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::scenarios;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Max flow by enumerating every source-side node set that contains all cores.
    pub(crate) fn min_cut(t: &SlotTopology) -> f64 {
        let n = t.node_count();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let inside = |d: usize| mask & (1 << d) != 0;
            if t.cores.iter().any(|&c| !inside(c)) {
                continue;
            }
            let mut cut = 0.0;
            for d in (0..n).filter(|&d| inside(d) && !t.cores.contains(&d)) {
                cut += t.demand[d];
            }
            for &(u, v, c) in &t.edges {
                if inside(u) != inside(v) {
                    cut += c;
                }
            }
            best = best.min(cut);
        }
        best
    }

    pub(crate) fn random_topology(rng: &mut ChaCha8Rng, max_nodes: usize) -> SlotTopology {
        let n = rng.random_range(2..=max_nodes);
        let core_count = rng.random_range(1..=2.min(n));
        let demand = (0..n).map(|_| rng.random_range(0..=20) as f64 * 100.0).collect();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(0.35) {
                    edges.push((u, v, rng.random_range(1..=46) as f64 * 100.0));
                }
            }
        }
        SlotTopology { demand, cores: (0..core_count).collect(), edges }
    }

    fn check_solution(t: &SlotTopology, sol: &FlowSolution) {
        let n = t.node_count();
        let mut net_in = vec![0.0; n];
        for (i, &c) in t.cores.iter().enumerate() {
            net_in[c] += sol.injection[i];
        }
        for (&(u, v, c), &f) in t.edges.iter().zip(&sol.edge_flow) {
            assert!(f.abs() <= c + 1e-6);
            net_in[u] -= f;
            net_in[v] += f;
        }
        for d in 0..n {
            if t.cores.contains(&d) {
                assert_eq!(sol.loss[d], 0.0);
                continue;
            }
            assert!(sol.loss[d] >= -1e-9 && sol.loss[d] <= t.demand[d] + 1e-9);
            assert!((net_in[d] - (t.demand[d] - sol.loss[d])).abs() < 1e-6, "conservation at {d}");
        }
    }

    #[test]
    fn single_bottleneck() {
        let t = SlotTopology { demand: vec![0.0, 1500.0], cores: vec![0], edges: vec![(0, 1, 1000.0)] };
        let sol = min_loss_routing(&t);
        assert_eq!(sol.total_loss, 500.0);
        assert_eq!(sol.loss, vec![0.0, 500.0]);
        check_solution(&t, &sol);
    }

    #[test]
    fn ample_capacity_is_lossless() {
        let big = 1e12;
        let t = SlotTopology {
            demand: vec![300.0, 1500.0, 700.0, 900.0],
            cores: vec![0],
            edges: vec![(0, 1, big), (1, 2, big), (3, 2, big)],
        };
        assert_eq!(min_loss_routing(&t).total_loss, 0.0);
    }

    #[test]
    fn flow_may_run_against_link_listing_order() {
        // node 2 is the core, reached through link (0, 2) listed "backwards"
        let t = SlotTopology { demand: vec![800.0, 100.0, 0.0], cores: vec![2], edges: vec![(0, 2, 1000.0), (0, 1, 1000.0)] };
        let sol = min_loss_routing(&t);
        assert_eq!(sol.total_loss, 0.0);
        check_solution(&t, &sol);
    }

    #[test]
    fn matches_min_cut_on_random_topologies() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let t = random_topology(&mut rng, 10);
            let sol = min_loss_routing(&t);
            let cut = min_cut(&t);
            assert!((sol.delivered - cut).abs() <= 1e-6 * cut.max(1.0));
            check_solution(&t, &sol);
        }
    }

    #[test]
    fn disconnected_slot_loses_everything() {
        let mut s = scenarios::gen_grid(0, 0.0)
            .and_then(|sk| scenarios::build_scenario(&sk, &scenarios::GenOptions::new(3, 19, 0)))
            .unwrap();
        s.demand = vec![400.0; 16];
        s.demand[s.core_nodes[0]] = 0.0;
        let scale = 6400.0 / s.demand.iter().sum::<f64>();
        s.demand.iter_mut().for_each(|d| *d *= scale);
        let report = total_reconfig_loss(&s, &[vec![]]);
        assert!((report.total_bytes - 160e6).abs() < 1e-3);
        let per_node: f64 = report.per_node_bytes.iter().sum();
        assert!((per_node - report.total_bytes).abs() < 1e-3);
    }

    #[test]
    fn static_final_topology_loses_nothing() {
        let s = scenarios::generate(scenarios::Topology::Grid, 3, 19, 4).unwrap();
        let report = total_reconfig_loss(&s, &vec![s.final_links.clone(); s.slot_count]);
        let sol = min_loss_routing(&SlotTopology::from_links(&s, &s.final_links));
        assert_eq!(report.total_mbps_slots, sol.total_loss * s.slot_count as f64);
    }

    #[test]
    fn total_is_sum_of_slots() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = scenarios::generate(scenarios::Topology::HexSmall, 3, 20, 2).unwrap();
        let slots: Vec<Vec<Link>> = (0..20)
            .map(|_| s.final_links.iter().filter(|_| rng.random_bool(0.7)).copied().collect())
            .collect();
        let report = total_reconfig_loss(&s, &slots);
        let per_slot_bytes: f64 = report.per_slot_mbps.iter().map(|m| s.mbps_slots_to_bytes(*m)).sum();
        assert!((per_slot_bytes - report.total_bytes).abs() <= 1e-6 * report.total_bytes.max(1.0));
        for (k, links) in slots.iter().enumerate() {
            assert_eq!(report.per_slot_mbps[k], min_loss_routing(&SlotTopology::from_links(&s, links)).total_loss);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn capacity_increase_never_adds_loss(seed in any::<u64>(), boost in 0.0f64..3000.0, extra in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_topology(&mut rng, 8);
            let base = min_loss_routing(&t).total_loss;
            let mut more = t.clone();
            if !more.edges.is_empty() {
                let i = rng.random_range(0..more.edges.len());
                more.edges[i].2 += boost;
            }
            if extra {
                let n = more.node_count();
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                if u != v {
                    more.edges.push((u, v, rng.random_range(1.0..5000.0)));
                }
            }
            prop_assert!(min_loss_routing(&more).total_loss <= base + 1e-6);
        }
    }
}
