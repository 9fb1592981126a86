//! Reference schedules: the early-fixing rule, "all links fixed", and an
//! exact search for tiny instances.
//!
//! The exact search runs a shortest-path recursion over the time-expanded
//! joint alignment graph. A state is the angle of every interface; each
//! interface independently stays or turns one step per slot, so one slot of
//! the recursion is a separable min-filter along every interface axis
//! followed by adding the routing loss of the state. Terminal states have
//! every final-link interface at its final bearing.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbraError};
use crate::kinematics::{self, Move, RotationSchedule};
use crate::model::{validate_scenario, InterfaceId, LinkIndex, Scenario};
use crate::preprocess;
use crate::result::{Algorithm, ReconfigResult, Timings};
use crate::routing::{self, SlotTopology};

fn ensure_valid(s: &Scenario) -> Result<()> {
    let v = validate_scenario(s);
    if v.is_empty() {
        Ok(())
    } else {
        Err(SbraError::InvalidScenario(v))
    }
}

/// Final-link interfaces rotate to their final bearing starting at slot 1,
/// the shorter way round (ties clockwise). Nothing else moves.
pub fn pvf_schedule(s: &Scenario) -> Result<RotationSchedule> {
    let mut sched = RotationSchedule::for_scenario(s);
    let turn = s.turn_steps();
    for fl in &s.final_links {
        for (x, y) in [(fl.a, fl.b), (fl.b, fl.a)] {
            let target = s.bearing(x.node, y.node).ok_or(SbraError::NotNeighbors(x.node, y.node))?;
            let (dir, r) = kinematics::shortest(s.initial_alignment[x.node][x.iface], target, turn);
            if r as usize >= s.slot_count {
                return Err(SbraError::Infeasible { iface: x, slot_count: s.slot_count });
            }
            if r > 0 {
                sched.add_leg(x, 1, dir, r)?;
            }
        }
    }
    Ok(sched)
}

pub fn all_links_fixed(s: &Scenario) -> Result<ReconfigResult> {
    let t0 = Instant::now();
    ensure_valid(s)?;
    let schedule = pvf_schedule(s)?;
    let t1 = Instant::now();
    let (links_per_slot, loss) = routing::evaluate_schedule(s, &schedule)?;
    let routing_ms = t1.elapsed().as_secs_f64() * 1e3;
    Ok(ReconfigResult {
        algorithm: Algorithm::AllFixed,
        schedule,
        links_per_slot,
        loss,
        weights: None,
        xi: None,
        seed: None,
        trace: None,
        timings: Timings { routing_ms, total_ms: t0.elapsed().as_secs_f64() * 1e3, ..Timings::default() },
        oracle: false,
    })
}

/// Size limits beyond which the exact search refuses to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_nodes: usize,
    pub max_ifaces: usize,
    pub max_slots: usize,
    pub max_candidates: usize,
    pub max_states: u128,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_nodes: 4, max_ifaces: 1, max_slots: 12, max_candidates: 8, max_states: 1 << 20 }
    }
}

/// Angles one interface may take: a contiguous run of offsets from its
/// initial angle, or the whole turn when that run would wrap.
#[derive(Debug, Clone, Copy)]
struct Axis {
    cyclic: bool,
    size: usize,
    /// Angle at index 0 (linear axes) or 0 (cyclic axes).
    origin: u32,
    start: usize,
    /// Index of the final bearing, if the interface owes one.
    target: Option<usize>,
}

impl Axis {
    fn angle(&self, i: usize, turn: u32) -> u32 {
        (self.origin + i as u32) % turn
    }
}

fn build_axis(s: &Scenario, x: InterfaceId, index: &LinkIndex) -> Axis {
    let turn = s.turn_steps() as i64;
    let budget = s.slot_count as i64 - 1;
    let a0 = s.initial_alignment[x.node][x.iface] as i64;
    let final_bearing = index
        .final_partner(x)
        .map(|y| s.bearing(x.node, y.node).expect("final links join neighbors") as i64);
    if 2 * budget + 1 >= turn {
        return Axis {
            cyclic: true,
            size: turn as usize,
            origin: 0,
            start: a0 as usize,
            target: final_bearing.map(|b| b as usize),
        };
    }
    // offsets o reachable in time that still leave time to reach the target
    let (lo, hi, t) = match final_bearing {
        None => (-budget, budget, None),
        Some(b) => {
            let cw = (b - a0).rem_euclid(turn);
            let t = if cw <= turn - cw { cw } else { cw - turn };
            let ok = |o: i64| o.abs() + (o - t).abs() <= budget;
            let lo = (-budget..=budget).find(|&o| ok(o)).unwrap_or(0);
            let hi = (-budget..=budget).rev().find(|&o| ok(o)).unwrap_or(0);
            (lo, hi, Some(t))
        }
    };
    Axis {
        cyclic: false,
        size: (hi - lo + 1) as usize,
        origin: (a0 + lo).rem_euclid(turn) as u32,
        start: (-lo) as usize,
        target: t.map(|t| (t - lo) as usize),
    }
}

/// Number of joint states the exact search would explore (saturating).
pub fn oracle_state_estimate(s: &Scenario) -> u128 {
    let index = LinkIndex::new(s);
    s.interfaces().fold(1u128, |acc, x| acc.saturating_mul(build_axis(s, x, &index).size as u128))
}

pub fn exhaustive_oracle(s: &Scenario, limits: &OracleLimits) -> Result<ReconfigResult> {
    let t0 = Instant::now();
    ensure_valid(s)?;
    let estimate = oracle_state_estimate(s);
    let refuse = |reason: String| Err(SbraError::OracleLimit { reason, estimated_states: estimate });
    if s.node_count > limits.max_nodes {
        return refuse(format!("{} nodes exceed the limit of {}", s.node_count, limits.max_nodes));
    }
    if s.iface_count > limits.max_ifaces {
        return refuse(format!("{} interfaces per node exceed the limit of {}", s.iface_count, limits.max_ifaces));
    }
    if s.slot_count > limits.max_slots {
        return refuse(format!("{} slots exceed the limit of {}", s.slot_count, limits.max_slots));
    }
    let cands = preprocess::possible_links(s).len();
    if cands > limits.max_candidates {
        return refuse(format!("{cands} candidate links exceed the limit of {}", limits.max_candidates));
    }
    if estimate > limits.max_states {
        return refuse(format!("{estimate} states exceed the limit of {}", limits.max_states));
    }

    let index = LinkIndex::new(s);
    let ifaces: Vec<InterfaceId> = s.interfaces().collect();
    let axes: Vec<Axis> = ifaces.iter().map(|&x| build_axis(s, x, &index)).collect();
    let mut strides = vec![1usize; axes.len()];
    for i in 1..axes.len() {
        strides[i] = strides[i - 1] * axes[i - 1].size;
    }
    let n_states = estimate as usize;
    let turn = s.turn_steps();
    let coord = |state: usize, i: usize| (state / strides[i]) % axes[i].size;

    // routing loss of every joint state, memoized on the resolved link set
    let mut memo: HashMap<Vec<crate::model::Link>, f64> = HashMap::new();
    let mut alignment = s.initial_alignment.clone();
    let mut state_loss = vec![0.0; n_states];
    for (state, loss) in state_loss.iter_mut().enumerate() {
        for (i, x) in ifaces.iter().enumerate() {
            alignment[x.node][x.iface] = axes[i].angle(coord(state, i), turn);
        }
        let links = kinematics::resolve_matching(kinematics::aligned_pairs(&alignment, s), &index);
        *loss = *memo
            .entry(links)
            .or_insert_with_key(|l| routing::min_loss_routing(&SlotTopology::from_links(s, l)).total_loss);
    }

    let start: usize = axes.iter().zip(&strides).map(|(a, st)| a.start * st).sum();
    let k_total = s.slot_count;
    let mut layers: Vec<Vec<f64>> = Vec::with_capacity(k_total);
    let mut first = vec![f64::INFINITY; n_states];
    first[start] = state_loss[start];
    layers.push(first);
    for _ in 1..k_total {
        let mut cur = layers.last().expect("non-empty").clone();
        for (i, axis) in axes.iter().enumerate() {
            let st = strides[i];
            let prev = cur.clone();
            for (state, out) in cur.iter_mut().enumerate() {
                let c = coord(state, i);
                let mut best = prev[state];
                if c > 0 {
                    best = best.min(prev[state - st]);
                } else if axis.cyclic {
                    best = best.min(prev[state + (axis.size - 1) * st]);
                }
                if c + 1 < axis.size {
                    best = best.min(prev[state + st]);
                } else if axis.cyclic {
                    best = best.min(prev[state - (axis.size - 1) * st]);
                }
                *out = best;
            }
        }
        for (v, l) in cur.iter_mut().zip(&state_loss) {
            *v += l;
        }
        layers.push(cur);
    }

    let last = layers.last().expect("non-empty");
    let terminal = (0..n_states)
        .filter(|&state| axes.iter().enumerate().all(|(i, a)| a.target.is_none_or(|t| coord(state, i) == t)))
        .filter(|&state| last[state].is_finite())
        .min_by(|&a, &b| last[a].total_cmp(&last[b]).then(a.cmp(&b)));
    let Some(mut state) = terminal else {
        let iface = ifaces.first().copied().unwrap_or(InterfaceId::new(0, 0));
        return Err(SbraError::Infeasible { iface, slot_count: k_total });
    };

    // walk back, preferring idle, then clockwise, then counter-clockwise
    let mut schedule = RotationSchedule::for_scenario(s);
    let deltas: [i64; 3] = [0, 1, -1];
    for k in (1..k_total).rev() {
        let target = layers[k][state];
        let mut found = None;
        let combos = 3usize.pow(axes.len() as u32);
        'search: for combo in 0..combos {
            let mut pred = 0usize;
            let mut rest = combo;
            let mut moves = Vec::with_capacity(axes.len());
            for (i, axis) in axes.iter().enumerate() {
                let d = deltas[rest % 3];
                rest /= 3;
                let c = coord(state, i) as i64 - d;
                let c = if axis.cyclic {
                    c.rem_euclid(axis.size as i64)
                } else if c < 0 || c >= axis.size as i64 {
                    continue 'search;
                } else {
                    c
                };
                pred += c as usize * strides[i];
                moves.push(d);
            }
            let v = layers[k - 1][pred];
            if v.is_finite() && v + state_loss[state] == target {
                found = Some((pred, moves));
                break;
            }
        }
        let (pred, moves) = found.expect("an optimal predecessor exists");
        for (x, d) in ifaces.iter().zip(moves) {
            let m = match d {
                1 => Move::Cw,
                -1 => Move::Ccw,
                _ => Move::Idle,
            };
            schedule.set(*x, k, m);
        }
        state = pred;
    }
    debug_assert_eq!(state, start);

    let (links_per_slot, loss) = routing::evaluate_schedule(s, &schedule)?;
    Ok(ReconfigResult {
        algorithm: Algorithm::Oracle,
        schedule,
        links_per_slot,
        loss,
        weights: None,
        xi: None,
        seed: None,
        trace: None,
        timings: Timings { total_ms: t0.elapsed().as_secs_f64() * 1e3, ..Timings::default() },
        oracle: true,
    })
}

/// Nodes 0 (core), 1 and 2 roughly 150 m apart with two interfaces each.
/// Node 2 hangs off the core initially and off node 1 finally; a spare
/// interface pair one step away from facing each other can bridge the gap.
pub fn temporary_link_instance() -> Scenario {
    let positions = vec![[0.0, 0.0], [150.0, 0.0], [75.0, 130.0]];
    let delta: Vec<Vec<u8>> = (0..3).map(|i| (0..3).map(|j| u8::from(i != j)).collect()).collect();
    let lb = crate::linkbudget::LinkBudgetParams::default();
    let align = crate::geometry::build_align_angles(&positions, &delta, 10.0).expect("distinct points");
    let rate = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        crate::linkbudget::link_rate(crate::geometry::distance(positions[i], positions[j]), &lb)
                            .expect("positive")
                            .expect("in range")
                    }
                })
                .collect()
        })
        .collect();
    use crate::model::Link;
    Scenario {
        format: crate::model::SCENARIO_FORMAT.into(),
        node_count: 3,
        iface_count: 2,
        slot_count: 7,
        rotation_step_deg: 10.0,
        slot_duration_s: 0.2,
        positions,
        core_nodes: vec![0],
        adjacency: delta,
        align_angles: align,
        link_rate: rate,
        demand: vec![0.0, 0.0, 1000.0],
        // 0_0 and 2_0 face each other; 0_1 and 2_1 sit one step short of it
        initial_alignment: vec![vec![6, 5], vec![15, 9], vec![24, 23]],
        initial_links: vec![Link::from_parts(0, 0, 2, 0)],
        final_links: vec![Link::from_parts(0, 0, 1, 0), Link::from_parts(1, 1, 2, 0)],
        link_budget: Some(lb),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{self, check_contract};
    use crate::model::{Link, WeightSet};
    use crate::scenarios;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fig2_all_fixed_rotations() {
        let s = scenarios::fig2();
        let r = all_links_fixed(&s).unwrap();
        let hub = InterfaceId::new(0, 0);
        let five = InterfaceId::new(4, 0);
        assert!((1..=17).all(|k| r.schedule.get(hub, k) == Move::Cw));
        assert!((18..=20).all(|k| r.schedule.get(hub, k) == Move::Idle));
        assert!((1..=5).all(|k| r.schedule.get(five, k) == Move::Ccw));
        assert!((6..=20).all(|k| r.schedule.get(five, k) == Move::Idle));
        let l02 = Link::from_parts(0, 0, 2, 0);
        assert!(r.links_per_slot[0].contains(&l02));
        assert!(!r.links_per_slot[1].contains(&l02));
        check_contract(&s, &r).unwrap();
    }

    #[test]
    fn no_change_means_no_movement() {
        let mut s = scenarios::fig2();
        s.final_links = s.initial_links.clone();
        let r = all_links_fixed(&s).unwrap();
        assert!(r.schedule.is_idle());
        let o = exhaustive_oracle(&s, &OracleLimits { max_nodes: 5, ..OracleLimits::default() });
        // five interfaces with 20 slots: the full-turn axes are too many states
        assert!(matches!(o, Err(SbraError::OracleLimit { .. })));
    }

    #[test]
    fn static_loss_for_unchanged_tiny_instance() {
        let mut s = scenarios::gen_tiny(4, 1, 8, 3).unwrap();
        s.final_links = s.initial_links.clone();
        let o = exhaustive_oracle(&s, &OracleLimits::default()).unwrap();
        let fixed = all_links_fixed(&s).unwrap();
        assert!(o.oracle);
        assert_eq!(o.loss.total_mbps_slots, fixed.loss.total_mbps_slots);
        assert!(o.schedule.is_idle());
    }

    #[test]
    fn temporary_link_avoids_all_loss() {
        let s = temporary_link_instance();
        assert!(validate_scenario(&s).is_empty(), "{:?}", validate_scenario(&s));
        let limits = OracleLimits { max_nodes: 3, max_ifaces: 2, ..OracleLimits::default() };
        let o = exhaustive_oracle(&s, &limits).unwrap();
        assert_eq!(o.loss.total_mbps_slots, 0.0);
        check_contract(&s, &o).unwrap();
        let fixed = all_links_fixed(&s).unwrap();
        assert_eq!(fixed.loss.total_mbps_slots, 5.0 * 1000.0);
    }

    #[test]
    fn refuses_large_instances_with_an_estimate() {
        let s = scenarios::generate(scenarios::Topology::Grid, 3, 20, 0).unwrap();
        match exhaustive_oracle(&s, &OracleLimits::default()) {
            Err(SbraError::OracleLimit { estimated_states, .. }) => assert!(estimated_states > 1 << 20),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dominates_greedy_and_all_fixed_on_tiny_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in 0..15 {
            let s = scenarios::gen_tiny(4, 1, 8, seed).unwrap();
            let o = exhaustive_oracle(&s, &OracleLimits::default()).unwrap();
            check_contract(&s, &o).unwrap();
            let fixed = all_links_fixed(&s).unwrap();
            assert!(o.loss.total_mbps_slots <= fixed.loss.total_mbps_slots + 1e-9);
            for _ in 0..3 {
                let w = WeightSet::new(std::array::from_fn(|_| rng.random_range(0.0..=1.0))).unwrap();
                let g = greedy::greedy_sbra(&s, &w, 1, &mut rng).unwrap();
                assert!(o.loss.total_mbps_slots <= g.loss.total_mbps_slots + 1e-9, "seed {seed}");
            }
        }
    }

    /// Brute force over every per-slot move vector for a 2-node instance.
    #[test]
    fn matches_brute_force_on_two_nodes() {
        for seed in 0..20 {
            let s = scenarios::gen_tiny(2, 1, 5, seed).unwrap();
            let o = exhaustive_oracle(&s, &OracleLimits::default()).unwrap();
            let ifaces: Vec<InterfaceId> = s.interfaces().collect();
            let slots = s.slot_count - 1;
            let mut best = f64::INFINITY;
            let total = 9usize.pow(slots as u32);
            for code in 0..total {
                let mut sched = RotationSchedule::for_scenario(&s);
                let mut c = code;
                for k in 1..=slots {
                    for x in &ifaces {
                        let m = [Move::Idle, Move::Cw, Move::Ccw][c % 3];
                        c /= 3;
                        sched.set(*x, k, m);
                    }
                }
                let (links, report) = routing::evaluate_schedule(&s, &sched).unwrap();
                if s.final_links.iter().all(|l| links[s.slot_count - 1].contains(l)) {
                    best = best.min(report.total_mbps_slots);
                }
            }
            assert_eq!(o.loss.total_mbps_slots, best, "seed {seed}");
        }
    }
}
