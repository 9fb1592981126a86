//! Greedy link selection and movement assignment.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::error::{Result, SbraError};
use crate::kinematics::{self, RotationSchedule};
use crate::model::{validate_scenario, InterfaceId, Link, Scenario, WeightSet};
use crate::preprocess::{self, Candidate};
use crate::ranking;
use crate::result::{Algorithm, ReconfigResult, Timings};
use crate::routing;

/// Weights used when none are supplied: favor long-lived links, final
/// links and links serving heavy final-state demand.
pub const DEFAULT_WEIGHTS: [f64; 7] = [0.0, 1.0, 0.33, 0.66, 1.0, 0.33, 0.66];

pub fn default_weights() -> WeightSet {
    WeightSet::new(DEFAULT_WEIGHTS).expect("defaults are in range")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionTrace {
    pub chosen: Vec<Link>,
    /// Links discarded after each choice because they shared an interface.
    pub removed_conflicts: Vec<usize>,
    /// Position inside the window that each choice came from.
    pub draws: Vec<usize>,
    pub final_ifaces: BTreeSet<InterfaceId>,
}

/// Repeatedly extracts one of the first `xi` remaining links and drops every
/// link that shares an interface with it. `xi = 1` consumes no randomness.
pub fn select_links<R: Rng + ?Sized>(ranked: &[Link], xi: usize, rng: &mut R) -> Result<SelectionTrace> {
    if xi == 0 {
        return Err(SbraError::InvalidParams("extraction window must be >= 1".into()));
    }
    let mut rest: Vec<Link> = ranked.to_vec();
    let mut trace = SelectionTrace {
        chosen: Vec::new(),
        removed_conflicts: Vec::new(),
        draws: Vec::new(),
        final_ifaces: BTreeSet::new(),
    };
    while !rest.is_empty() {
        let window = xi.min(rest.len());
        let pick = if window == 1 { 0 } else { rng.random_range(0..window) };
        let l = rest.remove(pick);
        let before = rest.len();
        rest.retain(|o| !o.shares_interface(&l));
        trace.removed_conflicts.push(before - rest.len());
        trace.draws.push(pick);
        trace.chosen.push(l);
        trace.final_ifaces.extend(l.endpoints());
    }
    Ok(trace)
}

/// Turns a selection into per-slot movements.
///
/// Both ends of a selected link arrive together: the end with the longer
/// rotation starts at slot 1 and the other waits. An end that owes a
/// different final link leaves when the link's active window closes and
/// travels in its final direction. Final-link interfaces left unselected
/// start late enough to arrive exactly at slot K. Everything else stays put.
pub fn assign_movements(trace: &SelectionTrace, s: &Scenario, cands: &[Candidate]) -> Result<RotationSchedule> {
    let k = s.slot_count;
    let by_link: HashMap<Link, &Candidate> = cands.iter().map(|c| (c.link, c)).collect();
    let mut sched = RotationSchedule::for_scenario(s);
    for l in &trace.chosen {
        let owned;
        let c = match by_link.get(l) {
            Some(c) => *c,
            None => {
                owned = preprocess::candidate(s, *l).ok_or_else(|| SbraError::UnknownCandidate(l.to_string()))?;
                &owned
            }
        };
        if c.malt == 0 {
            return Err(SbraError::Infeasible { iface: l.a, slot_count: k });
        }
        let f = c.form_slots as usize;
        for leg in &c.formation {
            if leg.slots > 0 {
                sched.add_leg(leg.iface, f - leg.slots as usize + 1, leg.dir, leg.slots)?;
            }
        }
        for t in &c.transitions {
            if t.slots > 0 {
                sched.add_leg(t.iface, f + c.malt as usize, t.dir, t.slots)?;
            }
        }
    }
    let turn = s.turn_steps();
    for fl in &s.final_links {
        for y in fl.endpoints() {
            if trace.final_ifaces.contains(&y) {
                continue;
            }
            let z = fl.other(y).expect("endpoint");
            let target = s.bearing(y.node, z.node).ok_or(SbraError::NotNeighbors(y.node, z.node))?;
            let (dir, r) = kinematics::shortest(s.initial_alignment[y.node][y.iface], target, turn);
            if r as usize >= k {
                return Err(SbraError::Infeasible { iface: y, slot_count: k });
            }
            if r > 0 {
                sched.add_leg(y, k - r as usize, dir, r)?;
            }
        }
    }
    let timeline = kinematics::unroll(&sched, s)?;
    let last = timeline.at(k);
    for fl in &s.final_links {
        for (x, y) in [(fl.a, fl.b), (fl.b, fl.a)] {
            if s.bearing(x.node, y.node) != Some(last[x.node][x.iface]) {
                return Err(SbraError::Infeasible { iface: x, slot_count: k });
            }
        }
    }
    Ok(sched)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Pre-processing shared by every run on one scenario.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub scenario: &'a Scenario,
    pub candidates: Vec<Candidate>,
    pub preprocess_ms: f64,
}

impl<'a> Prepared<'a> {
    pub fn new(s: &'a Scenario) -> Result<Self> {
        let t0 = Instant::now();
        let v = validate_scenario(s);
        if !v.is_empty() {
            return Err(SbraError::InvalidScenario(v));
        }
        let candidates = preprocess::possible_links(s);
        Ok(Self { scenario: s, candidates, preprocess_ms: ms(t0) })
    }

    /// One greedy run; `rng` is only consulted when `xi > 1`.
    pub fn run<R: Rng + ?Sized>(&self, w: &WeightSet, xi: usize, rng: &mut R) -> Result<ReconfigResult> {
        let s = self.scenario;
        let t0 = Instant::now();
        let ranked: Vec<Link> = ranking::rank(&self.candidates, w).iter().map(|c| c.link).collect();
        let rank_ms = ms(t0);
        let t1 = Instant::now();
        let trace = select_links(&ranked, xi, rng)?;
        let select_ms = ms(t1);
        let t2 = Instant::now();
        let schedule = assign_movements(&trace, s, &self.candidates)?;
        let assign_ms = ms(t2);
        let t3 = Instant::now();
        let (links_per_slot, loss) = routing::evaluate_schedule(s, &schedule)?;
        let routing_ms = ms(t3);
        Ok(ReconfigResult {
            algorithm: Algorithm::Greedy,
            schedule,
            links_per_slot,
            loss,
            weights: Some(*w),
            xi: Some(xi),
            seed: None,
            trace: Some(trace),
            timings: Timings {
                preprocess_ms: self.preprocess_ms,
                rank_ms,
                select_ms,
                assign_ms,
                routing_ms,
                total_ms: self.preprocess_ms + ms(t0),
            },
            oracle: false,
        })
    }
}

/// Full pipeline: preprocess, rank, select, assign, unroll and route.
pub fn greedy_sbra<R: Rng + ?Sized>(s: &Scenario, w: &WeightSet, xi: usize, rng: &mut R) -> Result<ReconfigResult> {
    Prepared::new(s)?.run(w, xi, rng)
}

/// Sanity check used by tests and the acceptance suite: `X_end` is formed at
/// slot K and no interface ever moves both ways in one slot.
pub fn check_contract(s: &Scenario, r: &ReconfigResult) -> std::result::Result<(), String> {
    let last = r.links_per_slot.last().ok_or("empty timeline")?;
    for l in &s.final_links {
        if !last.contains(l) {
            return Err(format!("final link {l} missing at slot {}", s.slot_count));
        }
    }
    for x in s.interfaces() {
        for k in 1..=s.slot_count {
            if r.schedule.cw(x, k) && r.schedule.ccw(x, k) {
                return Err(format!("{x} moves both ways at slot {k}"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Move;
    use crate::model::LinkIndex;
    use crate::scenarios;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn l(a: usize, b: usize) -> Link {
        Link::from_parts(a, 0, b, 0)
    }

    struct NoDraws;
    impl rand::RngCore for NoDraws {
        fn next_u32(&mut self) -> u32 {
            panic!("no randomness expected")
        }
        fn next_u64(&mut self) -> u64 {
            panic!("no randomness expected")
        }
        fn fill_bytes(&mut self, _: &mut [u8]) {
            panic!("no randomness expected")
        }
    }

    #[test]
    fn conflict_removal() {
        let a = l(0, 1);
        let b = Link::from_parts(0, 0, 2, 0);
        let c = l(3, 4);
        let t = select_links(&[a, b, c], 1, &mut NoDraws).unwrap();
        assert_eq!(t.chosen, vec![a, c]);
        assert_eq!(t.removed_conflicts, vec![1, 0]);
        assert_eq!(select_links(&[a, b, c], 1, &mut NoDraws).unwrap(), t);
        assert!(select_links(&[a], 0, &mut NoDraws).is_err());
    }

    #[test]
    fn window_draws_replay() {
        // links on disjoint interface pairs so only the window rule matters
        let ranked: Vec<Link> = (0..12).map(|i| Link::from_parts(2 * i, 0, 2 * i + 1, 0)).collect();
        let t = select_links(&ranked, 3, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rest = ranked.clone();
        let mut replay = Vec::new();
        while !rest.is_empty() {
            let w = rest.len().min(3);
            let i = if w == 1 { 0 } else { rng.random_range(0..w) };
            replay.push(rest.remove(i));
        }
        assert_eq!(t.chosen, replay);
        assert!(t.draws.iter().all(|d| *d < 3));
    }

    #[test]
    fn fig2_timings_for_temporary_link() {
        let s = scenarios::fig2();
        let cands = preprocess::possible_links(&s);
        let trace = select_links(&[l(0, 3)], 1, &mut NoDraws).unwrap();
        let sched = assign_movements(&trace, &s, &cands).unwrap();
        let hub = InterfaceId::new(0, 0);
        let moves_at = |x: InterfaceId, m: Move| -> Vec<usize> { (1..=20).filter(|&k| sched.get(x, k) == m).collect() };
        let hub_cw = moves_at(hub, Move::Cw);
        assert_eq!(hub_cw, (1..=8).chain(11..=19).collect::<Vec<_>>());
        assert_eq!(moves_at(InterfaceId::new(3, 0), Move::Cw), (3..=8).collect::<Vec<_>>());
        assert_eq!(moves_at(InterfaceId::new(4, 0), Move::Ccw), (15..=19).collect::<Vec<_>>());
        let tl = kinematics::unroll(&sched, &s).unwrap();
        let links = kinematics::links_per_slot(&tl, &s);
        for k in 9..=11 {
            assert!(links[k - 1].contains(&l(0, 3)), "slot {k}");
        }
        assert!(!links[11].contains(&l(0, 3)));
        assert!(links[19].contains(&l(0, 4)));
        assert!(links[0].contains(&l(0, 2)));
        assert!(!links[1].contains(&l(0, 2)));
    }

    #[test]
    fn no_change_scenario_has_no_movement() {
        let mut s = scenarios::fig2();
        s.final_links = s.initial_links.clone();
        let r = greedy_sbra(&s, &default_weights(), 1, &mut NoDraws).unwrap();
        assert!(r.schedule.is_idle());
        let static_loss = routing::total_reconfig_loss(&s, &vec![s.initial_links.clone(); s.slot_count]);
        assert_eq!(r.loss, static_loss);
    }

    #[test]
    fn pure_greedy_is_deterministic() {
        let s = scenarios::generate(scenarios::Topology::Grid, 3, 20, 1).unwrap();
        let a = greedy_sbra(&s, &default_weights(), 1, &mut NoDraws).unwrap();
        let b = greedy_sbra(&s, &default_weights(), 1, &mut NoDraws).unwrap();
        assert!(a.same_outcome(&b));
        check_contract(&s, &a).unwrap();
    }

    #[test]
    fn infeasible_trace_names_the_interface() {
        let s = scenarios::fig2();
        let cands = preprocess::all_candidates(&s);
        let trace = select_links(&[l(0, 1)], 1, &mut NoDraws).unwrap();
        assert!(matches!(assign_movements(&trace, &s, &cands), Err(SbraError::Infeasible { .. })));
    }

    /// Slot-by-slot check written against the kinematic rules only.
    fn simulate_and_check(s: &Scenario, sched: &RotationSchedule) {
        let turn = s.turn_steps() as i64;
        let mut a: Vec<Vec<i64>> = s.initial_alignment.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
        for k in 1..s.slot_count {
            for x in s.interfaces() {
                let (cw, ccw) = (sched.cw(x, k), sched.ccw(x, k));
                assert!(!(cw && ccw));
                let v = &mut a[x.node][x.iface];
                *v = (*v + i64::from(cw) - i64::from(ccw)).rem_euclid(turn);
            }
        }
        for fl in &s.final_links {
            assert_eq!(a[fl.a.node][fl.a.iface], s.bearing(fl.a.node, fl.b.node).unwrap() as i64);
            assert_eq!(a[fl.b.node][fl.b.iface], s.bearing(fl.b.node, fl.a.node).unwrap() as i64);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn random_tiny_schedules_are_sound(
            seed in any::<u64>(),
            k in 4usize..20,
            wv in prop::array::uniform7(0.0f64..=1.0),
            xi in 1usize..4,
            rs in any::<u64>(),
        ) {
            let s = scenarios::gen_tiny(4, 1, k, seed).unwrap();
            let r = greedy_sbra(&s, &WeightSet::new(wv).unwrap(), xi, &mut ChaCha8Rng::seed_from_u64(rs)).unwrap();
            simulate_and_check(&s, &r.schedule);
            prop_assert!(check_contract(&s, &r).is_ok());
            let trace = r.trace.unwrap();
            for (i, x) in trace.chosen.iter().enumerate() {
                for y in &trace.chosen[i + 1..] {
                    prop_assert!(!x.shares_interface(y));
                }
            }
        }
    }

    #[test]
    fn stationary_unused_interfaces() {
        let s = scenarios::generate(scenarios::Topology::HexSmall, 4, 25, 3).unwrap();
        let r = greedy_sbra(&s, &default_weights(), 1, &mut NoDraws).unwrap();
        let index = LinkIndex::new(&s);
        let trace = r.trace.as_ref().unwrap();
        for x in s.interfaces() {
            if !trace.final_ifaces.contains(&x) && index.final_link(x).is_none() {
                assert!(r.schedule.interface_moves(x).iter().all(|m| *m == Move::Idle));
            }
        }
    }
}
