//! Rotation arithmetic and schedule execution.
//!
//! Slots are 1-based. The movement decided at slot `k` takes effect at slot
//! `k + 1`: `A[k+1] = A[k] + θ·(CW[k] − CCW[k])`, so a clockwise move adds one
//! step to the angle. The movement at slot `K` has no observable effect.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbraError};
use crate::model::{InterfaceId, Link, LinkIndex, Scenario};

/// Movement decision of one interface in one slot. An interface turns at
/// most one step per slot, in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Move {
    #[default]
    Idle,
    Cw,
    Ccw,
}

impl Move {
    pub fn delta(self) -> i64 {
        match self {
            Move::Idle => 0,
            Move::Cw => 1,
            Move::Ccw => -1,
        }
    }
}

/// Direction of a rotation leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    Cw,
    Ccw,
}

impl Dir {
    pub fn as_move(self) -> Move {
        match self {
            Dir::Cw => Move::Cw,
            Dir::Ccw => Move::Ccw,
        }
    }

    pub fn reverse(self) -> Dir {
        match self {
            Dir::Cw => Dir::Ccw,
            Dir::Ccw => Dir::Cw,
        }
    }
}

/// `(cw, ccw)` slot counts to turn from `from` to `to` (both in steps).
pub fn rotation_slots(from: u32, to: u32, turn: u32) -> (u32, u32) {
    let cw = (to + turn - from % turn) % turn;
    let ccw = (turn - cw) % turn;
    (cw, ccw)
}

/// Degree-valued wrapper of [`rotation_slots`]; both angles must sit on the θ grid.
pub fn rotation_slots_deg(from_deg: f64, to_deg: f64, step_deg: f64) -> Result<(u32, u32)> {
    let turn = (360.0 / step_deg).round() as u32;
    let grid = |a: f64| {
        crate::model::steps_from_deg(a, step_deg).ok_or(SbraError::NonGridAngle { angle_deg: a, step_deg })
    };
    Ok(rotation_slots(grid(from_deg)?, grid(to_deg)?, turn))
}

/// Shortest rotation, ties going clockwise.
pub fn shortest(from: u32, to: u32, turn: u32) -> (Dir, u32) {
    let (cw, ccw) = rotation_slots(from, to, turn);
    if cw <= ccw {
        (Dir::Cw, cw)
    } else {
        (Dir::Ccw, ccw)
    }
}

/// Slots needed to turn from `from` to `to` going only in `dir`.
pub fn slots_along(from: u32, to: u32, dir: Dir, turn: u32) -> u32 {
    let (cw, ccw) = rotation_slots(from, to, turn);
    match dir {
        Dir::Cw => cw,
        Dir::Ccw => ccw,
    }
}

pub fn advance(angle: u32, dir: Dir, slots: u32, turn: u32) -> u32 {
    let s = slots % turn;
    match dir {
        Dir::Cw => (angle + s) % turn,
        Dir::Ccw => (angle + turn - s) % turn,
    }
}

/// Minimum slots for both ends of `link` to face each other, starting from `alignment`.
pub fn min_slots_to_form(link: &Link, alignment: &[Vec<u32>], s: &Scenario) -> Result<u32> {
    let (a, b) = (link.a, link.b);
    let (Some(va), Some(vb)) = (s.bearing(a.node, b.node), s.bearing(b.node, a.node)) else {
        return Err(SbraError::NotNeighbors(a.node, b.node));
    };
    let turn = s.turn_steps();
    let ra = shortest(alignment[a.node][a.iface], va, turn).1;
    let rb = shortest(alignment[b.node][b.iface], vb, turn).1;
    Ok(ra.max(rb))
}

/// Per-interface, per-slot CW/CCW decisions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RotationSchedule {
    node_count: usize,
    iface_count: usize,
    slot_count: usize,
    moves: Vec<Move>,
}

/// A run of identical moves, used by the result encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(rename = "dir")]
    pub mv: Move,
    pub len: usize,
}

impl RotationSchedule {
    pub fn idle(node_count: usize, iface_count: usize, slot_count: usize) -> Self {
        Self { node_count, iface_count, slot_count, moves: vec![Move::Idle; node_count * iface_count * slot_count] }
    }

    pub fn for_scenario(s: &Scenario) -> Self {
        Self::idle(s.node_count, s.iface_count, s.slot_count)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.node_count, self.iface_count, self.slot_count)
    }

    fn idx(&self, x: InterfaceId, k: usize) -> usize {
        assert!(k >= 1 && k <= self.slot_count, "slot {k} outside 1..={}", self.slot_count);
        (x.node * self.iface_count + x.iface) * self.slot_count + (k - 1)
    }

    pub fn get(&self, x: InterfaceId, k: usize) -> Move {
        self.moves[self.idx(x, k)]
    }

    pub fn set(&mut self, x: InterfaceId, k: usize, m: Move) {
        let i = self.idx(x, k);
        self.moves[i] = m;
    }

    pub fn cw(&self, x: InterfaceId, k: usize) -> bool {
        self.get(x, k) == Move::Cw
    }

    pub fn ccw(&self, x: InterfaceId, k: usize) -> bool {
        self.get(x, k) == Move::Ccw
    }

    /// Rotates `x` in `dir` during slots `start..start+len`; fails if any of
    /// those slots already carries a movement.
    pub fn add_leg(&mut self, x: InterfaceId, start: usize, dir: Dir, len: u32) -> Result<()> {
        for k in start..start + len as usize {
            if k < 1 || k > self.slot_count || self.get(x, k) != Move::Idle {
                return Err(SbraError::ScheduleConflict(x));
            }
        }
        for k in start..start + len as usize {
            self.set(x, k, dir.as_move());
        }
        Ok(())
    }

    pub fn is_idle(&self) -> bool {
        self.moves.iter().all(|m| *m == Move::Idle)
    }

    pub fn interface_moves(&self, x: InterfaceId) -> &[Move] {
        let start = self.idx(x, 1);
        &self.moves[start..start + self.slot_count]
    }

    /// Run-length encoding of one interface's moves over all slots.
    pub fn segments(&self, x: InterfaceId) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::new();
        for &m in self.interface_moves(x) {
            match out.last_mut() {
                Some(seg) if seg.mv == m => seg.len += 1,
                _ => out.push(Segment { mv: m, len: 1 }),
            }
        }
        out
    }

    pub fn from_segments(node_count: usize, iface_count: usize, slot_count: usize, per_iface: &[Vec<Segment>]) -> Result<Self> {
        let mut s = Self::idle(node_count, iface_count, slot_count);
        if per_iface.len() != node_count * iface_count {
            return Err(SbraError::Dimension(format!("expected {} interfaces", node_count * iface_count)));
        }
        for (i, segs) in per_iface.iter().enumerate() {
            let x = InterfaceId::new(i / iface_count, i % iface_count);
            let mut k = 1;
            for seg in segs {
                for _ in 0..seg.len {
                    if k > slot_count {
                        return Err(SbraError::Dimension(format!("segments of {x} exceed {slot_count} slots")));
                    }
                    s.set(x, k, seg.mv);
                    k += 1;
                }
            }
            if k != slot_count + 1 {
                return Err(SbraError::Dimension(format!("segments of {x} cover {} of {slot_count} slots", k - 1)));
            }
        }
        Ok(s)
    }
}

/// Interface angles at every slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentTimeline {
    slots: Vec<Vec<Vec<u32>>>,
}

impl AlignmentTimeline {
    /// Alignment at slot `k` (1-based), indexed `[node][iface]`.
    pub fn at(&self, k: usize) -> &[Vec<u32>] {
        &self.slots[k - 1]
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<Vec<u32>>> {
        self.slots.iter()
    }
}

/// Applies `schedule` to the initial alignment of `s`.
pub fn unroll(schedule: &RotationSchedule, s: &Scenario) -> Result<AlignmentTimeline> {
    if schedule.dims() != (s.node_count, s.iface_count, s.slot_count) {
        return Err(SbraError::Dimension(format!(
            "schedule {:?} does not match scenario ({}, {}, {})",
            schedule.dims(),
            s.node_count,
            s.iface_count,
            s.slot_count
        )));
    }
    let turn = s.turn_steps() as i64;
    let mut slots = Vec::with_capacity(s.slot_count);
    let mut cur = s.initial_alignment.clone();
    for k in 1..=s.slot_count {
        slots.push(cur.clone());
        if k == s.slot_count {
            break;
        }
        for x in s.interfaces() {
            let m = schedule.get(x, k).delta();
            if m != 0 {
                let a = &mut cur[x.node][x.iface];
                *a = (*a as i64 + m).rem_euclid(turn) as u32;
            }
        }
    }
    Ok(AlignmentTimeline { slots })
}

/// Every interface pair facing each other under `alignment`, in ascending order.
/// Not necessarily a matching.
pub fn aligned_pairs(alignment: &[Vec<u32>], s: &Scenario) -> Vec<Link> {
    let mut out = Vec::new();
    for d in 0..s.node_count {
        for d2 in (d + 1)..s.node_count {
            let (Some(v), Some(w)) = (s.bearing(d, d2), s.bearing(d2, d)) else { continue };
            for n in 0..s.iface_count {
                if alignment[d][n] != v {
                    continue;
                }
                for n2 in 0..s.iface_count {
                    if alignment[d2][n2] == w {
                        out.push(Link::from_parts(d, n, d2, n2));
                    }
                }
            }
        }
    }
    out
}

/// Resolves aligned pairs into a matching: final links first, then initial
/// links, then the rest in ascending order. Final links are disjoint, so
/// whenever all of them are aligned they are all formed.
pub fn resolve_matching(mut pairs: Vec<Link>, index: &LinkIndex) -> Vec<Link> {
    let class = |l: &Link| {
        if index.is_final(l) {
            0
        } else if index.is_initial(l) {
            1
        } else {
            2
        }
    };
    pairs.sort_by_key(|l| (class(l), *l));
    let mut used = std::collections::HashSet::new();
    let mut out: Vec<Link> = pairs
        .into_iter()
        .filter(|l| {
            if used.contains(&l.a) || used.contains(&l.b) {
                return false;
            }
            used.insert(l.a);
            used.insert(l.b);
            true
        })
        .collect();
    out.sort();
    out
}

/// Links formed under `alignment`, as a matching in ascending order.
pub fn links_at_slot(alignment: &[Vec<u32>], s: &Scenario) -> Vec<Link> {
    resolve_matching(aligned_pairs(alignment, s), &LinkIndex::new(s))
}

/// Formed links for every slot of a timeline.
pub fn links_per_slot(timeline: &AlignmentTimeline, s: &Scenario) -> Vec<Vec<Link>> {
    let index = LinkIndex::new(s);
    timeline.iter().map(|a| resolve_matching(aligned_pairs(a, s), &index)).collect()
}
