//! Formation times, maximum active link time (MALT) and the candidate pool.
//!
//! For every interface that owes a final link, its *final direction* is the
//! shortest way from its initial angle to its final bearing. A temporary
//! link that parks the interface elsewhere is charged the rotation from the
//! temporary bearing to the final bearing, travelled along that direction.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::kinematics::{self, Dir};
use crate::model::{InterfaceId, Link, LinkIndex, Scenario};

/// Rotation of one endpoint toward the candidate's bearing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Leg {
    pub iface: InterfaceId,
    pub dir: Dir,
    pub slots: u32,
}

/// Onward rotation an endpoint still owes after the candidate link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub iface: InterfaceId,
    pub final_link: Link,
    pub dir: Dir,
    pub slots: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub link: Link,
    pub form_slots: u32,
    pub malt: u32,
    pub attributes: [f64; 7],
    /// Formation legs of endpoints `a` and `b`.
    pub formation: [Leg; 2],
    /// Endpoints that must leave this link for a different final link.
    pub transitions: Vec<Transition>,
}

/// Direction an interface takes toward its final bearing, given the
/// direction it used to reach `from`.
fn final_direction(a0: u32, final_bearing: u32, formation_dir: Dir, turn: u32) -> Dir {
    let (dir, len) = kinematics::shortest(a0, final_bearing, turn);
    if len == 0 {
        formation_dir.reverse()
    } else {
        dir
    }
}

/// MALT given the formation time and the owed transitions.
pub fn compute_malt(s: &Scenario, form_slots: u32, transitions: &[Transition]) -> u32 {
    let k = s.slot_count as i64;
    let worst = transitions.iter().map(|t| t.slots as i64).max().unwrap_or(0);
    (k - form_slots as i64 - worst).max(0) as u32
}

fn evaluate(link: Link, s: &Scenario, index: &LinkIndex) -> Option<Candidate> {
    let turn = s.turn_steps();
    let a0 = &s.initial_alignment;
    let bearing_of = |x: InterfaceId, y: InterfaceId| s.bearing(x.node, y.node);
    let (va, vb) = (bearing_of(link.a, link.b)?, bearing_of(link.b, link.a)?);
    let formation = [(link.a, va), (link.b, vb)].map(|(x, v)| {
        let (dir, slots) = kinematics::shortest(a0[x.node][x.iface], v, turn);
        Leg { iface: x, dir, slots }
    });
    let form_slots = formation[0].slots.max(formation[1].slots);
    let is_final = index.is_final(&link);
    let mut transitions = Vec::new();
    if !is_final {
        for (leg, v) in formation.iter().zip([va, vb]) {
            let x = leg.iface;
            let Some(fl) = index.final_link(x) else { continue };
            let y = fl.other(x).expect("endpoint of its own link");
            let fb = bearing_of(x, y).expect("final links join neighbors");
            let dir = final_direction(a0[x.node][x.iface], fb, leg.dir, turn);
            let slots = kinematics::slots_along(v, fb, dir, turn);
            transitions.push(Transition { iface: x, final_link: fl, dir, slots });
        }
    }
    let malt = compute_malt(s, form_slots, &transitions);
    let demand_of = |links: &[Option<Link>]| {
        let mut seen: Vec<Link> = links.iter().flatten().copied().collect();
        seen.sort();
        seen.dedup();
        seen.iter().map(|l| s.demand[l.a.node] + s.demand[l.b.node]).sum::<f64>()
    };
    let init = [index.initial_link(link.a), index.initial_link(link.b)];
    let fin = [index.final_link(link.a), index.final_link(link.b)];
    let attributes = [
        form_slots as f64,
        malt as f64,
        init.iter().filter(|l| l.is_none()).count() as f64,
        f64::from(u8::from(index.is_initial(&link))),
        f64::from(u8::from(is_final)),
        demand_of(&init),
        demand_of(&fin),
    ];
    Some(Candidate { link, form_slots, malt, attributes, formation, transitions })
}

/// Every interface pair of every neighboring node pair, including those with MALT 0.
pub fn all_candidates(s: &Scenario) -> Vec<Candidate> {
    let index = LinkIndex::new(s);
    let mut out = Vec::new();
    for d in 0..s.node_count {
        for d2 in (d + 1)..s.node_count {
            if !s.is_neighbor(d, d2) {
                continue;
            }
            for n in 0..s.iface_count {
                for n2 in 0..s.iface_count {
                    out.extend(evaluate(Link::from_parts(d, n, d2, n2), s, &index));
                }
            }
        }
    }
    out
}

/// Candidates that can be active for at least one slot, in ascending link order.
pub fn possible_links(s: &Scenario) -> Vec<Candidate> {
    all_candidates(s).into_iter().filter(|c| c.malt > 0).collect()
}

pub fn candidate(s: &Scenario, link: Link) -> Option<Candidate> {
    evaluate(link, s, &LinkIndex::new(s))
}

/// Candidate table as CSV: `d,n,d',n',form_slots,malt,a1..a7`.
pub fn write_candidates_csv(cands: &[Candidate], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "n", "d'", "n'", "form_slots", "malt", "a1", "a2", "a3", "a4", "a5", "a6", "a7"])?;
    for c in cands {
        let mut row = vec![
            c.link.a.node.to_string(),
            c.link.a.iface.to_string(),
            c.link.b.node.to_string(),
            c.link.b.iface.to_string(),
            c.form_slots.to_string(),
            c.malt.to_string(),
        ];
        row.extend(c.attributes.iter().map(|a| a.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
