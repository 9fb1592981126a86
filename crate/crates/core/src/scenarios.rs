//! Instance generators (Grid, Hexagon small/large, random) and fixtures.
//!
//! A generator first lays out a [`Skeleton`] (positions, core nodes, user
//! population), then [`build_scenario`] derives δ, V and R, draws the two
//! demand realizations and grows one capacity-aware spanning forest per
//! state under the per-node interface budget. The second state's demand
//! becomes `ρ`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SbraError};
use crate::geometry::{self, Position};
use crate::kinematics;
use crate::linkbudget::{self, LinkBudgetParams};
use crate::model::{validate_scenario, InterfaceId, Link, Scenario, SCENARIO_FORMAT};

pub const GRID_PITCH_M: f64 = 180.0;
pub const HEX_PITCH_M: f64 = 140.0;
pub const DEFAULT_STEP_DEG: f64 = 10.0;
pub const DEFAULT_SLOT_S: f64 = 0.2;

/// Per-user rates (Mbps) and their shares.
pub const USER_CLASSES: [(f64, f64); 3] = [(50.0, 0.7), (75.0, 0.2), (100.0, 0.1)];

const STREAM_JITTER: u64 = 1;
const STREAM_DEMAND_INIT: u64 = 2;
const STREAM_DEMAND_FINAL: u64 = 3;
const STREAM_TREE_INIT: u64 = 4;
const STREAM_TREE_FINAL: u64 = 5;
const STREAM_IFACES: u64 = 6;
const STREAM_ANGLES: u64 = 7;
const STREAM_LAYOUT: u64 = 8;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Grid,
    HexSmall,
    HexLarge,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Grid => "grid",
            Topology::HexSmall => "hex-small",
            Topology::HexLarge => "hex-large",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "grid" => Some(Topology::Grid),
            "hex-small" => Some(Topology::HexSmall),
            "hex-large" => Some(Topology::HexLarge),
            _ => None,
        }
    }

    /// Default adjacency range. For the hexagons it keeps first-ring
    /// neighbors only.
    pub fn default_range_m(self) -> f64 {
        match self {
            Topology::Grid => 300.0,
            Topology::HexSmall | Topology::HexLarge => 200.0,
        }
    }

    pub fn skeleton(self, seed: u64) -> Result<Skeleton> {
        match self {
            Topology::Grid => gen_grid(seed, GRID_PITCH_M / 8.0),
            Topology::HexSmall => gen_hexagon(HexSize::Small),
            Topology::HexLarge => gen_hexagon(HexSize::Large),
        }
    }
}

/// Integer user counts per rate class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMix {
    pub classes: Vec<(f64, usize)>,
}

impl UserMix {
    pub fn users(&self) -> usize {
        self.classes.iter().map(|c| c.1).sum()
    }

    pub fn total_mbps(&self) -> f64 {
        self.classes.iter().map(|(r, c)| r * *c as f64).sum()
    }

    /// Largest-remainder rounding of the shares.
    pub fn from_proportions(users: usize, classes: &[(f64, f64)]) -> Result<Self> {
        check_shares(classes)?;
        let ideal: Vec<f64> = classes.iter().map(|c| c.1 * users as f64).collect();
        let mut counts: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
        let mut order: Vec<usize> = (0..classes.len()).collect();
        order.sort_by(|&i, &j| {
            let (fi, fj) = (ideal[i] - ideal[i].floor(), ideal[j] - ideal[j].floor());
            fj.total_cmp(&fi).then(i.cmp(&j))
        });
        let mut missing = users - counts.iter().sum::<usize>();
        for i in order.into_iter().cycle() {
            if missing == 0 {
                break;
            }
            counts[i] += 1;
            missing -= 1;
        }
        Ok(Self { classes: classes.iter().zip(counts).map(|(c, n)| (c.0, n)).collect() })
    }

    /// Counts that hit `total_mbps` exactly while staying as close as
    /// possible (least squares) to the shares. Ties prefer fewer users in the
    /// later classes.
    pub fn matching_total(users: usize, classes: &[(f64, f64)], total_mbps: f64) -> Result<Self> {
        check_shares(classes)?;
        let ideal: Vec<f64> = classes.iter().map(|c| c.1 * users as f64).collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut counts = vec![0usize; classes.len()];
        fn rec(
            i: usize,
            left: usize,
            counts: &mut Vec<usize>,
            classes: &[(f64, f64)],
            ideal: &[f64],
            target: f64,
            best: &mut Option<(f64, Vec<usize>)>,
        ) {
            if i + 1 == classes.len() {
                counts[i] = left;
                let total: f64 = classes.iter().zip(counts.iter()).map(|(c, &n)| c.0 * n as f64).sum();
                if (total - target).abs() > 1e-9 {
                    return;
                }
                let err: f64 = counts.iter().zip(ideal).map(|(&n, x)| (n as f64 - x).powi(2)).sum();
                let better = match best {
                    None => true,
                    Some((e, v)) => {
                        err < *e - 1e-12
                            || ((err - *e).abs() <= 1e-12 && counts.iter().rev().lt(v.iter().rev()))
                    }
                };
                if better {
                    *best = Some((err, counts.clone()));
                }
                return;
            }
            for n in 0..=left {
                counts[i] = n;
                rec(i + 1, left - n, counts, classes, ideal, target, best);
            }
        }
        if classes.is_empty() {
            return Err(SbraError::InvalidParams("no user classes".into()));
        }
        rec(0, users, &mut counts, classes, &ideal, total_mbps, &mut best);
        let (_, counts) = best.ok_or_else(|| {
            SbraError::InvalidParams(format!("no split of {users} users reaches {total_mbps} Mbps"))
        })?;
        Ok(Self { classes: classes.iter().zip(counts).map(|(c, n)| (c.0, n)).collect() })
    }
}

fn check_shares(classes: &[(f64, f64)]) -> Result<()> {
    let sum: f64 = classes.iter().map(|c| c.1).sum();
    if (sum - 1.0).abs() > 1e-9 || classes.iter().any(|c| c.1 < 0.0) {
        return Err(SbraError::InvalidParams(format!("user shares sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Scatters every user of `mix` onto a uniformly chosen node.
pub fn assign_demands(node_count: usize, mix: &UserMix, seed: u64) -> Vec<f64> {
    assign_demands_with(node_count, mix, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn assign_demands_with(node_count: usize, mix: &UserMix, rng: &mut impl Rng) -> Vec<f64> {
    let mut rho = vec![0.0; node_count];
    if node_count == 0 {
        return rho;
    }
    for &(rate, count) in &mix.classes {
        for _ in 0..count {
            rho[rng.random_range(0..node_count)] += rate;
        }
    }
    rho
}

/// Positions, gateways and user population of an instance, before any link state exists.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub name: String,
    pub positions: Vec<Position>,
    pub core_nodes: Vec<usize>,
    pub users: UserMix,
    pub range_m: f64,
}

/// 4×4 lattice at 180 m pitch, each coordinate shifted by N(0, σ²).
pub fn gen_grid(seed: u64, sigma_m: f64) -> Result<Skeleton> {
    let mut rng = stream(seed, STREAM_JITTER);
    let jitter = Normal::new(0.0, sigma_m).map_err(|e| SbraError::InvalidParams(e.to_string()))?;
    let mut positions = Vec::with_capacity(16);
    for row in 0..4 {
        for col in 0..4 {
            let (dx, dy) = (jitter.sample(&mut rng), jitter.sample(&mut rng));
            positions.push([col as f64 * GRID_PITCH_M + dx, row as f64 * GRID_PITCH_M + dy]);
        }
    }
    Ok(Skeleton {
        name: Topology::Grid.name().into(),
        positions,
        // second node of the second row: an interior node with eight lattice neighbors
        core_nodes: vec![5],
        users: UserMix::matching_total(100, &USER_CLASSES, 6400.0)?,
        range_m: Topology::Grid.default_range_m(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HexSize {
    Small,
    Large,
}

fn hex_ring(radius: i32) -> Vec<(i32, i32)> {
    const DIRS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
    if radius == 0 {
        return vec![(0, 0)];
    }
    let mut out = Vec::new();
    let mut h = (DIRS[4].0 * radius, DIRS[4].1 * radius);
    for dir in DIRS {
        for _ in 0..radius {
            out.push(h);
            h = (h.0 + dir.0, h.1 + dir.1);
        }
    }
    out
}

/// Regular hexagonal layout (pitch 140 m): 19 nodes in two rings (small)
/// or 37 nodes in three rings (large).
pub fn gen_hexagon(size: HexSize) -> Result<Skeleton> {
    let rings = match size {
        HexSize::Small => 2,
        HexSize::Large => 3,
    };
    let positions: Vec<Position> = (0..=rings)
        .flat_map(hex_ring)
        .map(|(q, r)| {
            let (q, r) = (q as f64, r as f64);
            [HEX_PITCH_M * (q + r / 2.0), HEX_PITCH_M * (3f64.sqrt() / 2.0) * r]
        })
        .collect();
    let (name, core_nodes, users) = match size {
        HexSize::Small => (Topology::HexSmall, vec![0], UserMix::matching_total(105, &USER_CLASSES, 6650.0)?),
        // center plus the first node of ring 2 (index 1 + 6)
        HexSize::Large => (Topology::HexLarge, vec![0, 7], UserMix::matching_total(210, &USER_CLASSES, 14150.0)?),
    };
    Ok(Skeleton {
        name: name.name().into(),
        positions,
        core_nodes,
        users,
        range_m: name.default_range_m(),
    })
}

/// Uniform random placement in a square sized for grid-like density, for tests and sweeps.
pub fn gen_random(node_count: usize, core_count: usize, seed: u64) -> Result<Skeleton> {
    if node_count == 0 || core_count == 0 || core_count > node_count {
        return Err(SbraError::InvalidParams("need 1 <= core_count <= node_count".into()));
    }
    let mut rng = stream(seed, STREAM_LAYOUT);
    let side = GRID_PITCH_M * (node_count as f64).sqrt();
    let mut positions: Vec<Position> = Vec::with_capacity(node_count);
    let mut attempts = 0;
    while positions.len() < node_count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(SbraError::InvalidParams("could not place nodes".into()));
        }
        let p = [rng.random_range(0.0..side), rng.random_range(0.0..side)];
        if positions.iter().all(|q| geometry::distance(*q, p) >= 60.0) {
            positions.push(p);
        }
    }
    Ok(Skeleton {
        name: format!("random-{node_count}"),
        positions,
        core_nodes: (0..core_count).collect(),
        users: UserMix::from_proportions(node_count * 6, &USER_CLASSES)?,
        range_m: 300.0,
    })
}

/// Knobs for [`build_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub iface_count: usize,
    pub slot_count: usize,
    pub seed: u64,
    pub step_deg: f64,
    pub slot_duration_s: f64,
    pub link_budget: LinkBudgetParams,
}

impl GenOptions {
    pub fn new(iface_count: usize, slot_count: usize, seed: u64) -> Self {
        Self {
            iface_count,
            slot_count,
            seed,
            step_deg: DEFAULT_STEP_DEG,
            slot_duration_s: DEFAULT_SLOT_S,
            link_budget: LinkBudgetParams::default(),
        }
    }
}

/// δ, V and R for a layout. Pairs beyond `range_m` or below the rate floor
/// are dropped, and so is every neighbor that shares a quantized bearing
/// with a closer neighbor of the same node, so that an angle identifies at
/// most one neighbor.
pub fn build_links(
    positions: &[Position],
    range_m: f64,
    step_deg: f64,
    lb: &LinkBudgetParams,
) -> Result<(Vec<Vec<u8>>, Vec<Vec<Option<u32>>>, Vec<Vec<f64>>)> {
    let n = positions.len();
    let mut delta = geometry::build_adjacency(positions, range_m);
    let mut rate = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if delta[i][j] == 1 {
                match linkbudget::link_rate(geometry::distance(positions[i], positions[j]), lb)? {
                    Some(r) => rate[i][j] = r,
                    None => delta[i][j] = 0,
                }
            }
        }
    }
    let align = geometry::build_align_angles(positions, &delta, step_deg)?;
    for i in 0..n {
        let mut by_angle: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for j in 0..n {
            if let Some(a) = align[i][j] {
                by_angle.entry(a).or_default().push(j);
            }
        }
        for group in by_angle.values().filter(|g| g.len() > 1) {
            let keep = *group
                .iter()
                .min_by(|&&a, &&b| {
                    geometry::distance(positions[i], positions[a])
                        .total_cmp(&geometry::distance(positions[i], positions[b]))
                        .then(a.cmp(&b))
                })
                .expect("non-empty group");
            for &j in group.iter().filter(|&&j| j != keep) {
                delta[i][j] = 0;
                delta[j][i] = 0;
            }
        }
    }
    let mut align = align;
    for i in 0..n {
        for j in 0..n {
            if delta[i][j] == 0 {
                align[i][j] = None;
                rate[i][j] = 0.0;
            }
        }
    }
    Ok((delta, align, rate))
}

/// Grows a spanning forest from the core nodes, one node at a time. The next
/// attachment is the one whose whole path to the core still has room for the
/// new node's demand, preferring fast links close to the core; per-edge
/// noise differentiates the two states.
fn grow_forest(
    delta: &[Vec<u8>],
    rate: &[Vec<f64>],
    cores: &[usize],
    iface_count: usize,
    demand: &[f64],
    rng: &mut impl Rng,
) -> Result<Vec<(usize, usize)>> {
    let n = delta.len();
    let noise: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(0.5..1.5)).collect()).collect();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut attached = vec![false; n];
    let mut hop = vec![0usize; n];
    let mut degree = vec![0usize; n];
    // load carried on the edge (parent[v], v)
    let mut load = vec![0.0; n];
    for &c in cores {
        attached[c] = true;
    }
    let headroom = |v: usize, parent: &[Option<usize>], load: &[f64]| {
        let mut room = f64::INFINITY;
        let mut cur = v;
        while let Some(p) = parent[cur] {
            room = room.min(rate[p][cur] - load[cur]);
            cur = p;
        }
        room
    };
    let mut edges = Vec::new();
    while attached.iter().any(|a| !a) {
        let mut best: Option<((bool, f64), usize, usize)> = None;
        for u in (0..n).filter(|&u| attached[u] && degree[u] < iface_count) {
            let room = headroom(u, &parent, &load);
            for v in (0..n).filter(|&v| !attached[v] && delta[u][v] == 1) {
                let fits = room.min(rate[u][v]) >= demand[v];
                let score = rate[u][v] * noise[u][v] * (1.0 + demand[v] / 100.0) / (1.0 + hop[u] as f64);
                let key = (fits, score);
                let better = match &best {
                    None => true,
                    Some((k, _, _)) => key.0 > k.0 || (key.0 == k.0 && key.1 > k.1),
                };
                if better {
                    best = Some((key, u, v));
                }
            }
        }
        let Some((_, u, v)) = best else {
            return Err(SbraError::Connectivity { iface_count });
        };
        attached[v] = true;
        parent[v] = Some(u);
        hop[v] = hop[u] + 1;
        degree[u] += 1;
        degree[v] += 1;
        let mut cur = v;
        while let Some(p) = parent[cur] {
            load[cur] += demand[v];
            cur = p;
        }
        edges.push((u.min(v), u.max(v)));
    }
    edges.sort_unstable();
    Ok(edges)
}

/// Initial links, final links, initial alignment and final-state demand.
#[derive(Debug, Clone, PartialEq)]
pub struct States {
    pub initial_links: Vec<Link>,
    pub final_links: Vec<Link>,
    pub initial_alignment: Vec<Vec<u32>>,
    pub demand: Vec<f64>,
}

/// Draws both states on a skeleton whose δ/V/R are already known.
pub fn gen_states(
    sk: &Skeleton,
    delta: &[Vec<u8>],
    align: &[Vec<Option<u32>>],
    rate: &[Vec<f64>],
    iface_count: usize,
    step_deg: f64,
    seed: u64,
) -> Result<States> {
    let n = sk.positions.len();
    let demand_init = assign_demands_with(n, &sk.users, &mut stream(seed, STREAM_DEMAND_INIT));
    let demand_final = assign_demands_with(n, &sk.users, &mut stream(seed, STREAM_DEMAND_FINAL));
    let init_edges = grow_forest(delta, rate, &sk.core_nodes, iface_count, &demand_init, &mut stream(seed, STREAM_TREE_INIT))?;
    let final_edges =
        grow_forest(delta, rate, &sk.core_nodes, iface_count, &demand_final, &mut stream(seed, STREAM_TREE_FINAL))?;

    let mut rng = stream(seed, STREAM_IFACES);
    let mut init_used: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut init_of_edge: BTreeMap<(usize, usize), Link> = BTreeMap::new();
    let mut perms: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut p: Vec<usize> = (0..iface_count).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    for &(u, v) in &init_edges {
        let iu = perms[u].pop().expect("degree bounded by interface count");
        let iv = perms[v].pop().expect("degree bounded by interface count");
        init_used[u].insert(iu);
        init_used[v].insert(iv);
        init_of_edge.insert((u, v), Link::from_parts(u, iu, v, iv));
    }
    let mut final_used: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut final_links = Vec::new();
    for &(u, v) in &final_edges {
        if let Some(l) = init_of_edge.get(&(u, v)) {
            final_used[u].insert(l.a.iface);
            final_used[v].insert(l.b.iface);
            final_links.push(*l);
        }
    }
    for &(u, v) in final_edges.iter().filter(|e| !init_of_edge.contains_key(e)) {
        let mut pick = |d: usize, rng: &mut ChaCha8Rng| {
            let free: Vec<usize> = (0..iface_count).filter(|i| !final_used[d].contains(i)).collect();
            let i = *free.choose(rng).expect("degree bounded by interface count");
            final_used[d].insert(i);
            i
        };
        let iu = pick(u, &mut rng);
        let iv = pick(v, &mut rng);
        final_links.push(Link::from_parts(u, iu, v, iv));
    }
    final_links.sort();
    let initial_links: Vec<Link> = init_of_edge.values().copied().collect();

    let turn = (360.0 / step_deg).round() as u32;
    let mut alignment: Vec<Vec<Option<u32>>> = vec![vec![None; iface_count]; n];
    for l in &initial_links {
        alignment[l.a.node][l.a.iface] = align[l.a.node][l.b.node];
        alignment[l.b.node][l.b.iface] = align[l.b.node][l.a.node];
    }
    let mut rng = stream(seed, STREAM_ANGLES);
    for d in 0..n {
        for i in 0..iface_count {
            if alignment[d][i].is_some() {
                continue;
            }
            // never face a neighbor interface that already points back
            let forbidden: BTreeSet<u32> = (0..n)
                .filter(|&d2| delta[d][d2] == 1)
                .filter(|&d2| alignment[d2].iter().any(|a| *a == align[d2][d]))
                .filter_map(|d2| align[d][d2])
                .collect();
            let allowed: Vec<u32> = (0..turn).filter(|a| !forbidden.contains(a)).collect();
            alignment[d][i] = Some(*allowed.choose(&mut rng).expect("a full turn has free angles"));
        }
    }
    let initial_alignment = alignment.into_iter().map(|r| r.into_iter().map(|a| a.expect("assigned")).collect()).collect();
    Ok(States { initial_links, final_links, initial_alignment, demand: demand_final })
}

/// Full scenario from a skeleton.
pub fn build_scenario(sk: &Skeleton, opts: &GenOptions) -> Result<Scenario> {
    let (delta, align, rate) = build_links(&sk.positions, sk.range_m, opts.step_deg, &opts.link_budget)?;
    let states = gen_states(sk, &delta, &align, &rate, opts.iface_count, opts.step_deg, opts.seed)?;
    let s = Scenario {
        format: SCENARIO_FORMAT.into(),
        node_count: sk.positions.len(),
        iface_count: opts.iface_count,
        slot_count: opts.slot_count,
        rotation_step_deg: opts.step_deg,
        slot_duration_s: opts.slot_duration_s,
        positions: sk.positions.clone(),
        core_nodes: sk.core_nodes.clone(),
        adjacency: delta,
        align_angles: align,
        link_rate: rate,
        demand: states.demand,
        initial_alignment: states.initial_alignment,
        initial_links: states.initial_links,
        final_links: states.final_links,
        link_budget: Some(opts.link_budget),
    };
    let v = validate_scenario(&s);
    if v.is_empty() {
        Ok(s)
    } else {
        Err(SbraError::InvalidScenario(v))
    }
}

/// One of the canonical topologies with `iface_count` interfaces and `slot_count` slots.
pub fn generate(topology: Topology, iface_count: usize, slot_count: usize, seed: u64) -> Result<Scenario> {
    build_scenario(&topology.skeleton(seed)?, &GenOptions::new(iface_count, slot_count, seed))
}

/// Small random instance with arbitrary (not necessarily connected) initial
/// and final matchings, sized for exhaustive search. Node 0 is the core.
pub fn gen_tiny(node_count: usize, iface_count: usize, slot_count: usize, seed: u64) -> Result<Scenario> {
    if !(2..=8).contains(&node_count) || iface_count == 0 || slot_count == 0 {
        return Err(SbraError::InvalidParams("gen_tiny needs 2..=8 nodes, >= 1 interface and >= 1 slot".into()));
    }
    let mut rng = stream(seed, STREAM_LAYOUT);
    let lb = LinkBudgetParams::default();
    let step = DEFAULT_STEP_DEG;
    let turn = 36;
    let (positions, delta, align, rate) = loop {
        let mut pts: Vec<Position> = Vec::new();
        while pts.len() < node_count {
            let p = [rng.random_range(0.0..220.0), rng.random_range(0.0..220.0)];
            if pts.iter().all(|q| geometry::distance(*q, p) >= 40.0) {
                pts.push(p);
            }
        }
        let (delta, align, rate) = build_links(&pts, 400.0, step, &lb)?;
        if delta.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, &x)| i == j || x == 1)) {
            break (pts, delta, align, rate);
        }
    };
    let mut pairs: Vec<(usize, usize)> =
        (0..node_count).flat_map(|a| ((a + 1)..node_count).map(move |b| (a, b))).collect();
    let matching = |rng: &mut ChaCha8Rng, pairs: &mut Vec<(usize, usize)>, p: f64| {
        pairs.shuffle(rng);
        let mut used: BTreeSet<InterfaceId> = BTreeSet::new();
        let mut out = Vec::new();
        for &(a, b) in pairs.iter() {
            if !rng.random_bool(p) {
                continue;
            }
            let fa: Vec<usize> = (0..iface_count).filter(|i| !used.contains(&InterfaceId::new(a, *i))).collect();
            let fb: Vec<usize> = (0..iface_count).filter(|i| !used.contains(&InterfaceId::new(b, *i))).collect();
            if let (Some(&ia), Some(&ib)) = (fa.choose(rng), fb.choose(rng)) {
                used.insert(InterfaceId::new(a, ia));
                used.insert(InterfaceId::new(b, ib));
                out.push(Link::from_parts(a, ia, b, ib));
            }
        }
        out.sort();
        out
    };
    let initial_links = matching(&mut rng, &mut pairs, 0.7);
    let mut alignment: Vec<Vec<Option<u32>>> = vec![vec![None; iface_count]; node_count];
    for l in &initial_links {
        alignment[l.a.node][l.a.iface] = align[l.a.node][l.b.node];
        alignment[l.b.node][l.b.iface] = align[l.b.node][l.a.node];
    }
    for d in 0..node_count {
        for i in 0..iface_count {
            if alignment[d][i].is_some() {
                continue;
            }
            let forbidden: BTreeSet<u32> = (0..node_count)
                .filter(|&d2| d2 != d && alignment[d2].iter().any(|a| *a == align[d2][d]))
                .filter_map(|d2| align[d][d2])
                .collect();
            let allowed: Vec<u32> = (0..turn).filter(|a| !forbidden.contains(a)).collect();
            alignment[d][i] = Some(*allowed.choose(&mut rng).expect("free angle"));
        }
    }
    let initial_alignment: Vec<Vec<u32>> =
        alignment.into_iter().map(|r| r.into_iter().map(|a| a.expect("assigned")).collect()).collect();
    let mut s = Scenario {
        format: SCENARIO_FORMAT.into(),
        node_count,
        iface_count,
        slot_count,
        rotation_step_deg: step,
        slot_duration_s: DEFAULT_SLOT_S,
        positions,
        core_nodes: vec![0],
        adjacency: delta,
        align_angles: align,
        link_rate: rate,
        demand: (0..node_count).map(|d| if d == 0 { 0.0 } else { 500.0 * rng.random_range(0..=6) as f64 }).collect(),
        initial_alignment,
        initial_links,
        final_links: Vec::new(),
        link_budget: Some(lb),
    };
    let budget = slot_count.saturating_sub(1) as u32;
    s.final_links = matching(&mut rng, &mut pairs, 0.7)
        .into_iter()
        .filter(|l| kinematics::min_slots_to_form(l, &s.initial_alignment, &s).is_ok_and(|f| f <= budget))
        .collect();
    let v = validate_scenario(&s);
    if v.is_empty() {
        Ok(s)
    } else {
        Err(SbraError::InvalidScenario(v))
    }
}

fn polar(r: f64, deg: f64) -> Position {
    let t = deg.to_radians();
    [r * t.cos(), r * t.sin()]
}

fn fixture(
    positions: Vec<Position>,
    delta: Vec<Vec<u8>>,
    iface_count: usize,
    slot_count: usize,
    demand: Vec<f64>,
    initial_alignment: Vec<Vec<u32>>,
    initial_links: Vec<Link>,
    final_links: Vec<Link>,
) -> Scenario {
    let n = positions.len();
    let lb = LinkBudgetParams::default();
    let align = geometry::build_align_angles(&positions, &delta, DEFAULT_STEP_DEG).expect("distinct positions");
    let mut rate = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if delta[i][j] == 1 {
                rate[i][j] = linkbudget::link_rate(geometry::distance(positions[i], positions[j]), &lb)
                    .expect("positive distance")
                    .expect("usable range");
            }
        }
    }
    Scenario {
        format: SCENARIO_FORMAT.into(),
        node_count: n,
        iface_count,
        slot_count,
        rotation_step_deg: DEFAULT_STEP_DEG,
        slot_duration_s: DEFAULT_SLOT_S,
        positions,
        core_nodes: vec![0],
        adjacency: delta,
        align_angles: align,
        link_rate: rate,
        demand,
        initial_alignment,
        initial_links,
        final_links,
        link_budget: Some(lb),
    }
}

/// The five-node pre-processing example, with nodes renumbered from 0:
/// node 0 is the hub (and core) linked to node 2 initially and to node 4
/// finally; nodes 1 and 3 lie 80° either side of the hub's initial
/// bearing, node 3 on the clockwise path toward node 4.
pub fn fig2() -> Scenario {
    let positions = vec![
        [0.0, 0.0],
        polar(150.0, 10.0),
        polar(150.0, 90.0),
        polar(150.0, 170.0),
        polar(150.0, 260.0),
    ];
    let star = |i: usize, j: usize| u8::from(i != j && (i == 0 || j == 0));
    let delta = (0..5).map(|i| (0..5).map(|j| star(i, j)).collect()).collect();
    fixture(
        positions,
        delta,
        1,
        20,
        vec![0.0, 500.0, 1000.0, 500.0, 1000.0],
        // hub faces node 2; node 1 is 3 slots, node 3 is 6 slots (cw) and
        // node 4 is 5 slots (ccw) away from facing the hub
        vec![vec![9], vec![16], vec![27], vec![29], vec![13]],
        vec![Link::from_parts(0, 0, 2, 0)],
        vec![Link::from_parts(0, 0, 4, 0)],
    )
}

/// Two nodes 150 m apart on the x-axis with one interface each and no links.
pub fn two_node_fixture() -> Scenario {
    fixture(
        vec![[0.0, 0.0], [150.0, 0.0]],
        vec![vec![0, 1], vec![1, 0]],
        1,
        10,
        vec![0.0, 1000.0],
        vec![vec![0], vec![0]],
        vec![],
        vec![],
    )
}

/// Three mutually adjacent nodes with two interfaces each, every interface
/// pointing away from all neighbors, and no links.
pub fn triangle_fixture() -> Scenario {
    let positions = vec![[0.0, 0.0], [150.0, 0.0], [75.0, 130.0]];
    let delta = (0..3).map(|i| (0..3).map(|j| u8::from(i != j)).collect()).collect();
    fixture(positions, delta, 2, 10, vec![0.0, 1000.0, 1000.0], vec![vec![20, 21], vec![30, 31], vec![1, 2]], vec![], vec![])
}
