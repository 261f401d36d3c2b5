//! Exhaustive timed state-space search, independent of the pattern theory.
//!
//! States hold every plane's position and clock, the traveler counts at I and G, and each
//! traveler left at an intermediate vertex with the time it became available there. One layer
//! adds one leg flown by one plane. Labels sharing all discrete data are Pareto-pruned on
//! (cost, clocks, ready times), and any label weakly dominated by the running front is dropped.
//! Both prunings are safe: clocks and cost never decrease along a plan.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{eps, is_unreachable, GeneralInstance, Instance, Location};
use crate::schedule::{Leg, Schedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle scale exceeded: {0}")]
    ScaleExceeded(String),
    #[error("the oracle runs on instances without overrides")]
    Overrides,
}

/// Directed flight graph with landing costs; vertex ids below 255.
#[derive(Debug, Clone)]
pub struct FlightGraph {
    cost: Vec<f64>,
    out: Vec<Vec<(usize, f64)>>,
    locations: Vec<Location>,
    initial: usize,
    goal: usize,
}

impl FlightGraph {
    /// Clique graph: cities keep their indices, then I and G. Central arcs exist only where the
    /// matrix is present and the entry is not the unreachable sentinel.
    pub fn from_instance(instance: &Instance) -> Result<FlightGraph, OracleError> {
        if instance.has_overrides() {
            return Err(OracleError::Overrides);
        }
        let n = instance.n();
        let (initial, goal) = (n, n + 1);
        let mut out = vec![Vec::new(); n + 2];
        for i in 0..n {
            out[initial].push((i, instance.d()[i]));
            out[i].push((initial, instance.d()[i]));
            out[goal].push((i, instance.dbar()[i]));
            out[i].push((goal, instance.dbar()[i]));
            if let Some(m) = instance.central() {
                for (j, &hop) in m[i].iter().enumerate() {
                    if i != j && !is_unreachable(hop) {
                        out[i].push((j, hop));
                    }
                }
            }
        }
        let mut cost = instance.c().to_vec();
        cost.extend([0.0, 0.0]);
        let mut locations: Vec<Location> = (0..n).map(Location::City).collect();
        locations.extend([Location::Initial, Location::Goal]);
        Ok(FlightGraph { cost, out, locations, initial, goal })
    }

    pub fn from_general(g: &GeneralInstance) -> FlightGraph {
        let n = g.vertices().len();
        let mut out = vec![Vec::new(); n];
        for a in g.arcs() {
            out[a.from].push((a.to, a.duration));
        }
        FlightGraph {
            cost: g.vertices().iter().map(|v| v.cost).collect(),
            out,
            locations: (0..n).map(|v| g.location(v)).collect(),
            initial: g.initial(),
            goal: g.goal(),
        }
    }

    pub fn len(&self) -> usize {
        self.cost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct OracleOptions {
    /// Total legs over all planes; defaults to 2(2t - p) + 2 on cliques, times |V| - 1 on graphs.
    pub legs: Option<usize>,
    /// Skips the scale guard.
    pub unchecked: bool,
}

#[derive(Debug, Clone)]
pub struct OraclePoint {
    pub cost: f64,
    pub makespan: f64,
    pub witness: Schedule,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Nondominated points, increasing cost.
    pub points: Vec<OraclePoint>,
    pub legs: usize,
    /// Labels kept over the whole search.
    pub labels: usize,
    /// True when the frontier emptied before the leg budget ran out.
    pub exhausted: bool,
}

impl OracleResult {
    pub fn values(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.cost, p.makespan)).collect()
    }
}

pub fn default_legs(t: usize, p: usize) -> usize {
    2 * (2 * t - p) + 2
}

fn guard(what: &str, value: usize, limit: usize) -> Result<(), OracleError> {
    if value > limit {
        return Err(OracleError::ScaleExceeded(format!("{what} = {value} > {limit}")));
    }
    Ok(())
}

/// Pareto front of a clique instance by exhaustive search. Guarded to n, t <= 4 and p <= 3.
pub fn oracle_instance(instance: &Instance, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    if !opts.unchecked {
        guard("n", instance.n(), 4)?;
        guard("t", instance.t(), 4)?;
        guard("p", instance.p(), 3)?;
    }
    let graph = FlightGraph::from_instance(instance)?;
    Ok(search(&graph, instance.t(), instance.p(), opts))
}

/// Pareto front of a general instance. Guarded to 8 vertices, t <= 4 and p <= 3.
pub fn oracle_general(g: &GeneralInstance, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    if !opts.unchecked {
        guard("vertices", g.vertices().len(), 8)?;
        guard("t", g.t(), 4)?;
        guard("p", g.p(), 3)?;
    }
    if g.vertices().len() >= 255 {
        return Err(OracleError::ScaleExceeded("vertex ids must fit in a byte".into()));
    }
    let mut opts = opts.clone();
    let hops = g.vertices().len().saturating_sub(1).max(1);
    opts.legs.get_or_insert(default_legs(g.t(), g.p()) * hops);
    Ok(search(&FlightGraph::from_general(g), g.t(), g.p(), &opts))
}

#[derive(Debug, Clone, Copy)]
enum Pickup {
    Empty,
    Initial,
    /// Traveler waiting at the departure vertex since the given time.
    Transit(f64),
}

/// One leg in the parent arena.
#[derive(Debug, Clone, Copy)]
struct Node {
    parent: usize,
    from: u8,
    clock: f64,
    to: u8,
    pickup: Pickup,
    start: f64,
    end: f64,
}

#[derive(Debug, Clone)]
struct State {
    /// Sorted by (position, clock).
    planes: Vec<(u8, f64)>,
    at_initial: usize,
    at_goal: usize,
    /// Sorted by (vertex, ready time).
    transit: Vec<(u8, f64)>,
    cost: f64,
    node: usize,
}

impl State {
    fn makespan(&self) -> f64 {
        self.planes.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    fn key(&self) -> Vec<u8> {
        let mut k: Vec<u8> = self.planes.iter().map(|p| p.0).collect();
        k.push(self.at_initial as u8);
        k.push(self.at_goal as u8);
        k.push(u8::MAX);
        k.extend(self.transit.iter().map(|x| x.0));
        k
    }
}

struct Label {
    cost: f64,
    clocks: Vec<f64>,
    readies: Vec<f64>,
}

impl Label {
    fn of(s: &State) -> Label {
        Label {
            cost: s.cost,
            clocks: s.planes.iter().map(|p| p.1).collect(),
            readies: s.transit.iter().map(|x| x.1).collect(),
        }
    }

    /// Componentwise comparison is exact: within one key, equal positions carry sorted clocks.
    fn dominates(&self, other: &Label, e: f64) -> bool {
        self.cost <= other.cost + e
            && self.clocks.iter().zip(&other.clocks).all(|(a, b)| *a <= b + e)
            && self.readies.iter().zip(&other.readies).all(|(a, b)| *a <= b + e)
    }
}

struct Front {
    points: Vec<(f64, f64, usize)>,
    e: f64,
}

impl Front {
    fn dominates(&self, cost: f64, makespan: f64) -> bool {
        self.points.iter().any(|&(c, m, _)| c <= cost + self.e && m <= makespan + self.e)
    }

    fn add(&mut self, cost: f64, makespan: f64, node: usize) {
        if self.dominates(cost, makespan) {
            return;
        }
        let e = self.e;
        self.points.retain(|&(c, m, _)| !(cost <= c + e && makespan <= m + e));
        self.points.push((cost, makespan, node));
    }
}

fn sort_pairs(v: &mut [(u8, f64)]) {
    v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
}

fn search(g: &FlightGraph, t: usize, p: usize, opts: &OracleOptions) -> OracleResult {
    let e = eps();
    let legs = opts.legs.unwrap_or_else(|| default_legs(t, p));
    let (vi, vg) = (g.initial as u8, g.goal as u8);
    let mut arena: Vec<Node> = Vec::new();
    let mut archive: HashMap<Vec<u8>, Vec<Label>> = HashMap::new();
    let mut front = Front { points: Vec::new(), e };
    let mut labels = 0;

    let mut insert = |s: &State, archive: &mut HashMap<Vec<u8>, Vec<Label>>| -> bool {
        let lab = Label::of(s);
        let list = archive.entry(s.key()).or_default();
        if list.iter().any(|o| o.dominates(&lab, e)) {
            return false;
        }
        list.retain(|o| !lab.dominates(o, e));
        list.push(lab);
        labels += 1;
        true
    };

    let start = State {
        planes: vec![(vi, 0.0); p],
        at_initial: t,
        at_goal: 0,
        transit: Vec::new(),
        cost: 0.0,
        node: usize::MAX,
    };
    if t == 0 {
        front.add(0.0, 0.0, usize::MAX);
    }
    insert(&start, &mut archive);
    let mut layer = vec![start];
    let mut exhausted = false;
    for _ in 0..legs {
        let mut next = Vec::new();
        for s in &layer {
            if front.dominates(s.cost, s.makespan()) {
                continue;
            }
            for pi in 0..p {
                if pi > 0 && s.planes[pi].0 == s.planes[pi - 1].0 && s.planes[pi].1 == s.planes[pi - 1].1 {
                    continue;
                }
                let (pos, clock) = s.planes[pi];
                let mut pickups = vec![(Pickup::Empty, usize::MAX)];
                if pos == vi && s.at_initial > 0 {
                    pickups.push((Pickup::Initial, usize::MAX));
                }
                if pos != vi && pos != vg {
                    for (ti, &(loc, ready)) in s.transit.iter().enumerate() {
                        // equal ready times at one vertex are interchangeable
                        let repeat = ti > 0 && s.transit[ti - 1] == (loc, ready);
                        if loc == pos && !repeat {
                            pickups.push((Pickup::Transit(ready), ti));
                        }
                    }
                }
                for &(dst, duration) in &g.out[pos as usize] {
                    let dst8 = dst as u8;
                    for &(pickup, ti) in &pickups {
                        let mut at_initial = s.at_initial;
                        let mut at_goal = s.at_goal;
                        let mut transit = s.transit.clone();
                        let start_time = match pickup {
                            Pickup::Empty => clock,
                            Pickup::Initial => {
                                at_initial -= 1;
                                clock
                            }
                            Pickup::Transit(ready) => {
                                transit.remove(ti);
                                clock.max(ready)
                            }
                        };
                        let end = start_time + duration;
                        if !matches!(pickup, Pickup::Empty) {
                            if dst8 == vg {
                                at_goal += 1;
                            } else if dst8 == vi {
                                at_initial += 1;
                            } else {
                                transit.push((dst8, end));
                                sort_pairs(&mut transit);
                            }
                        }
                        let mut planes = s.planes.clone();
                        planes[pi] = (dst8, end);
                        sort_pairs(&mut planes);
                        arena.push(Node { parent: s.node, from: pos, clock, to: dst8, pickup, start: start_time, end });
                        let node = arena.len() - 1;
                        let child = State { planes, at_initial, at_goal, transit, cost: s.cost + g.cost[dst], node };
                        let makespan = child.makespan();
                        if at_goal == t {
                            front.add(child.cost, makespan, node);
                            continue;
                        }
                        if front.dominates(child.cost, makespan) {
                            continue;
                        }
                        if insert(&child, &mut archive) {
                            next.push(child);
                        }
                    }
                }
            }
        }
        layer = next;
        if layer.is_empty() {
            exhausted = true;
            break;
        }
    }
    let mut points: Vec<OraclePoint> = front
        .points
        .iter()
        .map(|&(cost, makespan, node)| OraclePoint { cost, makespan, witness: replay(g, t, p, &arena, node) })
        .collect();
    points.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.makespan.total_cmp(&b.makespan)));
    OracleResult { points, legs, labels, exhausted }
}

/// Rebuilds a schedule from the leg chain ending at `node`, naming planes and travelers.
fn replay(g: &FlightGraph, t: usize, p: usize, arena: &[Node], node: usize) -> Schedule {
    let mut chain = Vec::new();
    let mut cur = node;
    while cur != usize::MAX {
        chain.push(arena[cur]);
        cur = arena[cur].parent;
    }
    chain.reverse();
    let mut planes: Vec<(u8, f64)> = vec![(g.initial as u8, 0.0); p];
    let mut legs: Vec<Vec<Leg>> = vec![Vec::new(); p];
    let mut waiting_initial: Vec<usize> = (0..t).rev().collect();
    let mut transit: Vec<(u8, f64, usize)> = Vec::new();
    let mut handoffs = vec![None; t];
    for n in chain {
        let k = planes
            .iter()
            .position(|&(pos, clock)| pos == n.from && clock == n.clock)
            .expect("replayed plane exists");
        let passenger = match n.pickup {
            Pickup::Empty => None,
            Pickup::Initial => waiting_initial.pop(),
            Pickup::Transit(ready) => {
                let ti = transit
                    .iter()
                    .position(|&(loc, r, _)| loc == n.from && r == ready)
                    .expect("replayed traveler exists");
                Some(transit.remove(ti).2)
            }
        };
        if let Some(id) = passenger {
            let to = n.to as usize;
            if to == g.initial {
                waiting_initial.push(id);
            } else if to != g.goal {
                transit.push((n.to, n.end, id));
                handoffs[id].get_or_insert(n.end);
            }
        }
        legs[k].push(Leg {
            from: g.locations[n.from as usize],
            to: g.locations[n.to as usize],
            passenger,
            duration: n.end - n.start,
            start: n.start,
            end: n.end,
            cost: g.cost[n.to as usize],
        });
        planes[k] = (n.to, n.end);
    }
    Schedule { planes: legs, handoffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::validate_schedule;

    #[test]
    fn trivial_instance() {
        let inst = Instance::new(vec![1.0], vec![1.0], vec![1.0], 1, 1).unwrap();
        let r = oracle_instance(&inst, &OracleOptions::default()).unwrap();
        assert_eq!(r.values(), vec![(1.0, 2.0)]);
        assert!(validate_schedule(&r.points[0].witness, &inst).is_valid());
    }

    #[test]
    fn three_city_front() {
        let inst = Instance::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0], 3, 2).unwrap();
        let r = oracle_instance(&inst, &OracleOptions::default()).unwrap();
        assert_eq!(r.values(), vec![(4.0, 12.0), (6.0, 10.0), (8.0, 8.0), (10.0, 6.0), (12.0, 4.0)]);
        for pt in &r.points {
            let rep = validate_schedule(&pt.witness, &inst);
            assert!(rep.is_valid(), "{:?}", rep.violations);
            assert!((rep.cost - pt.cost).abs() < 1e-9 && (rep.makespan - pt.makespan).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_guard() {
        let inst = Instance::new(vec![1.0; 5], vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![1.0; 5], 2, 1).unwrap();
        let err = oracle_instance(&inst, &OracleOptions::default()).unwrap_err();
        assert!(err.to_string().contains("oracle scale exceeded"));
    }

    #[test]
    fn general_graph_path() {
        use crate::model::{RawEdge, RawGeneralInstance, Vertex};
        let v = |id: &str, cost| Vertex { id: id.into(), cost };
        let e = |a: &str, b: &str, duration| RawEdge { from: a.into(), to: b.into(), duration };
        let g = GeneralInstance::from_raw(RawGeneralInstance {
            vertices: vec![v("I", 0.0), v("G", 0.0), v("X", 1.0), v("Y", 5.0)],
            edges: vec![e("I", "X", 2.0), e("X", "G", 2.0), e("I", "Y", 1.0), e("Y", "G", 1.0)],
            initial: "I".into(),
            goal: "G".into(),
            t: 1,
            p: 1,
            directed: false,
        })
        .unwrap();
        let r = oracle_general(&g, &OracleOptions::default()).unwrap();
        assert_eq!(r.values(), vec![(1.0, 4.0), (5.0, 2.0)]);
        assert_eq!(r.points[0].witness.planes[0][0].to, Location::City(2));
    }
}
