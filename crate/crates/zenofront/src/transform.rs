//! Crossing-pair detection with virtual bridge cities, and the general-graph reduction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    eps, is_unreachable, Bridge, CityOverride, GeneralInstance, Instance, Location, ModelError, PatternKind,
    PatternSpec, RawInstance, UNREACHABLE,
};
use crate::schedule::{Leg, Schedule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("the central matrix is required to detect crossing pairs")]
    MissingCentral,
    #[error("instance already carries overrides")]
    HasOverrides,
    #[error("no I -> G path within {0} intermediate vertices")]
    NoPath(usize),
    #[error("broken path: no arc {0} -> {1}")]
    BrokenPath(usize, usize),
    #[error("unknown reduced city {0}")]
    UnknownCity(usize),
    #[error("reduced instance is invalid: {0}")]
    Model(#[from] ModelError),
}

/// Ordered pair with d_i < d_j and d̄_j < d̄_i: a B at i cannot pair with a B̄ at j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BabPair {
    pub i: usize,
    pub j: usize,
}

/// All crossing pairs among plain cities, in lexicographic (i, j) order.
pub fn detect_bab(instance: &Instance) -> Result<Vec<BabPair>, TransformError> {
    if instance.central().is_none() {
        return Err(TransformError::MissingCentral);
    }
    let (d, db) = (instance.d(), instance.dbar());
    let e = eps();
    let plain = |x: usize| instance.override_for(x).is_none();
    let n = instance.n();
    Ok((0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| plain(i) && plain(j) && d[i] + e < d[j] && db[j] + e < db[i])
        .map(|(i, j)| BabPair { i, j })
        .collect())
}

/// Appends one bridged virtual city per crossing pair with a flyable hop.
///
/// The virtual city k of pair (i, j) drops B passengers at i and collects B̄ passengers at j.
/// Its Ā relays a dropped passenger G -> i -> j -> I; its A flies I -> j -> i -> G, leaving its
/// own passenger at j and taking the one waiting at i. Costs: c_i for B, c_j for B̄, c_i + c_j
/// for A and Ā. The matrix gains sentinel rows, so no central flight touches a virtual city.
pub fn transform_bab(instance: &Instance) -> Result<Instance, TransformError> {
    let pairs = detect_bab(instance)?;
    let mut raw = instance.to_raw();
    let (d, db, c) = (instance.d(), instance.dbar(), instance.c());
    let mut added = 0;
    for BabPair { i, j } in pairs {
        let hop = instance.hop(i, j);
        if is_unreachable(hop) {
            continue;
        }
        let city = raw.n;
        let both = c[i] + c[j];
        raw.overrides.push(CityOverride {
            city,
            a: PatternSpec { first: d[j], last: db[i], cost: both },
            abar: PatternSpec { first: db[i], last: d[j], cost: both },
            b: PatternSpec { first: d[i], last: d[i], cost: c[i] },
            bbar: PatternSpec { first: db[j], last: db[j], cost: c[j] },
            bridge: Some(Bridge { from: i, to: j, hop }),
        });
        raw.n += 1;
        raw.d.push(d[i]);
        raw.dbar.push(db[j]);
        raw.c.push(both);
        added += 1;
    }
    if added == 0 {
        return Ok(instance.clone());
    }
    pad_central(&mut raw);
    Ok(Instance::try_from(raw)?)
}

fn pad_central(raw: &mut RawInstance) {
    let n = raw.n;
    let m = raw.central.get_or_insert_with(Vec::new);
    for row in m.iter_mut() {
        row.resize(n, UNREACHABLE);
    }
    while m.len() < n {
        let k = m.len();
        m.push((0..n).map(|x| if x == k { 0.0 } else { UNREACHABLE }).collect());
    }
}

/// A simple path with its duration φ and landing cost ω (first vertex excluded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub vertices: Vec<usize>,
    pub duration: f64,
    pub cost: f64,
}

pub fn path_metrics(path: &[usize], g: &GeneralInstance) -> Result<(f64, f64), TransformError> {
    let mut duration = 0.0;
    let mut cost = 0.0;
    for w in path.windows(2) {
        duration += g.arc(w[0], w[1]).ok_or(TransformError::BrokenPath(w[0], w[1]))?;
        cost += g.vertices()[w[1]].cost;
    }
    Ok((duration, cost))
}

/// Every simple I -> G path with at most `max_intermediate` vertices strictly between I and G,
/// in depth-first order over arcs.
pub fn enumerate_paths(g: &GeneralInstance, max_intermediate: usize) -> Vec<PathRecord> {
    simple_paths(g, g.initial(), g.goal(), max_intermediate)
}

fn out_arcs(g: &GeneralInstance, backward: bool) -> Vec<Vec<(usize, f64)>> {
    let mut out: Vec<Vec<(usize, f64)>> = vec![Vec::new(); g.vertices().len()];
    for a in g.arcs() {
        let (x, y) = if backward { (a.to, a.from) } else { (a.from, a.to) };
        // parallel arcs: the shortest one dominates
        match out[x].iter_mut().find(|(to, _)| *to == y) {
            Some(slot) => slot.1 = slot.1.min(a.duration),
            None => out[x].push((y, a.duration)),
        }
    }
    out
}

/// Simple paths `from` -> `to` with at most `cap` vertices strictly between.
fn simple_paths(g: &GeneralInstance, from: usize, to: usize, cap: usize) -> Vec<PathRecord> {
    let adj = out_arcs(g, false);
    let mut paths = Vec::new();
    let mut stack = vec![from];
    let mut on = vec![false; g.vertices().len()];
    on[from] = true;
    #[allow(clippy::too_many_arguments)]
    fn rec(g: &GeneralInstance, adj: &[Vec<(usize, f64)>], to: usize, cap: usize, stack: &mut Vec<usize>, on: &mut [bool], acc: (f64, f64), out: &mut Vec<PathRecord>) {
        let v = *stack.last().expect("path is never empty");
        for &(w, dur) in &adj[v] {
            if on[w] {
                continue;
            }
            let next = (acc.0 + dur, acc.1 + g.vertices()[w].cost);
            stack.push(w);
            if w == to {
                out.push(PathRecord { vertices: stack.clone(), duration: next.0, cost: next.1 });
            } else if stack.len() - 1 <= cap {
                on[w] = true;
                rec(g, adj, to, cap, stack, on, next, out);
                on[w] = false;
            }
            stack.pop();
        }
    }
    rec(g, &adj, to, cap, &mut stack, &mut on, (0.0, 0.0), &mut paths);
    paths
}

/// Pareto filter on (φ, ω). Paths with identical metrics are all kept; input order is preserved.
pub fn nondominated_paths(paths: &[PathRecord]) -> Vec<PathRecord> {
    let e = eps();
    let strictly_better = |q: &PathRecord, p: &PathRecord| {
        q.duration <= p.duration + e
            && q.cost <= p.cost + e
            && (q.duration < p.duration - e || q.cost < p.cost - e)
    };
    paths.iter().filter(|p| !paths.iter().any(|q| strictly_better(q, p))).cloned().collect()
}

/// Simple paths between `anchor` and every other vertex, avoiding `avoid`, with at most `cap`
/// vertices besides the anchor. Outbound paths start at the anchor; inbound ones end there.
fn anchored_paths(g: &GeneralInstance, anchor: usize, avoid: usize, cap: usize, inbound: bool) -> Vec<Vec<usize>> {
    let adj = out_arcs(g, inbound);
    let mut out = Vec::new();
    let mut stack = vec![anchor];
    let mut on = vec![false; g.vertices().len()];
    on[anchor] = true;
    on[avoid] = true;
    fn rec(adj: &[Vec<(usize, f64)>], cap: usize, stack: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if stack.len() > cap {
            return;
        }
        let v = *stack.last().expect("nonempty");
        for &(w, _) in &adj[v] {
            if on[w] {
                continue;
            }
            on[w] = true;
            stack.push(w);
            out.push(stack.clone());
            rec(adj, cap, stack, on, out);
            stack.pop();
            on[w] = false;
        }
    }
    rec(&adj, cap, &mut stack, &mut on, &mut out);
    if inbound {
        for p in &mut out {
            p.reverse();
        }
    }
    out
}

/// How a general instance is turned into a clique instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// One city per split position of every nondominated I -> G path.
    #[default]
    Splits,
    /// Cities from nondominated per-pattern routes plus bridges between vertices; the reduced
    /// front equals the graph front whenever optimal plans fit the path cap.
    Routes,
}

/// Hop of a bridge city between two other reduced cities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopRoute {
    /// Clique city whose B drop is taken over.
    pub from: usize,
    /// Clique city where the bridged A leaves its passenger.
    pub to: usize,
    /// Vertices `to` -> `from`; a bridged Ā flies it reversed.
    pub path: Vec<usize>,
}

/// Routes of one reduced city, per pattern as (leg to the city, leg from the city).
///
/// A pattern without a route is unflyable at this city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedCity {
    /// Original vertex where the city's legs meet; the `from` vertex for bridges.
    pub vertex: usize,
    pub a: Option<[Vec<usize>; 2]>,
    pub abar: Option<[Vec<usize>; 2]>,
    pub b: Option<[Vec<usize>; 2]>,
    pub bbar: Option<[Vec<usize>; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop: Option<HopRoute>,
}

impl ReducedCity {
    fn new(vertex: usize) -> ReducedCity {
        ReducedCity { vertex, a: None, abar: None, b: None, bbar: None, hop: None }
    }

    pub fn route(&self, kind: PatternKind) -> Option<&[Vec<usize>; 2]> {
        match kind {
            PatternKind::A => self.a.as_ref(),
            PatternKind::Abar => self.abar.as_ref(),
            PatternKind::B => self.b.as_ref(),
            PatternKind::Bbar => self.bbar.as_ref(),
        }
    }
}

/// Inverse map of a reduction: clique city index -> reduced city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMapping {
    pub cities: Vec<ReducedCity>,
    pub vertex_ids: Vec<String>,
}

const UNFLYABLE: PatternSpec = PatternSpec { first: UNREACHABLE, last: UNREACHABLE, cost: 0.0 };

fn route_spec(route: Option<&[Vec<usize>; 2]>, g: &GeneralInstance) -> Result<PatternSpec, TransformError> {
    let Some([to, from]) = route else { return Ok(UNFLYABLE) };
    let (first, c1) = path_metrics(to, g)?;
    let (last, c2) = path_metrics(from, g)?;
    Ok(PatternSpec { first, last, cost: c1 + c2 })
}

fn city_specs(c: &ReducedCity, g: &GeneralInstance) -> Result<[PatternSpec; 4], TransformError> {
    let mut out = [UNFLYABLE; 4];
    for (slot, kind) in out.iter_mut().zip(PatternKind::ALL) {
        *slot = route_spec(c.route(kind), g)?;
    }
    if let Some(hop) = &c.hop {
        // the hop duration lives in the bridge, its landings in the A and Ā costs
        let [a, abar, ..] = &mut out;
        a.cost += path_metrics(&hop.path, g)?.1;
        if !is_unreachable(abar.first) {
            abar.cost += path_metrics(&reversed(&hop.path), g)?.1;
        }
    }
    Ok(out)
}

/// Comparable metrics of a city: the eight leg durations, then A, Ā and pair costs.
fn city_key(specs: &[PatternSpec; 4]) -> [f64; 11] {
    let [a, abar, b, bbar] = specs;
    let used = |s: &PatternSpec| if is_unreachable(s.first) { f64::INFINITY } else { s.cost };
    [
        a.first,
        a.last,
        abar.first,
        abar.last,
        b.first,
        b.last,
        bbar.first,
        bbar.last,
        used(a),
        used(abar),
        if is_unreachable(b.first) || is_unreachable(bbar.first) { f64::INFINITY } else { b.cost + bbar.cost },
    ]
}

fn strictly_dominates(x: &[f64; 11], y: &[f64; 11], e: f64) -> bool {
    x.iter().zip(y).all(|(a, b)| *a <= b + e) && x.iter().zip(y).any(|(a, b)| *a < b - e)
}

fn reversed(p: &[usize]) -> Vec<usize> {
    p.iter().rev().copied().collect()
}

fn flyable(p: &[usize], g: &GeneralInstance) -> bool {
    p.windows(2).all(|w| g.arc(w[0], w[1]).is_some())
}

/// Pareto filter on (leg into v, leg out of v, cost) over leg pairs meeting at the same vertex.
fn leg_pairs(firsts: &[Vec<usize>], seconds: &[Vec<usize>], g: &GeneralInstance) -> Result<Vec<[Vec<usize>; 2]>, TransformError> {
    let e = eps();
    let mut cand: Vec<([Vec<usize>; 2], [f64; 3])> = Vec::new();
    for f in firsts {
        let v = *f.last().expect("nonempty");
        for s in seconds.iter().filter(|s| s[0] == v) {
            let (d1, c1) = path_metrics(f, g)?;
            let (d2, c2) = path_metrics(s, g)?;
            cand.push(([f.clone(), s.clone()], [d1, d2, c1 + c2]));
        }
    }
    Ok(cand
        .iter()
        .filter(|(r, m)| {
            let v = r[0].last();
            !cand.iter().any(|(o, om)| {
                o[0].last() == v
                    && om.iter().zip(m).all(|(a, b)| *a <= b + e)
                    && om.iter().zip(m).any(|(a, b)| *a < b - e)
            })
        })
        .map(|(r, _)| r.clone())
        .collect())
}

/// Split of path `p` at position `s`: every pattern flies the west or east part, mirrored as needed.
fn split_city(p: &[usize], s: usize, g: &GeneralInstance) -> ReducedCity {
    let (west, east) = (p[..=s].to_vec(), p[s..].to_vec());
    let (west_back, east_back) = (reversed(&west), reversed(&east));
    let mut city = ReducedCity::new(p[s]);
    city.a = Some([west.clone(), east.clone()]);
    if flyable(&west_back, g) {
        city.b = Some([west.clone(), west_back.clone()]);
        if flyable(&east_back, g) {
            city.abar = Some([east_back.clone(), west_back]);
        }
    }
    if flyable(&east_back, g) {
        city.bbar = Some([east_back, east]);
    }
    city
}

/// A direct I -> G flight as a city met at G: only A and Ā can use it.
fn direct_city(p: &[usize], g: &GeneralInstance) -> ReducedCity {
    let back = reversed(p);
    let mut city = ReducedCity::new(p[1]);
    city.a = Some([p.to_vec(), p[1..].to_vec()]);
    city.abar = flyable(&back, g).then(|| [back[..1].to_vec(), back]);
    city
}

fn route_cities(g: &GeneralInstance, cap: usize) -> Result<Vec<ReducedCity>, TransformError> {
    let (vi, vg) = (g.initial(), g.goal());
    let b_routes = leg_pairs(&anchored_paths(g, vi, vg, cap, false), &anchored_paths(g, vi, vg, cap, true), g)?;
    let bbar_routes = leg_pairs(&anchored_paths(g, vg, vi, cap, false), &anchored_paths(g, vg, vi, cap, true), g)?;
    let mut cities: Vec<ReducedCity> = Vec::new();
    for v in 0..g.vertices().len() {
        for b in b_routes.iter().filter(|r| r[0].last() == Some(&v)) {
            for bb in bbar_routes.iter().filter(|r| r[0].last() == Some(&v)) {
                let mut c = ReducedCity::new(v);
                c.a = Some([b[0].clone(), bb[1].clone()]);
                c.abar = Some([bb[0].clone(), b[1].clone()]);
                c.b = Some(b.clone());
                c.bbar = Some(bb.clone());
                cities.push(c);
            }
        }
    }
    let spliced = |c: &ReducedCity, kind: PatternKind| -> Option<Vec<usize>> {
        c.route(kind).map(|[x, y]| x.iter().chain(&y[1..]).copied().collect())
    };
    let full = |from, to| nondominated_paths(&simple_paths(g, from, to, cap));
    for path in full(vi, vg) {
        let p = &path.vertices;
        if cities.iter().any(|c| spliced(c, PatternKind::A).as_deref() == Some(&p[..])) {
            continue;
        }
        if p.len() == 2 {
            cities.push(direct_city(p, g));
            continue;
        }
        let back = reversed(p);
        let mut c = ReducedCity::new(p[1]);
        c.a = Some([p[..=1].to_vec(), p[1..].to_vec()]);
        c.abar = flyable(&back, g).then(|| [back[..back.len() - 1].to_vec(), back[back.len() - 2..].to_vec()]);
        cities.push(c);
    }
    for path in full(vg, vi) {
        let q = &path.vertices;
        if cities.iter().any(|c| spliced(c, PatternKind::Abar).as_deref() == Some(&q[..])) {
            continue;
        }
        let s = q.len() - 2;
        let fwd = reversed(q);
        let mut c = ReducedCity::new(q[s]);
        c.a = flyable(&fwd, g).then(|| [fwd[..=1].to_vec(), fwd[1..].to_vec()]);
        c.abar = Some([q[..=s].to_vec(), q[s..].to_vec()]);
        cities.push(c);
    }
    Ok(cities)
}

/// Bridge cities between every two kept pair cities at different vertices, one per
/// nondominated hop path that avoids I and G.
fn bridge_cities(cities: &[ReducedCity], g: &GeneralInstance, cap: usize) -> Result<Vec<ReducedCity>, TransformError> {
    let (vi, vg) = (g.initial(), g.goal());
    let mut out = Vec::new();
    let paired: Vec<usize> = (0..cities.len()).filter(|&k| cities[k].b.is_some() && cities[k].bbar.is_some()).collect();
    for &k in &paired {
        for &l in &paired {
            let (v, w) = (cities[k].vertex, cities[l].vertex);
            if v == w {
                continue;
            }
            let hops: Vec<PathRecord> = simple_paths(g, w, v, cap)
                .into_iter()
                .filter(|h| !h.vertices.contains(&vi) && !h.vertices.contains(&vg))
                .collect();
            for hop in nondominated_paths(&hops) {
                let back = reversed(&hop.vertices);
                let same_back = flyable(&back, g) && path_metrics(&back, g).is_ok_and(|m| (m.0 - hop.duration).abs() <= eps());
                let (ck, cl) = (&cities[k], &cities[l]);
                let mut c = ReducedCity::new(v);
                c.b = ck.b.clone();
                c.bbar = cl.bbar.clone();
                c.a = Some([cl.a.as_ref().expect("pair city")[0].clone(), ck.a.as_ref().expect("pair city")[1].clone()]);
                c.abar = same_back.then(|| [ck.abar.as_ref().expect("pair city")[0].clone(), cl.abar.as_ref().expect("pair city")[1].clone()]);
                c.hop = Some(HopRoute { from: k, to: l, path: hop.vertices.clone() });
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Reduces a general instance to a clique instance and the map needed to expand its plans.
///
/// In [`Reduction::Splits`] each split of a nondominated I -> G path with at most
/// `max_intermediate` intermediates is a city with d = φ(west), d̄ = φ(east) and
/// c = ω(west) + ω(east), the split vertex landing counted once. Patterns flying mirrored
/// parts whose costs or durations differ from that triple get per-pattern overrides.
///
/// In [`Reduction::Routes`] cities pair one nondominated B route (I -> v -> I) with one
/// nondominated B̄ route (G -> v -> G) and splice their legs into A and Ā; nondominated full
/// paths not covered that way become A or Ā cities. Cities strictly dominated on all legs and
/// costs are dropped, then every two surviving pair cities at different vertices get bridge
/// cities that hand passengers over between them.
///
/// Reduced cities never fly between each other outside bridges.
pub fn reduce_to_clique(g: &GeneralInstance, max_intermediate: usize, mode: Reduction) -> Result<(Instance, PathMapping), TransformError> {
    let cap = max_intermediate;
    let mut cities = match mode {
        Reduction::Splits => nondominated_paths(&enumerate_paths(g, cap))
            .iter()
            .flat_map(|p| match p.vertices.len() {
                2 => vec![direct_city(&p.vertices, g)],
                len => (1..len - 1).map(|s| split_city(&p.vertices, s, g)).collect(),
            })
            .collect(),
        Reduction::Routes => route_cities(g, cap)?,
    };
    if cities.is_empty() {
        return Err(TransformError::NoPath(max_intermediate));
    }
    let mut specs: Vec<[PatternSpec; 4]> = cities.iter().map(|c| city_specs(c, g)).collect::<Result<_, _>>()?;
    let e = eps();
    if mode == Reduction::Routes {
        let keys: Vec<[f64; 11]> = specs.iter().map(city_key).collect();
        let keep: Vec<usize> = (0..cities.len()).filter(|&i| !keys.iter().any(|k| strictly_dominates(k, &keys[i], e))).collect();
        cities = keep.iter().map(|&i| cities[i].clone()).collect();
        specs = keep.iter().map(|&i| specs[i]).collect();
        let bridges = bridge_cities(&cities, g, cap)?;
        for c in &bridges {
            specs.push(city_specs(c, g)?);
        }
        cities.extend(bridges);
    }

    let k = cities.len();
    let mut raw = RawInstance {
        n: k,
        t: g.t(),
        p: g.p(),
        d: Vec::with_capacity(k),
        dbar: Vec::with_capacity(k),
        c: Vec::with_capacity(k),
        central: Some((0..k).map(|i| (0..k).map(|j| if i == j { 0.0 } else { UNREACHABLE }).collect()).collect()),
        overrides: Vec::new(),
    };
    let close = |x: f64, y: f64| (x - y).abs() <= e;
    for (slot, (city, spec)) in cities.iter().zip(&specs).enumerate() {
        let [a, abar, b, bbar] = *spec;
        let (d, db, c) = (a.first, a.last, a.cost);
        let plain = city.hop.is_none()
            && !is_unreachable(a.first)
            && [abar.first, abar.last, b.first, b.last, bbar.first, bbar.last]
                .iter()
                .zip([db, d, d, d, db, db])
                .all(|(x, y)| close(*x, y))
            && [abar.cost, b.cost, bbar.cost].iter().all(|&x| close(x, c));
        // validation merges equal plain cities, which would detach bridges from their hop paths
        let merges = mode == Reduction::Routes
            && (0..slot).any(|j| {
                raw.overrides.iter().all(|o| o.city != j) && close(raw.d[j], d) && close(raw.dbar[j], db) && close(raw.c[j], c)
            });
        if plain && !merges {
            raw.d.push(d);
            raw.dbar.push(db);
            raw.c.push(c);
            continue;
        }
        let usable = spec.iter().copied().find(|s| !is_unreachable(s.first)).unwrap_or(UNFLYABLE);
        raw.d.push(usable.first);
        raw.dbar.push(usable.last);
        raw.c.push(usable.cost);
        let bridge = match &city.hop {
            Some(h) => Some(Bridge { from: h.from, to: h.to, hop: path_metrics(&h.path, g)?.0 }),
            None => None,
        };
        raw.overrides.push(CityOverride { city: slot, a, abar, b, bbar, bridge });
    }
    let instance = Instance::try_from(raw.clone())?;
    let mapping = PathMapping {
        cities: merged_sources(&instance, &raw, &cities)?,
        vertex_ids: g.vertices().iter().map(|v| v.id.clone()).collect(),
    };
    Ok((instance, mapping))
}

/// Source of every city of the validated instance; merging keeps the first of equal plain cities.
fn merged_sources(instance: &Instance, raw: &RawInstance, sources: &[ReducedCity]) -> Result<Vec<ReducedCity>, TransformError> {
    let e = eps();
    let overridden: Vec<bool> = (0..raw.n).map(|i| raw.overrides.iter().any(|o| o.city == i)).collect();
    let mut out = Vec::with_capacity(instance.n());
    let mut next = 0;
    for k in 0..instance.n() {
        let want = [instance.d()[k], instance.dbar()[k], instance.c()[k]];
        let want_override = instance.override_for(k).is_some();
        loop {
            if next >= raw.n {
                return Err(TransformError::UnknownCity(k));
            }
            let have = [raw.d[next], raw.dbar[next], raw.c[next]];
            next += 1;
            if overridden[next - 1] == want_override && have.iter().zip(&want).all(|(a, b)| (a - b).abs() <= e) {
                let mut city = sources[next - 1].clone();
                if let (Some(h), Some(b)) = (city.hop.as_mut(), instance.bridge(k)) {
                    h.from = b.from;
                    h.to = b.to;
                }
                out.push(city);
                break;
            }
        }
    }
    Ok(out)
}

/// Replaces every reduced-city pattern by its graph route, keeping all times and costs.
///
/// Legs of one route are flown back to back from the clique leg's start, so each pattern's
/// timing and landing cost carry over unchanged.
pub fn expand_plan(schedule: &Schedule, mapping: &PathMapping, g: &GeneralInstance) -> Result<Schedule, TransformError> {
    let bad = || TransformError::UnknownCity(usize::MAX);
    let city = |x: usize| mapping.cities.get(x).ok_or(TransformError::UnknownCity(x));
    let leg_of = |kind: PatternKind, x: usize, i: usize| -> Result<Vec<usize>, TransformError> {
        Ok(city(x)?.route(kind).ok_or(TransformError::UnknownCity(x))?[i].clone())
    };
    let cost_of = |p: &[usize]| path_metrics(p, g).map(|m| m.1);
    let mut planes = Vec::with_capacity(schedule.planes.len());
    for legs in &schedule.planes {
        let mut out = Vec::new();
        let mut rest = &legs[..];
        while !rest.is_empty() {
            let len = rest.iter().position(|l| !matches!(l.to, Location::City(_))).ok_or_else(bad)? + 1;
            let (pattern, tail) = rest.split_at(len);
            rest = tail;
            let ends = (pattern[0].from, pattern[len - 1].to);
            let kind = match ends {
                (Location::Initial, Location::Goal) => PatternKind::A,
                (Location::Goal, Location::Initial) => PatternKind::Abar,
                (Location::Initial, Location::Initial) => PatternKind::B,
                (Location::Goal, Location::Goal) => PatternKind::Bbar,
                _ => return Err(bad()),
            };
            let routes: Vec<Vec<usize>> = match pattern {
                [into, _] => {
                    let Location::City(x) = into.to else { return Err(bad()) };
                    city(x)?.route(kind).ok_or(TransformError::UnknownCity(x))?.to_vec()
                }
                [first, hop, _] => {
                    let (Location::City(x), Location::City(y)) = (first.to, hop.to) else { return Err(bad()) };
                    // bridged A flies to -> from, bridged Ā from -> to
                    let (from, to) = if kind == PatternKind::A { (y, x) } else { (x, y) };
                    let total: f64 = pattern.iter().map(|l| l.cost).sum();
                    let mut found = None;
                    for c in &mapping.cities {
                        let Some(h) = c.hop.as_ref().filter(|h| h.from == from && h.to == to) else { continue };
                        let hop_path = if kind == PatternKind::A { h.path.clone() } else { reversed(&h.path) };
                        let Ok((dur, hop_cost)) = path_metrics(&hop_path, g) else { continue };
                        let outer = if kind == PatternKind::A {
                            [leg_of(PatternKind::A, to, 0)?, leg_of(PatternKind::A, from, 1)?]
                        } else {
                            [leg_of(PatternKind::Abar, from, 0)?, leg_of(PatternKind::Abar, to, 1)?]
                        };
                        let cost = cost_of(&outer[0])? + hop_cost + cost_of(&outer[1])?;
                        if (dur - hop.duration).abs() <= eps() && (cost - total).abs() <= eps() * (1.0 + total.abs()) {
                            let [o1, o2] = outer;
                            found = Some(vec![o1, hop_path, o2]);
                            break;
                        }
                    }
                    found.ok_or_else(bad)?
                }
                _ => return Err(bad()),
            };
            for (leg, path) in pattern.iter().zip(&routes) {
                let mut clock = leg.start;
                for w in path.windows(2) {
                    let duration = g.arc(w[0], w[1]).ok_or(TransformError::BrokenPath(w[0], w[1]))?;
                    out.push(Leg {
                        from: g.location(w[0]),
                        to: g.location(w[1]),
                        passenger: leg.passenger,
                        duration,
                        start: clock,
                        end: clock + duration,
                        cost: g.vertices()[w[1]].cost,
                    });
                    clock += duration;
                }
            }
        }
        planes.push(out);
    }
    Ok(Schedule { planes, handoffs: schedule.handoffs.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RawEdge, RawGeneralInstance, Vertex};
    use crate::model::PatternKind;

    fn with_central(d: Vec<f64>, db: Vec<f64>, c: Vec<f64>, m: Vec<Vec<f64>>, t: usize, p: usize) -> Instance {
        let mut raw = Instance::new(d, db, c, t, p).unwrap().to_raw();
        raw.central = Some(m);
        Instance::try_from(raw).unwrap()
    }

    #[test]
    fn detect_pairs() {
        let sym = with_central(vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]], 2, 1);
        assert!(detect_bab(&sym).unwrap().is_empty());
        let asym = with_central(vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 2.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]], 2, 1);
        assert_eq!(detect_bab(&asym).unwrap(), vec![BabPair { i: 0, j: 1 }]);
        let none = Instance::new(vec![1.0], vec![1.0], vec![1.0], 1, 1).unwrap();
        assert_eq!(detect_bab(&none), Err(TransformError::MissingCentral));
    }

    #[test]
    fn virtual_city_values() {
        let inst = with_central(vec![1.0, 3.0], vec![3.0, 1.0], vec![1.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]], 2, 1);
        let out = transform_bab(&inst).unwrap();
        assert_eq!(out.n(), 3);
        let total = |k| crate::schedule::pattern_duration(&out, 2, k);
        assert_eq!(
            [total(PatternKind::B), total(PatternKind::Bbar), total(PatternKind::A), total(PatternKind::Abar)],
            [2.0, 2.0, 7.0, 7.0]
        );
        let costs: Vec<f64> = PatternKind::ALL.iter().map(|&k| out.pattern(2, k).cost).collect();
        assert_eq!(costs, vec![2.0, 2.0, 1.0, 1.0]);
        assert!(is_unreachable(out.hop(2, 0)) && out.hop(2, 2) == 0.0);
    }

    #[test]
    fn identity_without_pairs() {
        let inst = with_central(vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 1.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]], 2, 1);
        assert_eq!(transform_bab(&inst).unwrap(), inst);
    }

    fn graph(vertices: &[(&str, f64)], edges: &[(&str, &str, f64)], t: usize, p: usize) -> GeneralInstance {
        GeneralInstance::from_raw(RawGeneralInstance {
            vertices: vertices.iter().map(|(id, cost)| Vertex { id: id.to_string(), cost: *cost }).collect(),
            edges: edges.iter().map(|(a, b, d)| RawEdge { from: a.to_string(), to: b.to_string(), duration: *d }).collect(),
            initial: "I".into(),
            goal: "G".into(),
            t,
            p,
            directed: false,
        })
        .unwrap()
    }

    #[test]
    fn metrics_and_filter() {
        let g = graph(&[("I", 0.0), ("G", 0.0), ("X", 4.0)], &[("I", "G", 5.0), ("I", "X", 2.0), ("X", "G", 3.0)], 1, 1);
        assert_eq!(path_metrics(&[0, 1], &g).unwrap(), (5.0, 0.0));
        assert_eq!(path_metrics(&[0, 2, 1], &g).unwrap(), (5.0, 4.0));
        assert!(path_metrics(&[2, 2], &g).is_err());
        let paths = enumerate_paths(&g, 4);
        assert_eq!(paths.len(), 2);
        let rec = |duration, cost| PathRecord { vertices: vec![], duration, cost };
        assert_eq!(nondominated_paths(&[rec(5.0, 1.0), rec(4.0, 2.0)]).len(), 2);
        assert_eq!(nondominated_paths(&[rec(5.0, 2.0), rec(4.0, 1.0)]), vec![rec(4.0, 1.0)]);
        assert_eq!(nondominated_paths(&[rec(4.0, 1.0), rec(4.0, 1.0)]).len(), 2);
    }

    #[test]
    fn reduce_single_city() {
        let g = graph(&[("I", 0.0), ("G", 0.0), ("X", 4.0)], &[("I", "X", 2.0), ("X", "G", 3.0)], 1, 1);
        for mode in [Reduction::Splits, Reduction::Routes] {
            let (inst, map) = reduce_to_clique(&g, 4, mode).unwrap();
            assert_eq!((inst.n(), inst.d()[0], inst.dbar()[0], inst.c()[0]), (1, 2.0, 3.0, 4.0));
            assert!(inst.override_for(0).is_none());
            assert_eq!(map.cities[0].vertex, 2);
        }
    }

    #[test]
    fn splits_of_two_hop_path() {
        let g = graph(
            &[("I", 0.0), ("G", 0.0), ("X", 4.0), ("Y", 1.0)],
            &[("I", "X", 2.0), ("X", "Y", 1.0), ("Y", "G", 3.0)],
            1,
            1,
        );
        let (inst, map) = reduce_to_clique(&g, 4, Reduction::Splits).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.c(), &[5.0, 5.0]);
        assert_eq!((inst.d(), inst.dbar()), (&[2.0, 3.0][..], &[4.0, 3.0][..]));
        assert_eq!(map.cities[0].a, Some([vec![0, 2], vec![2, 3, 1]]));
        // B at the first split flies I -> X -> I and lands only at X
        assert_eq!(inst.override_for(0).unwrap().b.cost, 4.0);
        assert!(reduce_to_clique(&g, 1, Reduction::Splits).is_err());
    }

    #[test]
    fn routes_bridge_distinct_vertices() {
        // B drops at Y, the B̄ picks up at X: only a bridge hands the passenger over
        let g = graph(
            &[("I", 0.0), ("G", 0.0), ("X", 1.0), ("Y", 1.0)],
            &[("I", "X", 5.0), ("I", "Y", 1.0), ("X", "G", 1.0), ("Y", "G", 5.0), ("X", "Y", 1.0)],
            2,
            1,
        );
        let (inst, map) = reduce_to_clique(&g, 2, Reduction::Routes).unwrap();
        let bridged: Vec<usize> = (0..inst.n()).filter(|&k| inst.bridge(k).is_some()).collect();
        assert!(!bridged.is_empty());
        for &k in &bridged {
            let hop = map.cities[k].hop.as_ref().unwrap();
            let b = inst.bridge(k).unwrap();
            assert_eq!((hop.from, hop.to), (b.from, b.to));
            assert_eq!(hop.path.first(), Some(&map.cities[b.to].vertex));
            assert_eq!(hop.path.last(), Some(&map.cities[b.from].vertex));
        }
    }

    /// Pareto counts of a diamond chain by enumerating detour subsets directly.
    fn diamond_chain_count(n: usize) -> usize {
        let m = (n - 1) / 2;
        let nf = n as f64;
        let pts: Vec<(f64, f64)> = (0..1u32 << m)
            .map(|mask| {
                (1..=m).fold((0.0, 0.0), |(d, c), k| {
                    if mask >> (k - 1) & 1 == 1 {
                        (d + 2.0 * k as f64, c + (nf - (2 * k - 1) as f64) / 2.0)
                    } else {
                        (d + nf * nf / 4.0 + 1.0, c)
                    }
                })
            })
            .collect();
        pts.iter()
            .filter(|p| !pts.iter().any(|q| q.0 <= p.0 && q.1 <= p.1 && (q.0 < p.0 || q.1 < p.1)))
            .count()
    }

    #[test]
    fn pathological_graph_counts() {
        use crate::generators::{gen_hansen, gen_layered};
        for (n, all) in [(3, 2), (5, 4), (7, 8), (9, 16)] {
            let paths = enumerate_paths(&gen_hansen(n).unwrap(), n);
            assert_eq!(paths.len(), all);
            assert_eq!(nondominated_paths(&paths).len(), diamond_chain_count(n));
        }
        assert_eq!(diamond_chain_count(5), 4);
        assert_eq!(enumerate_paths(&gen_layered(4).unwrap(), 4).len(), 4);
        assert_eq!(enumerate_paths(&gen_layered(9).unwrap(), 9).len(), 27);
    }
}
