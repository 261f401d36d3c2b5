//! Clique instances: validation, duplicate merging and the triangle check.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Finite stand-in for an unflyable distance.
pub const UNREACHABLE: f64 = 1e18;

/// Default absolute comparison tolerance.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Global comparison tolerance; `ZENOFRONT_EPS` overrides the default once per process.
pub fn eps() -> f64 {
    static EPS: OnceLock<f64> = OnceLock::new();
    *EPS.get_or_init(|| {
        std::env::var("ZENOFRONT_EPS")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|e| e.is_finite() && *e >= 0.0)
            .unwrap_or(DEFAULT_EPS)
    })
}

pub(crate) fn is_unreachable(x: f64) -> bool {
    x >= UNREACHABLE * 0.5
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("t = {t} < p = {p}: problem trivial or undefined")]
    TooFewTravelers { t: usize, p: usize },
    #[error("{0} must be positive")]
    Zero(&'static str),
    #[error("{field} has length {got}, expected {expected}")]
    Length {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("{field}[{index}] = {value} is negative or not finite")]
    BadValue {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("override for city {0} is invalid: {1}")]
    BadOverride(usize, String),
    #[error("the central matrix is required here")]
    MissingCentral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternKind {
    /// C_I -> C_i -> C_G carrying one passenger.
    A,
    /// C_G -> C_i -> C_I, empty then empty.
    Abar,
    /// C_I -> C_i -> C_I, drops a passenger at C_i.
    B,
    /// C_G -> C_i -> C_G, picks a passenger up at C_i.
    Bbar,
}

impl PatternKind {
    pub const ALL: [PatternKind; 4] = [PatternKind::A, PatternKind::Abar, PatternKind::B, PatternKind::Bbar];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternKind::A => "A",
            PatternKind::Abar => "Abar",
            PatternKind::B => "B",
            PatternKind::Bbar => "Bbar",
        })
    }
}

/// Timing and cost of one pattern at one city.
///
/// `first` is the leg leaving the pattern's origin, `last` the leg reaching its end. A bridged
/// pattern flies the bridge hop between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub first: f64,
    pub last: f64,
    pub cost: f64,
}

/// Passenger transfer between two original cities, used by virtual cities.
///
/// A bridged Ā flies C_G -> from -> to -> C_I relaying a passenger dropped at `from` to `to`.
/// A bridged A flies C_I -> to -> from -> C_G, leaving its passenger at `to` and taking over the
/// one waiting at `from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub from: usize,
    pub to: usize,
    pub hop: f64,
}

/// Per-pattern replacement data for one city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityOverride {
    pub city: usize,
    pub a: PatternSpec,
    pub abar: PatternSpec,
    pub b: PatternSpec,
    pub bbar: PatternSpec,
    /// When set, every B/B̄ chain at this city must be relayed by one A or Ā of the same city.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<Bridge>,
}

impl CityOverride {
    pub fn spec(&self, kind: PatternKind) -> &PatternSpec {
        match kind {
            PatternKind::A => &self.a,
            PatternKind::Abar => &self.abar,
            PatternKind::B => &self.b,
            PatternKind::Bbar => &self.bbar,
        }
    }
}

/// Unvalidated instance exactly as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInstance {
    pub n: usize,
    pub t: usize,
    pub p: usize,
    pub d: Vec<f64>,
    pub dbar: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub central: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<CityOverride>,
}

/// A validated clique instance. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    t: usize,
    p: usize,
    d: Vec<f64>,
    dbar: Vec<f64>,
    c: Vec<f64>,
    central: Option<Vec<Vec<f64>>>,
    overrides: Vec<Option<CityOverride>>,
    symmetric: bool,
}

impl TryFrom<RawInstance> for Instance {
    type Error = ModelError;

    fn try_from(raw: RawInstance) -> Result<Self, ModelError> {
        validate(raw)
    }
}

impl From<Instance> for RawInstance {
    fn from(inst: Instance) -> RawInstance {
        inst.to_raw()
    }
}

fn check_values(field: &'static str, xs: &[f64]) -> Result<(), ModelError> {
    for (index, &value) in xs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(ModelError::BadValue { field, index, value });
        }
    }
    Ok(())
}

fn check_spec(city: usize, kind: PatternKind, s: &PatternSpec) -> Result<(), ModelError> {
    for v in [s.first, s.last, s.cost] {
        if !v.is_finite() || v < 0.0 {
            return Err(ModelError::BadOverride(city, format!("{kind} has value {v}")));
        }
    }
    Ok(())
}

/// Checks a raw instance and merges duplicate cities.
///
/// Plain cities with equal (d, d̄, c) within ε, and equal central rows when a matrix is present,
/// collapse into the first of them. Bridge endpoints are remapped accordingly.
pub fn validate(raw: RawInstance) -> Result<Instance, ModelError> {
    let n = raw.n;
    if n == 0 {
        return Err(ModelError::Zero("n"));
    }
    if raw.p == 0 {
        return Err(ModelError::Zero("p"));
    }
    if raw.t < raw.p {
        return Err(ModelError::TooFewTravelers { t: raw.t, p: raw.p });
    }
    for (field, xs) in [("d", &raw.d), ("dbar", &raw.dbar), ("c", &raw.c)] {
        if xs.len() != n {
            return Err(ModelError::Length { field, got: xs.len(), expected: n });
        }
        check_values(field, xs)?;
    }
    if let Some(m) = &raw.central {
        if m.len() != n {
            return Err(ModelError::Length { field: "central", got: m.len(), expected: n });
        }
        for row in m {
            if row.len() != n {
                return Err(ModelError::Length { field: "central row", got: row.len(), expected: n });
            }
            check_values("central", row)?;
        }
    }
    let mut overrides: Vec<Option<CityOverride>> = vec![None; n];
    for o in &raw.overrides {
        if o.city >= n {
            return Err(ModelError::BadOverride(o.city, "city out of range".into()));
        }
        if overrides[o.city].is_some() {
            return Err(ModelError::BadOverride(o.city, "duplicate override".into()));
        }
        for kind in PatternKind::ALL {
            check_spec(o.city, kind, o.spec(kind))?;
        }
        overrides[o.city] = Some(o.clone());
    }
    for o in overrides.iter().flatten() {
        if let Some(b) = o.bridge {
            if b.from >= n || b.to >= n || b.from == b.to {
                return Err(ModelError::BadOverride(o.city, "bridge endpoints invalid".into()));
            }
            let bridged_end = |x: usize| overrides[x].as_ref().is_some_and(|e| e.bridge.is_some());
            if bridged_end(b.from) || bridged_end(b.to) {
                return Err(ModelError::BadOverride(o.city, "bridge endpoints must not be bridged".into()));
            }
            if !b.hop.is_finite() || b.hop < 0.0 {
                return Err(ModelError::BadOverride(o.city, format!("bridge hop {}", b.hop)));
            }
            // bridged legs are the endpoints' own legs; only A/Ā costs may differ
            let (i, j) = (b.from, b.to);
            let end = |x: usize, kind: PatternKind| match &overrides[x] {
                Some(e) => *e.spec(kind),
                None => match kind {
                    PatternKind::A => PatternSpec { first: raw.d[x], last: raw.dbar[x], cost: raw.c[x] },
                    PatternKind::Abar => PatternSpec { first: raw.dbar[x], last: raw.d[x], cost: raw.c[x] },
                    PatternKind::B => PatternSpec { first: raw.d[x], last: raw.d[x], cost: raw.c[x] },
                    PatternKind::Bbar => PatternSpec { first: raw.dbar[x], last: raw.dbar[x], cost: raw.c[x] },
                },
            };
            let tol = eps();
            let differs = |x: f64, y: f64| (x - y).abs() > tol;
            let (eb, ebb) = (end(i, PatternKind::B), end(j, PatternKind::Bbar));
            let legs = [
                (o.b, eb.first, eb.last),
                (o.bbar, ebb.first, ebb.last),
                (o.a, end(j, PatternKind::A).first, end(i, PatternKind::A).last),
                (o.abar, end(i, PatternKind::Abar).first, end(j, PatternKind::Abar).last),
            ];
            let bad_leg = legs.iter().any(|(s, f, l)| !is_unreachable(s.first) && (differs(s.first, *f) || differs(s.last, *l)));
            if bad_leg || differs(o.b.cost, eb.cost) || differs(o.bbar.cost, ebb.cost) {
                return Err(ModelError::BadOverride(o.city, "bridged patterns disagree with their endpoints".into()));
            }
        }
    }

    let eps = eps();
    let close = |x: f64, y: f64| (x - y).abs() <= eps;
    // representative[i] = index of the kept city i merges into
    let mut representative: Vec<usize> = (0..n).collect();
    for i in 0..n {
        if overrides[i].is_some() {
            continue;
        }
        for j in 0..i {
            if representative[j] != j || overrides[j].is_some() {
                continue;
            }
            let same_triple = close(raw.d[i], raw.d[j]) && close(raw.dbar[i], raw.dbar[j]) && close(raw.c[i], raw.c[j]);
            let same_row = raw.central.as_ref().is_none_or(|m| {
                (0..n).all(|x| x == i || x == j || close(m[i][x], m[j][x]) && close(m[x][i], m[x][j]))
            });
            if same_triple && same_row {
                representative[i] = j;
                break;
            }
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&i| representative[i] == i).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &i) in kept.iter().enumerate() {
        new_index[i] = k;
    }
    let remap = |i: usize| new_index[representative[i]];

    let pick = |xs: &[f64]| kept.iter().map(|&i| xs[i]).collect::<Vec<f64>>();
    let central = raw
        .central
        .as_ref()
        .map(|m| kept.iter().map(|&i| kept.iter().map(|&j| m[i][j]).collect()).collect());
    let overrides: Vec<Option<CityOverride>> = kept
        .iter()
        .map(|&i| {
            overrides[i].clone().map(|mut o| {
                o.city = new_index[i];
                if let Some(b) = o.bridge.as_mut() {
                    b.from = remap(b.from);
                    b.to = remap(b.to);
                }
                o
            })
        })
        .collect();
    let d = pick(&raw.d);
    let dbar = pick(&raw.dbar);
    let symmetric = d.iter().zip(&dbar).all(|(a, b)| (a - b).abs() <= eps);
    Ok(Instance { t: raw.t, p: raw.p, d, dbar, c: pick(&raw.c), central, overrides, symmetric })
}

impl Instance {
    /// Builds and validates an instance without a central matrix.
    pub fn new(d: Vec<f64>, dbar: Vec<f64>, c: Vec<f64>, t: usize, p: usize) -> Result<Instance, ModelError> {
        validate(RawInstance { n: d.len(), t, p, d, dbar, c, central: None, overrides: Vec::new() })
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            n: self.n(),
            t: self.t,
            p: self.p,
            d: self.d.clone(),
            dbar: self.dbar.clone(),
            c: self.c.clone(),
            central: self.central.clone(),
            overrides: self.overrides.iter().flatten().cloned().collect(),
        }
    }

    /// Same cities with different traveler and plane counts.
    pub fn with_counts(&self, t: usize, p: usize) -> Result<Instance, ModelError> {
        let mut raw = self.to_raw();
        raw.t = t;
        raw.p = p;
        validate(raw)
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn dbar(&self) -> &[f64] {
        &self.dbar
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn central(&self) -> Option<&[Vec<f64>]> {
        self.central.as_deref()
    }

    /// Central distance between two cities; `UNREACHABLE` without a matrix.
    pub fn hop(&self, i: usize, j: usize) -> f64 {
        self.central.as_ref().map_or(UNREACHABLE, |m| m[i][j])
    }

    pub fn override_for(&self, city: usize) -> Option<&CityOverride> {
        self.overrides[city].as_ref()
    }

    pub fn has_overrides(&self) -> bool {
        self.overrides.iter().any(Option::is_some)
    }

    /// True iff every city has d = d̄ within ε.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Pattern spec of `kind` at `city`, defaults derived from (d, d̄, c).
    pub fn pattern(&self, city: usize, kind: PatternKind) -> PatternSpec {
        if let Some(o) = &self.overrides[city] {
            return *o.spec(kind);
        }
        let (d, db, c) = (self.d[city], self.dbar[city], self.c[city]);
        let (first, last) = match kind {
            PatternKind::A => (d, db),
            PatternKind::Abar => (db, d),
            PatternKind::B => (d, d),
            PatternKind::Bbar => (db, db),
        };
        PatternSpec { first, last, cost: c }
    }

    pub fn bridge(&self, city: usize) -> Option<Bridge> {
        self.overrides[city].as_ref().and_then(|o| o.bridge)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Location {
    Initial,
    Goal,
    City(usize),
}

impl Location {
    /// Arrow-notation label; cities are 0-based.
    pub fn label(self) -> String {
        match self {
            Location::Initial => "I".into(),
            Location::Goal => "G".into(),
            Location::City(i) => format!("C{i}"),
        }
    }
}

/// (x, y, z) with dist(x, z) > dist(x, y) + dist(y, z) + ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangleViolation {
    pub x: Location,
    pub y: Location,
    pub z: Location,
}

/// Reports every triangle-inequality violation over the cities plus C_I and C_G.
///
/// The undefined C_I–C_G pair, unreachable distances and override cities are skipped.
pub fn check_triangle(instance: &Instance) -> Result<Vec<TriangleViolation>, ModelError> {
    let m = instance.central().ok_or(ModelError::MissingCentral)?;
    let mut nodes = vec![Location::Initial, Location::Goal];
    nodes.extend((0..instance.n()).filter(|&i| instance.override_for(i).is_none()).map(Location::City));
    let dist = |x: Location, y: Location| -> Option<f64> {
        let v = match (x, y) {
            (Location::City(i), Location::City(j)) => m[i][j],
            (Location::Initial, Location::City(i)) | (Location::City(i), Location::Initial) => instance.d()[i],
            (Location::Goal, Location::City(i)) | (Location::City(i), Location::Goal) => instance.dbar()[i],
            _ => return None,
        };
        (!is_unreachable(v)).then_some(v)
    };
    let eps = eps();
    let mut out = Vec::new();
    for (xi, &x) in nodes.iter().enumerate() {
        for (zi, &z) in nodes.iter().enumerate().skip(xi + 1) {
            let Some(xz) = dist(x, z) else { continue };
            for (yi, &y) in nodes.iter().enumerate() {
                if yi == xi || yi == zi {
                    continue;
                }
                if let (Some(xy), Some(yz)) = (dist(x, y), dist(y, z)) {
                    if xz > xy + yz + eps {
                        out.push(TriangleViolation { x, y, z });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// A vertex of a general instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEdge {
    pub from: String,
    pub to: String,
    pub duration: f64,
}

/// General instance as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGeneralInstance {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<RawEdge>,
    #[serde(rename = "I")]
    pub initial: String,
    #[serde(rename = "G")]
    pub goal: String,
    pub t: usize,
    pub p: usize,
    /// Edges are one-way arcs when set; otherwise each edge flies both ways.
    #[serde(default)]
    pub directed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub duration: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),
    #[error("initial and goal vertices coincide")]
    SameEndpoints,
    #[error("negative or non-finite value on {0}")]
    BadValue(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("t = {t} < p = {p}: problem trivial or undefined")]
    TooFewTravelers { t: usize, p: usize },
    #[error("p must be positive")]
    NoPlanes,
}

/// A connected weighted graph with designated initial and goal vertices.
///
/// Arcs are directed; the landing costs of I and G are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeneralInstance", into = "RawGeneralInstance")]
pub struct GeneralInstance {
    vertices: Vec<Vertex>,
    arcs: Vec<Arc>,
    initial: usize,
    goal: usize,
    t: usize,
    p: usize,
}

impl TryFrom<RawGeneralInstance> for GeneralInstance {
    type Error = GraphError;

    fn try_from(raw: RawGeneralInstance) -> Result<Self, GraphError> {
        GeneralInstance::from_raw(raw)
    }
}

impl From<GeneralInstance> for RawGeneralInstance {
    fn from(g: GeneralInstance) -> RawGeneralInstance {
        RawGeneralInstance {
            edges: g
                .arcs
                .iter()
                .map(|a| RawEdge { from: g.vertices[a.from].id.clone(), to: g.vertices[a.to].id.clone(), duration: a.duration })
                .collect(),
            initial: g.vertices[g.initial].id.clone(),
            goal: g.vertices[g.goal].id.clone(),
            vertices: g.vertices,
            t: g.t,
            p: g.p,
            directed: true,
        }
    }
}

impl GeneralInstance {
    pub fn from_raw(raw: RawGeneralInstance) -> Result<GeneralInstance, GraphError> {
        if raw.p == 0 {
            return Err(GraphError::NoPlanes);
        }
        if raw.t < raw.p {
            return Err(GraphError::TooFewTravelers { t: raw.t, p: raw.p });
        }
        let mut index = std::collections::HashMap::new();
        for (i, v) in raw.vertices.iter().enumerate() {
            if index.insert(v.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.id.clone()));
            }
            if !v.cost.is_finite() || v.cost < 0.0 {
                return Err(GraphError::BadValue(format!("vertex {}", v.id)));
            }
        }
        let find = |id: &str| index.get(id).copied().ok_or_else(|| GraphError::UnknownVertex(id.to_string()));
        let initial = find(&raw.initial)?;
        let goal = find(&raw.goal)?;
        if initial == goal {
            return Err(GraphError::SameEndpoints);
        }
        let mut arcs = Vec::new();
        for e in &raw.edges {
            let (from, to) = (find(&e.from)?, find(&e.to)?);
            if !e.duration.is_finite() || e.duration < 0.0 {
                return Err(GraphError::BadValue(format!("edge {} -> {}", e.from, e.to)));
            }
            if from == to {
                continue;
            }
            arcs.push(Arc { from, to, duration: e.duration });
            if !raw.directed {
                arcs.push(Arc { from: to, to: from, duration: e.duration });
            }
        }
        let mut vertices = raw.vertices;
        vertices[initial].cost = 0.0;
        vertices[goal].cost = 0.0;
        let g = GeneralInstance { vertices, arcs, initial, goal, t: raw.t, p: raw.p };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for a in &self.arcs {
            adj[a.from].push(a.to);
            adj[a.to].push(a.from);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Shortest arc duration from `from` to `to`, if any.
    pub fn arc(&self, from: usize, to: usize) -> Option<f64> {
        self.arcs.iter().filter(|a| a.from == from && a.to == to).map(|a| a.duration).reduce(f64::min)
    }

    pub fn with_counts(&self, t: usize, p: usize) -> Result<GeneralInstance, GraphError> {
        let mut raw: RawGeneralInstance = self.clone().into();
        raw.t = t;
        raw.p = p;
        GeneralInstance::from_raw(raw)
    }

    /// Location of a vertex in schedules: I, G, or `City(vertex index)`.
    pub fn location(&self, v: usize) -> Location {
        if v == self.initial {
            Location::Initial
        } else if v == self.goal {
            Location::Goal
        } else {
            Location::City(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(d: &[f64], dbar: &[f64], c: &[f64], t: usize, p: usize) -> RawInstance {
        RawInstance {
            n: d.len(),
            t,
            p,
            d: d.to_vec(),
            dbar: dbar.to_vec(),
            c: c.to_vec(),
            central: None,
            overrides: Vec::new(),
        }
    }

    #[test]
    fn duplicates_merge() {
        let inst = validate(raw(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], 1, 1)).unwrap();
        assert_eq!(inst.n(), 1);
    }

    #[test]
    fn table_family_is_symmetric() {
        let inst = validate(raw(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 3, 2)).unwrap();
        assert_eq!(inst.n(), 3);
        assert!(inst.is_symmetric());
    }

    #[test]
    fn rejects_bad_counts_and_values() {
        assert!(matches!(
            validate(raw(&[1.0], &[1.0], &[1.0], 1, 2)),
            Err(ModelError::TooFewTravelers { t: 1, p: 2 })
        ));
        assert!(matches!(validate(raw(&[-1.0], &[1.0], &[1.0], 1, 1)), Err(ModelError::BadValue { .. })));
        assert!(matches!(validate(raw(&[f64::NAN], &[1.0], &[1.0], 1, 1)), Err(ModelError::BadValue { .. })));
        assert!(matches!(
            validate(raw(&[f64::INFINITY], &[1.0], &[1.0], 1, 1)),
            Err(ModelError::BadValue { .. })
        ));
        assert!(matches!(validate(raw(&[1.0, 2.0], &[1.0], &[1.0, 1.0], 1, 1)), Err(ModelError::Length { .. })));
    }

    #[test]
    fn merge_respects_central_rows() {
        let mut r = raw(&[1.0, 1.0, 2.0], &[1.0, 1.0, 2.0], &[1.0, 1.0, 1.0], 1, 1);
        r.central = Some(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]]);
        assert_eq!(validate(r.clone()).unwrap().n(), 3);
        r.central = Some(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]]);
        let inst = validate(r).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.central().unwrap(), &[vec![0.0, 2.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn triangle_examples() {
        let mut r = raw(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 2.0], 1, 1);
        r.central = Some(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(check_triangle(&validate(r.clone()).unwrap()).unwrap().is_empty());
        r.central = Some(vec![vec![0.0, 3.0], vec![3.0, 0.0]]);
        let v = check_triangle(&validate(r.clone()).unwrap()).unwrap();
        assert!(v.contains(&TriangleViolation { x: Location::City(0), y: Location::Initial, z: Location::City(1) }));
        r.central = None;
        assert_eq!(check_triangle(&validate(r).unwrap()), Err(ModelError::MissingCentral));
    }

    #[test]
    fn default_patterns() {
        let inst = Instance::new(vec![1.0], vec![3.0], vec![5.0], 1, 1).unwrap();
        assert_eq!(inst.pattern(0, PatternKind::B), PatternSpec { first: 1.0, last: 1.0, cost: 5.0 });
        assert_eq!(inst.pattern(0, PatternKind::Bbar), PatternSpec { first: 3.0, last: 3.0, cost: 5.0 });
        assert_eq!(inst.pattern(0, PatternKind::Abar), PatternSpec { first: 3.0, last: 1.0, cost: 5.0 });
        assert!(!inst.is_symmetric());
    }

    fn raw_graph(edges: &[(&str, &str, f64)]) -> RawGeneralInstance {
        let mut ids: Vec<&str> = vec!["I", "G"];
        for (a, b, _) in edges {
            for x in [a, b] {
                if !ids.contains(x) {
                    ids.push(x);
                }
            }
        }
        RawGeneralInstance {
            vertices: ids.iter().map(|id| Vertex { id: id.to_string(), cost: 1.0 }).collect(),
            edges: edges.iter().map(|(a, b, d)| RawEdge { from: a.to_string(), to: b.to_string(), duration: *d }).collect(),
            initial: "I".into(),
            goal: "G".into(),
            t: 1,
            p: 1,
            directed: false,
        }
    }

    #[test]
    fn general_instance_checks() {
        let g = GeneralInstance::from_raw(raw_graph(&[("I", "A", 2.0), ("A", "G", 3.0)])).unwrap();
        assert_eq!(g.arcs().len(), 4);
        assert_eq!(g.vertices()[g.initial()].cost, 0.0);
        assert_eq!(g.arc(2, 1), Some(3.0));
        let r = raw_graph(&[("I", "A", 2.0)]);
        assert_eq!(GeneralInstance::from_raw(r), Err(GraphError::Disconnected));
        let mut r = raw_graph(&[("I", "G", 1.0)]);
        r.goal = "I".into();
        assert_eq!(GeneralInstance::from_raw(r), Err(GraphError::SameEndpoints));
        assert!(matches!(
            GeneralInstance::from_raw(raw_graph(&[("I", "G", -1.0)])),
            Err(GraphError::BadValue(_))
        ));
        let g = GeneralInstance::from_raw(raw_graph(&[("I", "A", 2.0), ("A", "G", 3.0)])).unwrap();
        let back: GeneralInstance = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let inst = Instance::new(vec![0.1 + 0.2, 1.0 / 3.0], vec![2.0f64.sqrt(), 1e-300], vec![7.0, 0.0], 2, 1).unwrap();
        let s = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, inst);
        for (a, b) in back.d().iter().zip(inst.d()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
