//! Airport route graphs from OpenFlights-format data.
//!
//! Airports files have no header and the columns `id, name, city, country, IATA, ICAO, latitude,
//! longitude, ...`; `\N` marks a missing value. Routes files have the columns `airline,
//! airline id, source IATA, source id, destination IATA, destination id, codeshare, stops, ...`.
//! A ranking file lists one IATA code per line, busiest first; `#` starts a comment.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GeneralInstance, GraphError, Instance, RawEdge, RawGeneralInstance, Vertex};
use crate::transform::{enumerate_paths, nondominated_paths, reduce_to_clique, PathMapping, PathRecord, Reduction, TransformError};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Multiplier applied to 2 / (d(src, i) + d(i, dst)); puts landing costs near 1e4 for
/// intercontinental detours.
pub const DEFAULT_COST_SCALE: f64 = 1e8;

#[derive(Debug, Error)]
pub enum OpenFlightError {
    #[error("line {line}: missing column {column}")]
    MissingColumn { line: usize, column: &'static str },
    #[error("line {line}: bad {column} value {value:?}")]
    BadValue { line: usize, column: &'static str, value: String },
    #[error("duplicate airport {0}")]
    DuplicateAirport(String),
    #[error("airport {0} is not among the kept airports")]
    UnknownAirport(String),
    #[error("no route path from {0} to {1}")]
    Disconnected(String, String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airport {
    pub iata: String,
    pub name: String,
    /// Degrees, |lat| ≤ 90.
    pub lat: f64,
    /// Degrees, |lon| ≤ 180.
    pub lon: f64,
}

/// Great-circle distance in km on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine(a: &Airport, b: &Airport) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input)
}

fn column<'r>(rec: &'r csv::StringRecord, i: usize, line: usize, name: &'static str) -> Result<&'r str, OpenFlightError> {
    rec.get(i).ok_or(OpenFlightError::MissingColumn { line, column: name })
}

fn null(s: &str) -> bool {
    s.is_empty() || s == "\\N"
}

/// Airports with an IATA code; rows without one are skipped.
pub fn read_airports<R: Read>(input: R) -> Result<Vec<Airport>, OpenFlightError> {
    let mut out: Vec<Airport> = Vec::new();
    for (i, rec) in reader(input).records().enumerate() {
        let rec = rec?;
        let line = i + 1;
        let iata = column(&rec, 4, line, "IATA")?;
        if null(iata) {
            continue;
        }
        let coord = |idx, name, limit: f64| -> Result<f64, OpenFlightError> {
            let raw = column(&rec, idx, line, name)?;
            raw.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.abs() <= limit)
                .ok_or_else(|| OpenFlightError::BadValue { line, column: name, value: raw.to_string() })
        };
        let airport = Airport {
            iata: iata.to_string(),
            name: column(&rec, 1, line, "name")?.to_string(),
            lat: coord(6, "latitude", 90.0)?,
            lon: coord(7, "longitude", 180.0)?,
        };
        if out.iter().any(|a| a.iata == airport.iata) {
            return Err(OpenFlightError::DuplicateAirport(airport.iata));
        }
        out.push(airport);
    }
    Ok(out)
}

/// Nonstop routes as (source, destination) IATA pairs, duplicates across airlines removed.
pub fn read_routes<R: Read>(input: R) -> Result<Vec<(String, String)>, OpenFlightError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, rec) in reader(input).records().enumerate() {
        let rec = rec?;
        let line = i + 1;
        let (src, dst) = (column(&rec, 2, line, "source")?, column(&rec, 4, line, "destination")?);
        let stops = rec.get(7).unwrap_or("0").trim();
        if null(src) || null(dst) || src == dst || !(stops.is_empty() || stops == "0") {
            continue;
        }
        if seen.insert((src.to_string(), dst.to_string())) {
            out.push((src.to_string(), dst.to_string()));
        }
    }
    Ok(out)
}

pub fn read_ranking<R: Read>(mut input: R) -> Result<Vec<String>, OpenFlightError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| OpenFlightError::BadValue { line: 0, column: "ranking", value: e.to_string() })?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub src: String,
    pub dst: String,
    /// Airports kept from the head of the ranking.
    pub top_n: usize,
    /// Most airports on one enumerated path, endpoints included.
    pub max_cities: usize,
    pub t: usize,
    pub p: usize,
    pub cost_scale: f64,
}

impl PipelineOptions {
    pub fn new(src: &str, dst: &str, top_n: usize, max_cities: usize, t: usize, p: usize) -> PipelineOptions {
        PipelineOptions { src: src.into(), dst: dst.into(), top_n, max_cities, t, p, cost_scale: DEFAULT_COST_SCALE }
    }
}

/// Graph over the `top_n` highest-ranked airports and the routes between them.
///
/// Arc durations are haversine km. Landing at airport i costs `scale · 2 / (d(src, i) + d(i, dst))`;
/// src and dst cost 0.
pub fn build_instance(airports: &[Airport], routes: &[(String, String)], ranking: &[String], opts: &PipelineOptions) -> Result<GeneralInstance, OpenFlightError> {
    let by_code: HashMap<&str, &Airport> = airports.iter().map(|a| (a.iata.as_str(), a)).collect();
    let kept: Vec<&Airport> = ranking.iter().filter_map(|c| by_code.get(c.as_str()).copied()).take(opts.top_n).collect();
    let find = |code: &str| kept.iter().copied().find(|a| a.iata == code).ok_or_else(|| OpenFlightError::UnknownAirport(code.to_string()));
    let (src, dst) = (find(&opts.src)?, find(&opts.dst)?);
    let vertices = kept
        .iter()
        .map(|a| {
            let cost = if a.iata == src.iata || a.iata == dst.iata {
                0.0
            } else {
                opts.cost_scale * 2.0 / (haversine(src, a) + haversine(a, dst))
            };
            Vertex { id: a.iata.clone(), cost }
        })
        .collect();
    let edges = routes
        .iter()
        .filter_map(|(s, d)| Some((find(s).ok()?, find(d).ok()?)))
        .map(|(s, d)| RawEdge { from: s.iata.clone(), to: d.iata.clone(), duration: haversine(s, d) })
        .collect();
    let raw = RawGeneralInstance { vertices, edges, initial: src.iata.clone(), goal: dst.iata.clone(), t: opts.t, p: opts.p, directed: true };
    match GeneralInstance::from_raw(raw) {
        Err(GraphError::Disconnected) => Err(OpenFlightError::Disconnected(opts.src.clone(), opts.dst.clone())),
        other => Ok(other?),
    }
}

/// Everything the pipeline produces, from the filtered graph to the clique instance.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// Graph restricted to the airports on nondominated paths.
    pub graph: GeneralInstance,
    /// Nondominated paths, as vertex indices of `graph`.
    pub paths: Vec<PathRecord>,
    pub instance: Instance,
    pub mapping: PathMapping,
}

impl PipelineResult {
    /// Airports on some nondominated path, src and dst included.
    pub fn airports(&self) -> usize {
        self.graph.vertices().len()
    }

    pub fn render_path(&self, path: &PathRecord) -> String {
        path.vertices.iter().map(|&v| self.graph.vertices()[v].id.as_str()).collect::<Vec<_>>().join(" -> ")
    }
}

/// Builds the graph, keeps the nondominated bounded paths, restricts the graph to their
/// airports and reduces it with one city per path split.
pub fn run_pipeline(airports: &[Airport], routes: &[(String, String)], ranking: &[String], opts: &PipelineOptions) -> Result<PipelineResult, OpenFlightError> {
    let full = build_instance(airports, routes, ranking, opts)?;
    let cap = opts.max_cities.saturating_sub(2);
    let paths = nondominated_paths(&enumerate_paths(&full, cap));
    if paths.is_empty() {
        return Err(OpenFlightError::Disconnected(opts.src.clone(), opts.dst.clone()));
    }
    let used: BTreeSet<usize> = paths.iter().flat_map(|p| p.vertices.iter().copied()).collect();
    let ids: Vec<&str> = used.iter().map(|&v| full.vertices()[v].id.as_str()).collect();
    let raw = RawGeneralInstance {
        vertices: used.iter().map(|&v| full.vertices()[v].clone()).collect(),
        edges: full
            .arcs()
            .iter()
            .filter(|a| used.contains(&a.from) && used.contains(&a.to))
            .map(|a| RawEdge { from: full.vertices()[a.from].id.clone(), to: full.vertices()[a.to].id.clone(), duration: a.duration })
            .collect(),
        initial: opts.src.clone(),
        goal: opts.dst.clone(),
        t: opts.t,
        p: opts.p,
        directed: true,
    };
    let graph = GeneralInstance::from_raw(raw)?;
    let index = |v: usize| ids.iter().position(|id| *id == full.vertices()[v].id).expect("used vertex");
    let paths: Vec<PathRecord> = paths
        .into_iter()
        .map(|p| PathRecord { vertices: p.vertices.iter().map(|&v| index(v)).collect(), ..p })
        .collect();
    let (instance, mapping) = reduce_to_clique(&graph, cap, Reduction::Splits)?;
    Ok(PipelineResult { graph, paths, instance, mapping })
}
