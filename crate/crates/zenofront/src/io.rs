//! Instance files, front emission and reduction sidecars.
//!
//! Instances are JSON. A document with a `vertices` key is a general graph, anything else is
//! a clique instance. Fronts are written as CSV (`cost,makespan`) or as JSON with witnesses.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GeneralInstance, Instance};
use crate::schedule::Ppp;
use crate::solver::{FrontPoint, ParetoFront, Stats};
use crate::transform::{PathMapping, Reduction};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("unknown front format {0:?} (expected csv or json)")]
    UnknownFormat(String),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File { path: path.display().to_string(), source }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> IoError + '_ {
    move |source| IoError::Json { path: path.display().to_string(), source }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(file_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    write_text(path, &to_json(value))
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyInstance {
    Clique(Instance),
    General(GeneralInstance),
}

pub fn parse_instance(text: &str) -> Result<AnyInstance, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("vertices").is_some() {
        Ok(AnyInstance::General(serde_json::from_value(value)?))
    } else {
        Ok(AnyInstance::Clique(serde_json::from_value(value)?))
    }
}

pub fn read_instance(path: &Path) -> Result<AnyInstance, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    parse_instance(&text).map_err(json_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontFormat {
    Csv,
    Json,
}

impl FrontFormat {
    pub fn parse(name: &str) -> Result<FrontFormat, IoError> {
        match name {
            "csv" => Ok(FrontFormat::Csv),
            "json" => Ok(FrontFormat::Json),
            other => Err(IoError::UnknownFormat(other.to_string())),
        }
    }

    /// Guessed from the file extension; CSV unless it ends in `.json`.
    pub fn from_path(path: &Path) -> FrontFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => FrontFormat::Json,
            _ => FrontFormat::Csv,
        }
    }
}

/// Header plus one row per point, in the front's ascending cost order.
pub fn front_csv(front: &ParetoFront) -> String {
    let mut out = String::from("cost,makespan\n");
    for p in &front.points {
        writeln!(out, "{},{}", p.cost, p.makespan).expect("writing to a string");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRecord {
    pub cost: f64,
    pub makespan: f64,
    /// Listing form `(a,..)(abar,..){b,..}`.
    pub ppp: String,
    pub sets: Ppp,
    /// One arrow-notation line per plane.
    pub plan: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<Stats>,
    pub points: Vec<FrontRecord>,
}

impl FrontDocument {
    /// `plan(i, point)` renders the witness of the i-th point; [`crate::Schedule::render`] gives
    /// clique names.
    pub fn new(front: &ParetoFront, stats: Option<&Stats>, plan: impl Fn(usize, &FrontPoint) -> Vec<String>) -> FrontDocument {
        let points = front
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| FrontRecord { cost: p.cost, makespan: p.makespan, ppp: p.ppp.render(), sets: p.ppp.clone(), plan: plan(i, p) })
            .collect();
        FrontDocument { stats: stats.cloned(), points }
    }
}

/// Front text in the requested format, with clique city names in witness plans.
pub fn emit_front(front: &ParetoFront, format: FrontFormat) -> String {
    match format {
        FrontFormat::Csv => front_csv(front),
        FrontFormat::Json => to_json(&FrontDocument::new(front, None, |_, p| p.witness.render())),
    }
}

/// What `expand_plan` needs besides the original graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSidecar {
    pub mode: Reduction,
    pub max_intermediate: usize,
    pub mapping: PathMapping,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, table_spec};
    use crate::solver::{solve_classic, SolveOptions};

    #[test]
    fn empty_front_is_header_only() {
        assert_eq!(front_csv(&ParetoFront::default()), "cost,makespan\n");
    }

    #[test]
    fn table_front_rows() {
        let inst = generate(&table_spec(3)).unwrap();
        let (front, _) = solve_classic(&inst, &SolveOptions::default()).unwrap();
        let csv = front_csv(&front);
        assert_eq!(csv.lines().count(), 1 + 5);
        let doc: FrontDocument = serde_json::from_str(&emit_front(&front, FrontFormat::Json)).unwrap();
        assert_eq!(doc.points.len(), 5);
        assert!(doc.points.iter().all(|r| r.plan.len() == 2 && r.plan[0].starts_with("I -> ")));
    }

    #[test]
    fn detects_instance_kind() {
        let clique = to_json(&generate(&table_spec(3)).unwrap());
        assert!(matches!(parse_instance(&clique).unwrap(), AnyInstance::Clique(_)));
        let g = r#"{"vertices":[{"id":"I","cost":0},{"id":"V","cost":1},{"id":"G","cost":0}],
                   "edges":[{"from":"I","to":"V","duration":1},{"from":"V","to":"G","duration":2}],
                   "I":"I","G":"G","t":1,"p":1}"#;
        let AnyInstance::General(g) = parse_instance(g).unwrap() else { panic!("expected a graph") };
        assert_eq!(g.arcs().len(), 4);
        assert!(FrontFormat::parse("xml").is_err());
        assert_eq!(FrontFormat::from_path(Path::new("f.json")), FrontFormat::Json);
    }
}
