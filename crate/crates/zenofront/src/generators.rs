//! Parametric benchmark instances built from closed function families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GeneralInstance, GraphError, Instance, ModelError, RawEdge, RawGeneralInstance, Vertex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("{field}[{index}] = {value} is not positive")]
    NonPositive { field: &'static str, index: usize, value: f64 },
    #[error("jitter must lie in [0, 1), got {0}")]
    BadJitter(f64),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("{0}")]
    BadShape(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// i
    Linear,
    /// √i
    Sqrt,
    /// ln(i + 1)
    Log1p,
    /// (5/3)·i + (i mod 2)
    AffineMod,
}

impl Family {
    pub fn eval(self, i: usize) -> f64 {
        let x = i as f64;
        match self {
            Family::Linear => x,
            Family::Sqrt => x.sqrt(),
            Family::Log1p => x.ln_1p(),
            Family::AffineMod => 5.0 / 3.0 * x + (i % 2) as f64,
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        Some(match name {
            "linear" | "lin" => Family::Linear,
            "sqrt" => Family::Sqrt,
            "log1p" | "log" => Family::Log1p,
            "affine_mod" | "mod" => Family::AffineMod,
            _ => return None,
        })
    }
}

/// One generated sequence: `scale · family(i)` at i = 1..n, or at i = n..1 when reversed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub family: Family,
    #[serde(default)]
    pub reversed: bool,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Sequence {
    pub fn new(family: Family) -> Sequence {
        Sequence { family, reversed: false, scale: 1.0 }
    }

    pub fn reversed(family: Family) -> Sequence {
        Sequence { family, reversed: true, scale: 1.0 }
    }

    fn values(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|i| self.scale * self.family.eval(if self.reversed { n + 1 - i } else { i }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub t: usize,
    pub p: usize,
    pub d: Sequence,
    pub dbar: Sequence,
    pub c: Sequence,
    /// Seed of the multiplicative jitter; no jitter when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Each value is multiplied by a uniform factor in [1 - jitter, 1 + jitter].
    #[serde(default)]
    pub jitter: f64,
}

impl GeneratorSpec {
    pub fn new(n: usize, t: usize, p: usize, d: Sequence, dbar: Sequence, c: Sequence) -> GeneratorSpec {
        GeneratorSpec { n, t, p, d, dbar, c, seed: None, jitter: 0.0 }
    }
}

/// Evaluates the spec and validates the result. Same spec and seed give the same instance.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance, GenError> {
    if !(0.0..1.0).contains(&spec.jitter) {
        return Err(GenError::BadJitter(spec.jitter));
    }
    let mut rng = spec.seed.map(ChaCha8Rng::seed_from_u64);
    let mut field = |name: &'static str, seq: &Sequence| -> Result<Vec<f64>, GenError> {
        let mut xs = seq.values(spec.n);
        if let Some(rng) = rng.as_mut() {
            for x in &mut xs {
                *x *= 1.0 + spec.jitter * rng.gen_range(-1.0..=1.0);
            }
        }
        match xs.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            Some(index) => Err(GenError::NonPositive { field: name, index, value: xs[index] }),
            None => Ok(xs),
        }
    };
    let d = field("d", &spec.d)?;
    let dbar = field("dbar", &spec.dbar)?;
    let c = field("c", &spec.c)?;
    Ok(Instance::new(d, dbar, c, spec.t, spec.p)?)
}

/// Regression family of the iteration tables: d = d̄ = i, c = n + 1 - i, t = n, p = 2.
pub fn table_spec(n: usize) -> GeneratorSpec {
    GeneratorSpec::new(n, n, 2, Sequence::new(Family::Linear), Sequence::new(Family::Linear), Sequence::reversed(Family::Linear))
}

/// Named front-shape presets at n = 7, t = 8, p = 3, written `d_dbar_c`.
pub const PRESETS: [&str; 4] = ["lin_lin_log", "lin_log_lin", "lin_sqrt_log", "sqrt_log_mod"];

/// Preset by name. Costs run in reversed order so cheap cities are the slow ones.
pub fn preset(name: &str) -> Result<GeneratorSpec, GenError> {
    let parts: Vec<Family> = name.split('_').map(Family::parse).collect::<Option<_>>().unwrap_or_default();
    if parts.len() != 3 || !PRESETS.contains(&name) {
        return Err(GenError::UnknownPreset(name.to_string()));
    }
    Ok(GeneratorSpec::new(7, 8, 3, Sequence::new(parts[0]), Sequence::new(parts[1]), Sequence::reversed(parts[2])))
}

fn directed_graph(vertices: Vec<(String, f64)>, edges: Vec<(String, String, f64)>) -> Result<GeneralInstance, GenError> {
    let raw = RawGeneralInstance {
        vertices: vertices.into_iter().map(|(id, cost)| Vertex { id, cost }).collect(),
        edges: edges.into_iter().map(|(from, to, duration)| RawEdge { from, to, duration }).collect(),
        initial: "I".into(),
        goal: "G".into(),
        t: 1,
        p: 1,
        directed: true,
    };
    Ok(GeneralInstance::from_raw(raw)?)
}

/// Chain of (n - 1) / 2 diamonds between I and G, n vertices in total.
///
/// Diamond k (1-based) joins spine vertices by a bypass arc of duration n²/4 + 1 and by a detour
/// through `C{2k-1}` with two arcs of duration k. The detour vertex costs (n - 2k + 1) / 2 and
/// the inner spine vertices `C{2k}` cost 1. Built with t = p = 1.
pub fn gen_hansen(n: usize) -> Result<GeneralInstance, GenError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(GenError::BadShape(format!("hansen graph needs an odd n >= 3, got {n}")));
    }
    let m = (n - 1) / 2;
    let nf = n as f64;
    let spine = |k: usize| match k {
        0 => "I".to_string(),
        k if k == m => "G".to_string(),
        k => format!("C{}", 2 * k),
    };
    let mut vertices = vec![("I".to_string(), 0.0), ("G".to_string(), 0.0)];
    let mut edges = Vec::new();
    for k in 1..=m {
        let detour = format!("C{}", 2 * k - 1);
        vertices.push((detour.clone(), (nf - (2 * k - 1) as f64) / 2.0));
        if k < m {
            vertices.push((spine(k), 1.0));
        }
        let w = k as f64;
        edges.push((spine(k - 1), spine(k), nf * nf / 4.0 + 1.0));
        edges.push((spine(k - 1), detour.clone(), w));
        edges.push((detour, spine(k), w));
    }
    directed_graph(vertices, edges)
}

/// √n layers of √n vertices between I and G; consecutive layers are fully joined by unit arcs,
/// the end arcs last n². Every inner vertex costs 1. Built with t = p = 1.
pub fn gen_layered(n: usize) -> Result<GeneralInstance, GenError> {
    let r = (1..=n).find(|r| r * r >= n).unwrap_or(0);
    if n < 4 || r * r != n {
        return Err(GenError::BadShape(format!("layered graph needs a perfect square n >= 4, got {n}")));
    }
    let name = |layer: usize, k: usize| format!("L{layer}_{k}");
    let mut vertices = vec![("I".to_string(), 0.0), ("G".to_string(), 0.0)];
    let mut edges = Vec::new();
    let end = (n * n) as f64;
    for layer in 0..r {
        for k in 0..r {
            vertices.push((name(layer, k), 1.0));
            if layer == 0 {
                edges.push(("I".to_string(), name(0, k), end));
            }
            if layer + 1 == r {
                edges.push((name(layer, k), "G".to_string(), end));
            } else {
                edges.extend((0..r).map(|j| (name(layer, k), name(layer + 1, j), 1.0)));
            }
        }
    }
    directed_graph(vertices, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_values() {
        assert_eq!(Family::Sqrt.eval(4), 2.0);
        assert_eq!(Family::Linear.eval(3), 3.0);
        assert!((Family::Log1p.eval(1) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(Family::AffineMod.eval(3), 6.0);
    }

    #[test]
    fn linear_example() {
        let lin = Sequence::new(Family::Linear);
        let inst = generate(&GeneratorSpec::new(3, 3, 2, lin, lin, lin)).unwrap();
        assert_eq!(inst.d(), &[1.0, 2.0, 3.0]);
        assert_eq!(inst.c(), &[1.0, 2.0, 3.0]);
        assert!(inst.is_symmetric());
        assert_eq!(generate(&table_spec(3)).unwrap().c(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn jitter_is_seeded() {
        let mut spec = table_spec(5);
        spec.seed = Some(9);
        spec.jitter = 0.2;
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        assert_ne!(a, generate(&table_spec(5)).unwrap());
        spec.jitter = 1.5;
        assert_eq!(generate(&spec), Err(GenError::BadJitter(1.5)));
    }

    #[test]
    fn rejects_non_positive() {
        let mut spec = table_spec(3);
        spec.d.scale = 0.0;
        assert!(matches!(generate(&spec), Err(GenError::NonPositive { field: "d", .. })));
    }

    #[test]
    fn presets_resolve() {
        for name in PRESETS {
            let inst = generate(&preset(name).unwrap()).unwrap();
            assert_eq!((inst.n(), inst.t(), inst.p()), (7, 8, 3));
        }
        assert!(preset("lin_lin").is_err());
    }

    #[test]
    fn graph_shapes() {
        assert!(gen_hansen(4).is_err());
        assert!(gen_layered(5).is_err());
        let h = gen_hansen(5).unwrap();
        assert_eq!((h.vertices().len(), h.arcs().len()), (5, 6));
        let l = gen_layered(9).unwrap();
        assert_eq!((l.vertices().len(), l.arcs().len()), (11, 3 + 9 + 9 + 3));
    }
}
