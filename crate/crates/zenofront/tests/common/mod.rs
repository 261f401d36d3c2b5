#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zenofront::model::{GeneralInstance, RawEdge, RawGeneralInstance, Vertex};
use zenofront::{Instance, RawInstance};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ints(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(1..=5) as f64).collect()
}

/// Clique instance with integer values in [1, 5] and no central matrix.
pub fn random_clique(rng: &mut impl Rng, n: usize, t: usize, p: usize, symmetric: bool) -> Instance {
    let d = ints(rng, n);
    let dbar = if symmetric { d.clone() } else { ints(rng, n) };
    let c = ints(rng, n);
    Instance::new(d, dbar, c, t, p).expect("valid random instance")
}

/// Integer central matrix keeping every triangle over I, G and the cities; `None` when the
/// sampled (d, d̄) admit none.
pub fn metric_central(rng: &mut impl Rng, d: &[f64], dbar: &[f64]) -> Option<Vec<Vec<f64>>> {
    let n = d.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let lo = (d[i] - d[j]).abs().max((dbar[i] - dbar[j]).abs()).max(1.0);
            let hi = (d[i] + d[j]).min(dbar[i] + dbar[j]);
            if lo > hi {
                return None;
            }
            let v = rng.gen_range(lo as i64..=hi as i64) as f64;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i != j && j != k && i != k && m[i][j] + m[j][k] < m[i][k] {
                    return None;
                }
            }
        }
    }
    Some(m)
}

/// Asymmetric clique instance with a metric central matrix.
pub fn random_metric_clique(rng: &mut impl Rng, n: usize, t: usize, p: usize) -> Instance {
    loop {
        let (d, dbar, c) = (ints(rng, n), ints(rng, n), ints(rng, n));
        if let Some(central) = metric_central(rng, &d, &dbar) {
            let raw = RawInstance { n, t, p, d, dbar, c, central: Some(central), overrides: Vec::new() };
            if let Ok(inst) = Instance::try_from(raw) {
                if inst.n() == n {
                    return inst;
                }
            }
        }
    }
}

/// Connected graph on 3..=max_vertices vertices named I, G, V2, ..; each possible edge is
/// present with probability 0.6, durations and costs in [1, 5].
pub fn random_graph(rng: &mut impl Rng, max_vertices: usize, t_max: usize, p_max: usize, directed: bool) -> GeneralInstance {
    loop {
        let nv = rng.gen_range(3..=max_vertices);
        let ids: Vec<String> = (0..nv)
            .map(|i| match i {
                0 => "I".to_string(),
                1 => "G".to_string(),
                i => format!("V{i}"),
            })
            .collect();
        let mut edges = Vec::new();
        for a in 0..nv {
            for b in 0..nv {
                if a != b && (directed || a < b) && rng.gen_bool(0.6) {
                    edges.push(RawEdge { from: ids[a].clone(), to: ids[b].clone(), duration: rng.gen_range(1..=5) as f64 });
                }
            }
        }
        let p = rng.gen_range(1..=p_max);
        let t = rng.gen_range(p..=t_max);
        let raw = RawGeneralInstance {
            vertices: ids.iter().map(|id| Vertex { id: id.clone(), cost: rng.gen_range(1..=5) as f64 }).collect(),
            edges,
            initial: "I".into(),
            goal: "G".into(),
            t,
            p,
            directed,
        };
        if let Ok(g) = GeneralInstance::from_raw(raw) {
            return g;
        }
    }
}

/// The clique instance written as an undirected graph, one vertex per city, no merging.
pub fn clique_as_graph(inst: &Instance) -> GeneralInstance {
    let name = |i: usize| format!("C{i}");
    let mut vertices = vec![Vertex { id: "I".into(), cost: 0.0 }, Vertex { id: "G".into(), cost: 0.0 }];
    let mut edges = Vec::new();
    for i in 0..inst.n() {
        vertices.push(Vertex { id: name(i), cost: inst.c()[i] });
        edges.push(RawEdge { from: "I".into(), to: name(i), duration: inst.d()[i] });
        edges.push(RawEdge { from: name(i), to: "G".into(), duration: inst.dbar()[i] });
    }
    let raw = RawGeneralInstance { vertices, edges, initial: "I".into(), goal: "G".into(), t: inst.t(), p: inst.p(), directed: false };
    GeneralInstance::from_raw(raw).expect("clique graph is connected")
}

pub fn assert_same(label: &str, a: &[(f64, f64)], b: &[(f64, f64)]) {
    assert!(zenofront::same_values(a, b), "{label}: {a:?} != {b:?}");
}
