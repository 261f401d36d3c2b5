//! Property tests over randomly generated clique instances.

mod common;

use proptest::prelude::*;
use zenofront::combinatorics::multicombinations;
use zenofront::oracle::{oracle_general, oracle_instance, OracleOptions};
use zenofront::schedule::{bounds, ppp_cost, validate_schedule, ScheduleError};
use zenofront::{lowest_makespan, solve_classic, solve_noduplicate, Instance, Ppp, SolveOptions};

use common::*;

/// Every PPP of the instance, admissible or not.
fn all_ppps(inst: &Instance) -> Vec<Ppp> {
    let (n, t, p) = (inst.n(), inst.t(), inst.p());
    let mut out = Vec::new();
    for k in 0..=t - p {
        for a in multicombinations(n, k + p) {
            for abar in multicombinations(n, k) {
                for b in multicombinations(n, t - p - k) {
                    out.push(Ppp::new(a.clone(), abar.clone(), b, inst).unwrap());
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    A,
    Abar,
    B,
    Bbar,
}

/// Optimal makespan of a plain PPP by brute force: every split of its patterns into plane
/// sequences, every matching of pickups to drops at the same city, earliest-start timing.
fn brute_force_makespan(ppp: &Ppp, inst: &Instance) -> Option<f64> {
    let mut patterns: Vec<(Kind, usize)> = Vec::new();
    patterns.extend(ppp.a.iter().map(|&x| (Kind::A, x)));
    patterns.extend(ppp.abar.iter().map(|&x| (Kind::Abar, x)));
    patterns.extend(ppp.b.iter().map(|&x| (Kind::B, x)));
    patterns.extend(ppp.b.iter().map(|&x| (Kind::Bbar, x)));
    let drops: Vec<usize> = (0..patterns.len()).filter(|&i| patterns[i].0 == Kind::B).collect();
    let pickups: Vec<usize> = (0..patterns.len()).filter(|&i| patterns[i].0 == Kind::Bbar).collect();
    let mut best = f64::INFINITY;
    let mut used = vec![false; patterns.len()];
    let mut planes: Vec<Vec<usize>> = vec![Vec::new(); inst.p()];
    split(&patterns, &mut used, &mut planes, 0, false, &mut |planes| {
        for_each_matching(&drops, &pickups, &patterns, &mut |matching| {
            if let Some(m) = timing(&patterns, planes, matching, inst) {
                best = best.min(m);
            }
        });
    });
    best.is_finite().then_some(best)
}

/// Builds plane sequences one plane at a time; `at_goal` tracks the current plane's location.
fn split(patterns: &[(Kind, usize)], used: &mut [bool], planes: &mut Vec<Vec<usize>>, plane: usize, at_goal: bool, f: &mut impl FnMut(&[Vec<usize>])) {
    if plane == planes.len() {
        if used.iter().all(|&u| u) {
            f(planes);
        }
        return;
    }
    // close this plane here
    split(patterns, used, planes, plane + 1, false, f);
    for i in 0..patterns.len() {
        let (kind, _) = patterns[i];
        let fits = match kind {
            Kind::A | Kind::B => !at_goal,
            Kind::Abar | Kind::Bbar => at_goal,
        };
        // identical patterns are interchangeable: only try the first unused copy
        if used[i] || !fits || (0..i).any(|j| !used[j] && patterns[j] == patterns[i]) {
            continue;
        }
        used[i] = true;
        planes[plane].push(i);
        let next = match kind {
            Kind::A => true,
            Kind::Abar => false,
            _ => at_goal,
        };
        split(patterns, used, planes, plane, next, f);
        planes[plane].pop();
        used[i] = false;
    }
}

type Visit<'a> = dyn FnMut(&[(usize, usize)]) + 'a;

/// Every bijection from pickups to drops at the same city, as pickup -> drop pattern index.
fn for_each_matching(drops: &[usize], pickups: &[usize], patterns: &[(Kind, usize)], f: &mut impl FnMut(&[(usize, usize)])) {
    fn rec(k: usize, drops: &[usize], pickups: &[usize], patterns: &[(Kind, usize)], taken: &mut Vec<bool>, acc: &mut Vec<(usize, usize)>, f: &mut Visit) {
        if k == pickups.len() {
            f(acc);
            return;
        }
        for (j, &dr) in drops.iter().enumerate() {
            if !taken[j] && patterns[dr].1 == patterns[pickups[k]].1 {
                taken[j] = true;
                acc.push((pickups[k], dr));
                rec(k + 1, drops, pickups, patterns, taken, acc, f);
                acc.pop();
                taken[j] = false;
            }
        }
    }
    rec(0, drops, pickups, patterns, &mut vec![false; drops.len()], &mut Vec::new(), f);
}

fn timing(patterns: &[(Kind, usize)], planes: &[Vec<usize>], matching: &[(usize, usize)], inst: &Instance) -> Option<f64> {
    let (d, db) = (inst.d(), inst.dbar());
    let mut drop_time = vec![None; patterns.len()];
    let mut clock = vec![0.0f64; planes.len()];
    let mut next = vec![0usize; planes.len()];
    loop {
        let mut progressed = false;
        for r in 0..planes.len() {
            while let Some(&i) = planes[r].get(next[r]) {
                let (kind, x) = patterns[i];
                let s = clock[r];
                clock[r] = match kind {
                    Kind::A | Kind::Abar => s + d[x] + db[x],
                    Kind::B => {
                        drop_time[i] = Some(s + d[x]);
                        s + 2.0 * d[x]
                    }
                    Kind::Bbar => {
                        let dr = matching.iter().find(|(pk, _)| *pk == i).map(|&(_, dr)| dr)?;
                        match drop_time[dr] {
                            Some(t) => f64::max(s + db[x], t) + db[x],
                            None => break,
                        }
                    }
                };
                next[r] += 1;
                progressed = true;
            }
        }
        if (0..planes.len()).all(|r| next[r] == planes[r].len()) {
            return Some(clock.iter().copied().fold(0.0, f64::max));
        }
        if !progressed {
            return None;
        }
    }
}

fn small_instance(seed: u64, symmetric: bool, t_max: usize) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(1..=3);
    let p = r.gen_range(1..=2);
    let t = r.gen_range(p..=t_max);
    random_clique(&mut r, n, t, p, symmetric)
}

use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lowest_makespan_is_exact_and_bounded(seed in any::<u64>(), symmetric in any::<bool>()) {
        let inst = small_instance(seed, symmetric, 3);
        for ppp in all_ppps(&inst) {
            let expected = brute_force_makespan(&ppp, &inst);
            match lowest_makespan(&ppp, &inst) {
                Ok((m, witness)) => {
                    let (ms, ml) = bounds(&ppp, &inst);
                    prop_assert!(ml <= m + 1e-9 && m <= ms + 1e-9, "{ppp}: {ml} <= {m} <= {ms}");
                    prop_assert_eq!(expected, Some(m), "{}", ppp);
                    let report = validate_schedule(&witness, &inst);
                    prop_assert!(report.is_valid(), "{:?}", report.violations);
                    prop_assert!((report.cost - ppp_cost(&ppp, &inst)).abs() < 1e-9);
                    prop_assert!((report.makespan - m).abs() < 1e-9);
                }
                Err(ScheduleError::Inadmissible(_)) => prop_assert_eq!(expected, None),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }

    #[test]
    fn mirror_keeps_ppp_makespans(seed in any::<u64>()) {
        let inst = small_instance(seed, false, 3);
        let mirror = Instance::new(inst.dbar().to_vec(), inst.d().to_vec(), inst.c().to_vec(), inst.t(), inst.p()).unwrap();
        let spans = |x: &Instance| {
            let mut v: Vec<f64> = all_ppps(x).iter().filter_map(|p| lowest_makespan(p, x).ok()).map(|r| r.0).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        prop_assert_eq!(spans(&inst), spans(&mirror));
    }

    #[test]
    fn solvers_agree_with_oracle(seed in any::<u64>(), symmetric in any::<bool>()) {
        let inst = small_instance(seed, symmetric, 4);
        let classic = solve_classic(&inst, &SolveOptions::default()).unwrap().0.values();
        let nodup = solve_noduplicate(&inst, &SolveOptions::default()).unwrap().0.values();
        let oracle = oracle_instance(&inst, &OracleOptions::default()).unwrap().values();
        prop_assert!(zenofront::same_values(&classic, &nodup), "{classic:?} vs {nodup:?}");
        prop_assert!(zenofront::same_values(&classic, &oracle), "{classic:?} vs {oracle:?}");
    }

    #[test]
    fn pruning_never_changes_the_front(seed in any::<u64>(), symmetric in any::<bool>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=5);
        let t = r.gen_range(2..=5);
        let inst = random_clique(&mut r, n, t, 2.min(t), symmetric);
        let off = SolveOptions { prune: false, ..SolveOptions::default() };
        for solve in [solve_classic, solve_noduplicate] {
            let (on, stats) = solve(&inst, &SolveOptions::default()).unwrap();
            prop_assert!(stats.pruning_applied);
            prop_assert_eq!(on.values(), solve(&inst, &off).unwrap().0.values());
        }
    }

    #[test]
    fn merged_duplicates_keep_the_front(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = r.gen_range(1..=3);
        let p = r.gen_range(1..=t.min(2));
        let base = random_clique(&mut r, 2, t, p, false);
        // plant a copy of city 0
        let mut raw = base.to_raw();
        raw.n += 1;
        raw.d.push(raw.d[0]);
        raw.dbar.push(raw.dbar[0]);
        raw.c.push(raw.c[0]);
        let unmerged = Instance::new(raw.d.clone(), raw.dbar.clone(), raw.c.clone(), t, p).unwrap();
        prop_assert!(unmerged.n() < raw.n);
        let graph = clique_as_graph_raw(&raw);
        let oracle = oracle_general(&graph, &OracleOptions::default()).unwrap().values();
        let solved = solve_classic(&unmerged, &SolveOptions::default()).unwrap().0.values();
        prop_assert!(zenofront::same_values(&oracle, &solved), "{oracle:?} vs {solved:?}");
    }

    #[test]
    fn validate_is_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=4);
        let inst = random_metric_clique(&mut r, n, 3, 2);
        let again = zenofront::model::validate(inst.to_raw()).unwrap();
        prop_assert_eq!(&again, &inst);
        let max_gap = inst.d().iter().zip(inst.dbar()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert_eq!(inst.is_symmetric(), max_gap <= zenofront::eps());
    }

    #[test]
    fn stats_are_reproducible(seed in any::<u64>()) {
        let inst = small_instance(seed, false, 4);
        for solve in [solve_classic, solve_noduplicate] {
            prop_assert_eq!(solve(&inst, &SolveOptions::default()).unwrap().1, solve(&inst, &SolveOptions::default()).unwrap().1);
        }
    }

    #[test]
    fn oracle_ignores_city_labels(seed in any::<u64>()) {
        let inst = small_instance(seed, false, 3);
        let n = inst.n();
        let perm: Vec<usize> = (0..n).rev().collect();
        let pick = |xs: &[f64]| perm.iter().map(|&i| xs[i]).collect::<Vec<_>>();
        let relabeled = Instance::new(pick(inst.d()), pick(inst.dbar()), pick(inst.c()), inst.t(), inst.p()).unwrap();
        let a = oracle_instance(&inst, &OracleOptions::default()).unwrap().values();
        let b = oracle_instance(&relabeled, &OracleOptions::default()).unwrap().values();
        prop_assert_eq!(a, b);
    }
}

fn clique_as_graph_raw(raw: &zenofront::RawInstance) -> zenofront::model::GeneralInstance {
    use zenofront::model::{GeneralInstance, RawEdge, RawGeneralInstance, Vertex};
    let name = |i: usize| format!("C{i}");
    let mut vertices = vec![Vertex { id: "I".into(), cost: 0.0 }, Vertex { id: "G".into(), cost: 0.0 }];
    let mut edges = Vec::new();
    for i in 0..raw.n {
        vertices.push(Vertex { id: name(i), cost: raw.c[i] });
        edges.push(RawEdge { from: "I".into(), to: name(i), duration: raw.d[i] });
        edges.push(RawEdge { from: name(i), to: "G".into(), duration: raw.dbar[i] });
    }
    GeneralInstance::from_raw(RawGeneralInstance { vertices, edges, initial: "I".into(), goal: "G".into(), t: raw.t, p: raw.p, directed: false }).unwrap()
}

#[test]
fn doubled_leg_budget_finds_nothing_better() {
    for seed in 0..12 {
        let inst = small_instance(seed, seed % 2 == 0, 3);
        let base = oracle_instance(&inst, &OracleOptions::default()).unwrap();
        let wide = oracle_instance(&inst, &OracleOptions { legs: Some(2 * base.legs), unchecked: false }).unwrap();
        assert_same(&format!("seed {seed}"), &base.values(), &wide.values());
    }
}

#[test]
fn monotone_in_planes() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let n = r.gen_range(1..=4);
        let t = r.gen_range(3..=5);
        let one = random_clique(&mut r, n, t, 1, seed % 2 == 0);
        let fewer = solve_noduplicate(&one, &SolveOptions::default()).unwrap().0.values();
        let more = solve_noduplicate(&one.with_counts(t, 2).unwrap(), &SolveOptions::default()).unwrap().0.values();
        for (c, m) in &fewer {
            assert!(more.iter().any(|(c2, m2)| c2 <= c && m2 <= m), "seed {seed}: ({c}, {m}) not covered by {more:?}");
        }
    }
}
