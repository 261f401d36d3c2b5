//! Front enumeration: the classic and no-duplicate solvers, the pruning store and finalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinatorics::{
    count_multicombinations, difference_sorted, exponents, intersect_sorted, k_subsets, CombinatoricsError,
    MulticombinationCursor, SubMultisets,
};
use crate::model::{eps, Instance};
use crate::schedule::{bounds, evaluate, lowest_makespan, ppp_cost, Ppp, Schedule, ScheduleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Combinatorics(#[from] CombinatoricsError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Skip PPPs whose lower bound is already matched by a cheaper stored plan.
    /// Honored only on instances without overrides, where every pattern is a plain round trip
    /// and M_L is a valid per-PPP lower bound.
    pub prune: bool,
    /// Worker threads splitting the outer stream.
    pub workers: usize,
    /// Computes the exact makespan of every evaluated PPP and counts bound violations.
    pub audit_bounds: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { prune: true, workers: 1, audit_bounds: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub algorithm: String,
    pub iterations: u64,
    pub calls: u64,
    pub s_size: usize,
    pub front_size: usize,
    pub pruning_applied: bool,
    pub workers: usize,
    /// PPPs whose optimum fell outside [M_L, M_S]; only counted when auditing.
    pub bound_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub cost: f64,
    pub makespan: f64,
    pub ppp: Ppp,
    pub witness: Schedule,
}

/// Mutually non-dominated points sorted by ascending cost.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<FrontPoint>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.cost, p.makespan)).collect()
    }
}

/// Equal objective lists within ε, scaled by magnitude for large costs.
pub fn same_values(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= eps() * (1.0 + x.abs().max(y.abs()));
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| close(p.0, q.0) && close(p.1, q.1))
}

/// Position of a PPP in the enumeration; ties between equal points go to the smaller one.
type Index = (u64, u64);

#[derive(Debug, Clone, PartialEq)]
pub struct StoreEntry {
    pub cost: f64,
    pub makespan: f64,
    pub ppp: Ppp,
    index: Index,
}

/// The store S: quantized cost to the best makespan found.
///
/// A staircase of the non-dominated keys (makespan strictly decreasing in cost) answers
/// threshold queries in O(log h).
#[derive(Debug, Clone, Default)]
pub struct FrontStore {
    entries: BTreeMap<i128, StoreEntry>,
    staircase: BTreeMap<i128, f64>,
}

fn cost_key(cost: f64) -> i128 {
    (cost / eps().max(f64::MIN_POSITIVE)).round() as i128
}

impl FrontStore {
    pub fn new() -> Self {
        FrontStore::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &StoreEntry> {
        self.entries.values()
    }

    /// Best stored makespan among entries costing at most `cost`.
    pub fn threshold(&self, cost: f64) -> f64 {
        self.staircase.range(..=cost_key(cost + eps())).next_back().map_or(f64::INFINITY, |(_, &m)| m)
    }

    fn raise_staircase(&mut self, key: i128, makespan: f64) {
        if self.staircase.range(..=key).next_back().is_some_and(|(_, &m)| m <= makespan) {
            return;
        }
        let stale: Vec<i128> = self.staircase.range(key + 1..).take_while(|(_, &m)| m >= makespan).map(|(&k, _)| k).collect();
        for k in stale {
            self.staircase.remove(&k);
        }
        self.staircase.insert(key, makespan);
    }

    /// True if a stored plan costs at most `cost` and finishes by `lower_bound`.
    pub fn dominates(&self, cost: f64, lower_bound: f64) -> bool {
        self.threshold(cost) <= lower_bound + eps()
    }

    fn insert_at(&mut self, cost: f64, makespan: f64, ppp: Ppp, index: Index) {
        let e = eps();
        let entry = StoreEntry { cost, makespan, ppp, index };
        self.raise_staircase(cost_key(cost), makespan);
        match self.entries.get_mut(&cost_key(cost)) {
            None => {
                self.entries.insert(cost_key(cost), entry);
            }
            Some(old) => {
                if makespan < old.makespan - e || ((makespan - old.makespan).abs() <= e && index < old.index) {
                    *old = entry;
                }
            }
        }
    }

    pub fn insert(&mut self, cost: f64, makespan: f64, ppp: Ppp) {
        let index = (self.entries.len() as u64, 0);
        self.insert_at(cost, makespan, ppp, index);
    }

    fn merge(&mut self, other: FrontStore) {
        for (_, v) in other.entries {
            self.insert_at(v.cost, v.makespan, v.ppp, v.index);
        }
    }
}

/// Non-dominated (cost, makespan) pairs of a store, ascending cost, strictly descending makespan.
pub fn finalize_values(store: &FrontStore) -> Vec<&StoreEntry> {
    let e = eps();
    let mut all: Vec<&StoreEntry> = store.entries().collect();
    all.sort_by(|x, y| x.cost.total_cmp(&y.cost).then(x.makespan.total_cmp(&y.makespan)).then(x.index.cmp(&y.index)));
    let mut out: Vec<&StoreEntry> = Vec::new();
    for entry in all {
        match out.last() {
            Some(last) if entry.makespan >= last.makespan - e => {}
            Some(last) if (entry.cost - last.cost).abs() <= e => {
                *out.last_mut().unwrap() = entry;
            }
            _ => out.push(entry),
        }
    }
    out
}

/// Removes dominated entries and attaches a witness schedule to each point.
pub fn finalize_front(store: &FrontStore, instance: &Instance) -> Result<ParetoFront, SolveError> {
    let mut points = Vec::new();
    for entry in finalize_values(store) {
        let (m, witness) = lowest_makespan(&entry.ppp, instance)?;
        debug_assert!((m - entry.makespan).abs() <= 1e-6 * (1.0 + m.abs()), "stored {} exact {}", entry.makespan, m);
        points.push(FrontPoint { cost: entry.cost, makespan: entry.makespan, ppp: entry.ppp.clone(), witness });
    }
    Ok(ParetoFront { points })
}

/// ψ₁ Ψ-dominates ψ₂: it is no costlier and its sequential makespan beats ψ₂'s lower bound.
pub fn psi_dominates(p1: &Ppp, p2: &Ppp, instance: &Instance) -> bool {
    let e = eps();
    let (ms1, _) = bounds(p1, instance);
    let (_, ml2) = bounds(p2, instance);
    ms1 <= ml2 + e && ppp_cost(p1, instance) <= ppp_cost(p2, instance) + e
}

/// Per-worker accumulation.
struct Worker<'a> {
    instance: &'a Instance,
    store: FrontStore,
    calls: u64,
    audit: bool,
    violations: u64,
}

impl<'a> Worker<'a> {
    fn new(instance: &'a Instance, audit: bool) -> Self {
        Worker { instance, store: FrontStore::new(), calls: 0, audit, violations: 0 }
    }

    fn consider(&mut self, a: Vec<usize>, abar: Vec<usize>, b: Vec<usize>, index: Index) -> Result<(), SolveError> {
        let ppp = Ppp::new(a, abar, b, self.instance)?;
        let cost = ppp_cost(&ppp, self.instance);
        let threshold = self.store.threshold(cost);
        let ev = match evaluate(&ppp, self.instance, threshold, false) {
            Ok(ev) => ev,
            Err(ScheduleError::Inadmissible(_)) => return Ok(()),
            Err(e) => return Err(e.into()),
        };
        self.calls += 1;
        if self.audit {
            let exact = evaluate(&ppp, self.instance, f64::INFINITY, false)?.makespan;
            let (ms, ml) = bounds(&ppp, self.instance);
            let e = eps() * (1.0 + ms);
            if exact < ml - e || exact > ms + e {
                self.violations += 1;
            }
        }
        self.store.insert_at(cost, ev.makespan, ppp, index);
        Ok(())
    }
}

fn plain_pair_bound(instance: &Instance, cities: impl Iterator<Item = usize>) -> (f64, f64) {
    let (d, db, c) = (instance.d(), instance.dbar(), instance.c());
    let mut cost = 0.0;
    let mut dur = 0.0;
    for x in cities {
        cost += c[x];
        dur += d[x] + db[x];
    }
    (cost, dur / instance.p() as f64)
}

fn chunks(total: u64, workers: usize) -> Vec<(u64, u64)> {
    let w = workers.max(1) as u64;
    (0..w)
        .map(|i| (total * i / w, total * (i + 1) / w))
        .filter(|(lo, hi)| lo < hi)
        .collect()
}

fn run_workers<'a, F>(instance: &'a Instance, outer: u64, opts: &SolveOptions, body: F) -> Result<Vec<Worker<'a>>, SolveError>
where
    F: Fn(&mut Worker<'a>, u64, u64) -> Result<(), SolveError> + Sync,
{
    let parts = chunks(outer, opts.workers);
    if parts.len() <= 1 {
        let mut w = Worker::new(instance, opts.audit_bounds);
        body(&mut w, 0, outer)?;
        return Ok(vec![w]);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = parts
            .iter()
            .map(|&(lo, hi)| {
                let body = &body;
                scope.spawn(move || {
                    let mut w = Worker::new(instance, opts.audit_bounds);
                    body(&mut w, lo, hi).map(|_| w)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn assemble(instance: &Instance, algorithm: &str, iterations: u64, pruning: bool, workers: Vec<Worker<'_>>) -> Result<(ParetoFront, Stats), SolveError> {
    let nworkers = workers.len();
    let mut store = FrontStore::new();
    let mut calls = 0;
    let mut violations = 0;
    for w in workers {
        calls += w.calls;
        violations += w.violations;
        store.merge(w.store);
    }
    let front = finalize_front(&store, instance)?;
    let stats = Stats {
        algorithm: algorithm.into(),
        iterations,
        calls,
        s_size: store.len(),
        front_size: front.len(),
        pruning_applied: pruning,
        workers: nworkers,
        bound_violations: violations,
    };
    Ok((front, stats))
}

fn pruning_active(instance: &Instance, opts: &SolveOptions) -> bool {
    opts.prune && !instance.has_overrides()
}

fn cursor_at(n: usize, k: usize, skip: u64) -> MulticombinationCursor {
    let mut cur = MulticombinationCursor::new(n, k);
    for _ in 0..skip {
        cur.advance();
    }
    cur
}

/// Enumerates eastward (e) and westward (w) city multisets and their shared pairs.
pub fn solve_classic(instance: &Instance, opts: &SolveOptions) -> Result<(ParetoFront, Stats), SolveError> {
    let (n, t, p) = (instance.n(), instance.t(), instance.p());
    let ne = count_multicombinations(n, t)?;
    let nw = count_multicombinations(n, t - p)?;
    let iterations = ne.checked_mul(nw).ok_or(CombinatoricsError::Overflow { n, k: t })?;
    let prune = pruning_active(instance, opts);
    let workers = run_workers(instance, ne, opts, |w, lo, hi| {
        let mut ecur = cursor_at(n, t, lo);
        let mut inter = Vec::new();
        let (mut a, mut abar) = (Vec::new(), Vec::new());
        for ei in lo..hi {
            let e = ecur.get().expect("chunk within stream").to_vec();
            let mut wcur = MulticombinationCursor::new(n, t - p);
            let mut inner = 0u64;
            while let Some(wv) = wcur.get() {
                let skip = prune && {
                    let (c, ml) = plain_pair_bound(instance, e.iter().chain(wv).copied());
                    w.store.dominates(c, ml)
                };
                if !skip {
                    intersect_sorted(&e, wv, &mut inter);
                    let (values, bound) = exponents(&inter);
                    let mut betas = SubMultisets::new(bound);
                    while let Some(ex) = betas.get() {
                        let beta: Vec<usize> =
                            values.iter().zip(ex).flat_map(|(&v, &k)| std::iter::repeat_n(v, k)).collect();
                        difference_sorted(&e, &beta, &mut a);
                        difference_sorted(wv, &beta, &mut abar);
                        w.consider(a.clone(), abar.clone(), beta, (ei, inner))?;
                        inner += 1;
                        betas.advance();
                    }
                }
                wcur.advance();
            }
            ecur.advance();
        }
        Ok(())
    })?;
    assemble(instance, "classic", iterations, prune, workers)
}

/// Enumerates u ∈ K(n, 2t − p) where paired cities take two slots; each PPP is generated once.
pub fn solve_noduplicate(instance: &Instance, opts: &SolveOptions) -> Result<(ParetoFront, Stats), SolveError> {
    let (n, t, p) = (instance.n(), instance.t(), instance.p());
    let len = 2 * t - p;
    if len > 63 {
        return Err(CombinatoricsError::TooWide(len).into());
    }
    let nu = count_multicombinations(n, len)?;
    let prune = pruning_active(instance, opts);
    let d = instance.d();
    // admissibility order: nonincreasing d, then index
    let before = |x: usize, y: usize| d[x] > d[y] || (d[x] == d[y] && x < y);
    let workers = run_workers(instance, nu, opts, |w, lo, hi| {
        let mut ucur = cursor_at(n, len, lo);
        let mut v = Vec::with_capacity(len);
        for ui in lo..hi {
            let u = ucur.get().expect("chunk within stream").to_vec();
            ucur.advance();
            if prune {
                let (c, ml) = plain_pair_bound(instance, u.iter().copied());
                if w.store.dominates(c, ml) {
                    continue;
                }
            }
            let mut inner = 0u64;
            for mask in k_subsets(len, p)? {
                // one mask per distinct sub-multiset: chosen positions form a prefix of each run
                let canonical = (1..len).all(|i| !(u[i] == u[i - 1] && mask >> i & 1 == 1 && mask >> (i - 1) & 1 == 0));
                if !canonical {
                    continue;
                }
                let m: Vec<usize> = (0..len).filter(|&i| mask >> i & 1 == 1).map(|i| u[i]).collect();
                let last_m = m.iter().copied().reduce(|x, y| if before(x, y) { y } else { x });
                difference_sorted(&u, &m, &mut v);
                let (values, counts) = exponents(&v);
                let pair_bound: Vec<usize> = counts.iter().map(|c| c / 2).collect();
                let mut betas = SubMultisets::new(pair_bound);
                while let Some(bx) = betas.get() {
                    let rest: Vec<usize> = counts.iter().zip(bx).map(|(c, b)| c - 2 * b).collect();
                    let k = rest.iter().sum::<usize>() / 2;
                    let mut abars = SubMultisets::new(rest.clone());
                    while let Some(ax) = abars.get() {
                        if ax.iter().sum::<usize>() == k {
                            let extra_ok = values.iter().zip(&rest).zip(ax).all(|((&x, &r), &a)| {
                                r == a || last_m.is_none_or(|lm| !before(x, lm))
                            });
                            if extra_ok {
                                let mut a = m.clone();
                                let mut abar = Vec::with_capacity(k);
                                let mut beta = Vec::new();
                                for (((&x, &r), &ak), &bk) in values.iter().zip(&rest).zip(ax).zip(bx) {
                                    a.extend(std::iter::repeat_n(x, r - ak));
                                    abar.extend(std::iter::repeat_n(x, ak));
                                    beta.extend(std::iter::repeat_n(x, bk));
                                }
                                w.consider(a, abar, beta, (ui, inner))?;
                                inner += 1;
                            }
                        }
                        abars.advance();
                    }
                    betas.advance();
                }
            }
        }
        Ok(())
    })?;
    assemble(instance, "nodup", nu, prune, workers)
}
