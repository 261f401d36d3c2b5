//! PPP cost and bounds, optimal makespan with witness schedules, and schedule validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{eps, is_unreachable, GeneralInstance, Instance, Location, PatternKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("PPP cardinalities (|a|, |abar|, |b|) = ({a}, {abar}, {b}) do not match t = {t}, p = {p}")]
    Cardinality { a: usize, abar: usize, b: usize, t: usize, p: usize },
    #[error("city {0} is out of range")]
    CityOutOfRange(usize),
    #[error("PPP is not admissible: {0}")]
    Inadmissible(String),
}

/// A possibly Pareto-optimal plan skeleton.
///
/// Each multiset is kept in nonincreasing order of d, ties by ascending city index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ppp {
    pub a: Vec<usize>,
    pub abar: Vec<usize>,
    pub b: Vec<usize>,
}

fn sort_by_d(xs: &mut [usize], d: &[f64]) {
    xs.sort_by(|&x, &y| d[y].total_cmp(&d[x]).then(x.cmp(&y)));
}

impl Ppp {
    pub fn new(mut a: Vec<usize>, mut abar: Vec<usize>, mut b: Vec<usize>, instance: &Instance) -> Result<Ppp, ScheduleError> {
        let (t, p) = (instance.t(), instance.p());
        let k = abar.len();
        if a.len() != k + p || k + p > t || b.len() != t - p - k {
            return Err(ScheduleError::Cardinality { a: a.len(), abar: k, b: b.len(), t, p });
        }
        if let Some(&x) = a.iter().chain(&abar).chain(&b).find(|&&x| x >= instance.n()) {
            return Err(ScheduleError::CityOutOfRange(x));
        }
        let d = instance.d();
        sort_by_d(&mut a, d);
        sort_by_d(&mut abar, d);
        sort_by_d(&mut b, d);
        Ok(Ppp { a, abar, b })
    }

    pub fn k(&self) -> usize {
        self.abar.len()
    }

    /// Listing form `(a,..)(abar,..){b,..}` with 0-based city indices.
    pub fn render(&self) -> String {
        let part = |xs: &[usize]| xs.iter().map(|x| format!("{x},")).collect::<String>();
        format!("({})({}){{{}}}", part(&self.a), part(&self.abar), part(&self.b))
    }
}

impl fmt::Display for Ppp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Total duration of one pattern, including the bridge hop for bridged A/Ā.
pub fn pattern_duration(instance: &Instance, city: usize, kind: PatternKind) -> f64 {
    let s = instance.pattern(city, kind);
    let hop = match (kind, instance.bridge(city)) {
        (PatternKind::A | PatternKind::Abar, Some(b)) => b.hop,
        _ => 0.0,
    };
    s.first + hop + s.last
}

pub fn ppp_cost(ppp: &Ppp, instance: &Instance) -> f64 {
    let c = |x: usize, k: PatternKind| instance.pattern(x, k).cost;
    ppp.a.iter().map(|&x| c(x, PatternKind::A)).sum::<f64>()
        + ppp.abar.iter().map(|&x| c(x, PatternKind::Abar)).sum::<f64>()
        + ppp.b.iter().map(|&x| c(x, PatternKind::B) + c(x, PatternKind::Bbar)).sum::<f64>()
}

/// Sequential makespan M_S and perfect-sharing bound M_L = M_S / p.
pub fn bounds(ppp: &Ppp, instance: &Instance) -> (f64, f64) {
    let dur = |x: usize, k: PatternKind| pattern_duration(instance, x, k);
    let ms = ppp.a.iter().map(|&x| dur(x, PatternKind::A)).sum::<f64>()
        + ppp.abar.iter().map(|&x| dur(x, PatternKind::Abar)).sum::<f64>()
        + ppp.b.iter().map(|&x| dur(x, PatternKind::B) + dur(x, PatternKind::Bbar)).sum::<f64>();
    (ms, ms / instance.p() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub from: Location,
    pub to: Location,
    /// Traveler aboard, if any.
    pub passenger: Option<usize>,
    pub duration: f64,
    pub start: f64,
    pub end: f64,
    /// Landing cost charged on arrival at `to`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub planes: Vec<Vec<Leg>>,
    /// Per traveler, the time it is first left at a central city.
    pub handoffs: Vec<Option<f64>>,
}

impl Schedule {
    pub fn makespan(&self) -> f64 {
        self.planes.iter().filter_map(|legs| legs.last()).map(|l| l.end).fold(0.0, f64::max)
    }

    pub fn cost(&self) -> f64 {
        self.planes.iter().flatten().map(|l| l.cost).sum()
    }

    /// One arrow-notation line per plane, e.g. `I -> C0 -> G`.
    pub fn render_with(&self, name: impl Fn(Location) -> String) -> Vec<String> {
        self.planes
            .iter()
            .map(|legs| {
                let mut stops = vec![name(legs.first().map_or(Location::Initial, |l| l.from))];
                stops.extend(legs.iter().map(|l| name(l.to)));
                stops.join(" -> ")
            })
            .collect()
    }

    pub fn render(&self) -> Vec<String> {
        self.render_with(Location::label)
    }
}

const NO_CHAIN: u8 = u8::MAX;

/// One pattern occurrence inside a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Item {
    kind: PatternKind,
    city: usize,
    first: f64,
    hop: f64,
    last: f64,
    bridged: bool,
    chain: u8,
}

impl Item {
    fn total(&self) -> f64 {
        self.first + self.hop + self.last
    }

    fn same_shape(&self, other: &Item) -> bool {
        self.kind == other.kind && self.city == other.city && self.chain == other.chain
    }

    fn starts_at_initial(&self) -> bool {
        matches!(self.kind, PatternKind::A | PatternKind::B)
    }

    fn ends_at_initial(&self) -> bool {
        matches!(self.kind, PatternKind::Abar | PatternKind::B)
    }
}

fn make_item(instance: &Instance, city: usize, kind: PatternKind) -> Item {
    let s = instance.pattern(city, kind);
    let bridge = instance.bridge(city);
    let bridged = bridge.is_some() && matches!(kind, PatternKind::A | PatternKind::Abar);
    Item {
        kind,
        city,
        first: s.first,
        hop: if bridged { bridge.map_or(0.0, |b| b.hop) } else { 0.0 },
        last: s.last,
        bridged,
        chain: NO_CHAIN,
    }
}

/// Items of a PPP plus the coupling of B/B̄ chains to bridges.
#[derive(Debug, Clone)]
struct Prepared {
    a: Vec<Item>,
    abar: Vec<Item>,
    /// (B, B̄) per chain; chain id = position.
    chains: Vec<(Item, Item)>,
    coupled: Vec<bool>,
}

impl Prepared {
    fn any_coupled(&self) -> bool {
        self.coupled.iter().any(|&c| c)
    }
}

/// Expands a PPP into every admissible coupling of chains to bridges.
fn prepare(ppp: &Ppp, instance: &Instance) -> Result<Vec<Prepared>, ScheduleError> {
    if ppp.b.len() >= NO_CHAIN as usize {
        return Err(ScheduleError::Inadmissible("too many paired cities".into()));
    }
    let base_a: Vec<Item> = ppp.a.iter().map(|&x| make_item(instance, x, PatternKind::A)).collect();
    let base_abar: Vec<Item> = ppp.abar.iter().map(|&x| make_item(instance, x, PatternKind::Abar)).collect();
    let chains: Vec<(Item, Item)> = ppp
        .b
        .iter()
        .enumerate()
        .map(|(c, &x)| {
            let mut b = make_item(instance, x, PatternKind::B);
            let mut bb = make_item(instance, x, PatternKind::Bbar);
            b.chain = c as u8;
            bb.chain = c as u8;
            (b, bb)
        })
        .collect();
    for it in base_a.iter().chain(&base_abar).chain(chains.iter().flat_map(|(b, bb)| [b, bb])) {
        if is_unreachable(it.total()) {
            return Err(ScheduleError::Inadmissible(format!("{} at city {} is unflyable", it.kind, it.city)));
        }
    }

    // per bridged city: chains there, and the admissible numbers of swap couplings
    let mut bridged_cities: Vec<usize> = ppp.b.iter().copied().filter(|&x| instance.bridge(x).is_some()).collect();
    bridged_cities.dedup();
    let mut options: Vec<(usize, usize, usize)> = Vec::new(); // (city, lo, hi)
    for &x in &bridged_cities {
        let nb = ppp.b.iter().filter(|&&y| y == x).count();
        let na = ppp.a.iter().filter(|&&y| y == x).count();
        let nab = ppp.abar.iter().filter(|&&y| y == x).count();
        if nb > na + nab {
            return Err(ScheduleError::Inadmissible(format!(
                "city {x} has {nb} paired entries but only {} bridges",
                na + nab
            )));
        }
        options.push((x, nb.saturating_sub(nab), nb.min(na)));
    }

    let mut out = Vec::new();
    let mut swaps: Vec<usize> = options.iter().map(|o| o.1).collect();
    loop {
        let mut prep = Prepared {
            a: base_a.clone(),
            abar: base_abar.clone(),
            chains: chains.clone(),
            coupled: vec![false; chains.len()],
        };
        for (oi, &(x, _, _)) in options.iter().enumerate() {
            let mut a_slots = prep.a.iter_mut().filter(|it| it.city == x);
            let mut abar_slots = prep.abar.iter_mut().filter(|it| it.city == x);
            for (c, (b, _)) in chains.iter().enumerate().filter(|(_, (b, _))| b.city == x) {
                let slot = if (0..c).filter(|&e| chains[e].0.city == x).count() < swaps[oi] {
                    a_slots.next()
                } else {
                    abar_slots.next()
                };
                let slot = slot.expect("coupling counts checked above");
                slot.chain = b.chain;
                prep.coupled[c] = true;
            }
        }
        out.push(prep);
        // odometer over swap counts
        let mut i = 0;
        loop {
            if i == options.len() {
                return Ok(out);
            }
            if swaps[i] < options[i].2 {
                swaps[i] += 1;
                break;
            }
            swaps[i] = options[i].1;
            i += 1;
        }
    }
}

/// Per-item leg start times recorded during simulation.
type Timing = Vec<Vec<[f64; 3]>>;

/// Runs per-plane item sequences honoring handoff dependencies.
///
/// Returns the makespan, or `None` if the sequences deadlock.
fn simulate(planes: &[Vec<Item>], coupled: &[bool], mut timing: Option<&mut Timing>) -> Option<f64> {
    let nc = coupled.len();
    let mut ev1 = vec![f64::NAN; nc];
    let mut ev2 = vec![f64::NAN; nc];
    let mut pos = vec![0usize; planes.len()];
    let mut clock = vec![0.0f64; planes.len()];
    if let Some(t) = timing.as_deref_mut() {
        *t = planes.iter().map(|seq| vec![[0.0; 3]; seq.len()]).collect();
    }
    loop {
        let mut progress = false;
        let mut done = true;
        for (q, seq) in planes.iter().enumerate() {
            while let Some(it) = seq.get(pos[q]) {
                let s = clock[q];
                let c = it.chain as usize;
                let (starts, end) = match (it.kind, it.chain) {
                    (PatternKind::B, _) => {
                        let drop = s + it.first;
                        ev1[c] = drop;
                        if !coupled[c] {
                            ev2[c] = drop;
                        }
                        ([s, drop, 0.0], drop + it.last)
                    }
                    (PatternKind::Bbar, _) => {
                        if ev2[c].is_nan() {
                            break;
                        }
                        let pick = (s + it.first).max(ev2[c]);
                        ([s, pick, 0.0], pick + it.last)
                    }
                    (_, NO_CHAIN) => {
                        let m = s + it.first;
                        ([s, m, m + it.hop], m + it.hop + it.last)
                    }
                    (PatternKind::A, _) => {
                        let dropj = s + it.first;
                        if ev2[c].is_nan() {
                            ev2[c] = dropj;
                            progress = true;
                        }
                        if ev1[c].is_nan() {
                            break;
                        }
                        let pick = (dropj + it.hop).max(ev1[c]);
                        ([s, dropj, pick], pick + it.last)
                    }
                    (PatternKind::Abar, _) => {
                        if ev1[c].is_nan() {
                            break;
                        }
                        let pick = (s + it.first).max(ev1[c]);
                        ev2[c] = pick + it.hop;
                        ([s, pick, pick + it.hop], pick + it.hop + it.last)
                    }
                };
                if let Some(t) = timing.as_deref_mut() {
                    t[q][pos[q]] = starts;
                }
                clock[q] = end;
                pos[q] += 1;
                progress = true;
            }
            if pos[q] < seq.len() {
                done = false;
            }
        }
        if done {
            return Some(clock.iter().copied().fold(0.0, f64::max));
        }
        if !progress {
            return None;
        }
    }
}

/// Ordered items per plane plus chain couplings: a complete plan.
#[derive(Debug, Clone)]
struct Plan {
    planes: Vec<Vec<Item>>,
    coupled: Vec<bool>,
}

impl Plan {
    fn makespan(&self) -> Option<f64> {
        simulate(&self.planes, &self.coupled, None)
    }
}

fn by_total_desc(items: &mut [Item]) {
    items.sort_by(|x, y| y.total().total_cmp(&x.total()).then(x.city.cmp(&y.city)));
}

fn min_busy(busy: &[f64], cands: impl Iterator<Item = usize>) -> Option<usize> {
    cands.min_by(|&x, &y| busy[x].total_cmp(&busy[y]).then(x.cmp(&y)))
}

/// The four-step distribution for one coupling.
fn greedy_plan(prep: &Prepared, p: usize) -> Plan {
    let mut west: Vec<Vec<Item>> = vec![Vec::new(); p];
    let mut mid: Vec<Vec<Item>> = vec![Vec::new(); p];
    let mut east: Vec<Vec<Item>> = vec![Vec::new(); p];
    let mut busy = vec![0.0f64; p];

    let mut order: Vec<usize> = (0..prep.chains.len()).collect();
    order.sort_by(|&x, &y| {
        let w = |c: usize| prep.chains[c].0.total() + prep.chains[c].1.total();
        w(y).total_cmp(&w(x)).then(prep.chains[x].0.city.cmp(&prep.chains[y].0.city))
    });
    // step 1: long halves
    for &c in &order {
        let (b, bb) = prep.chains[c];
        let q = min_busy(&busy, 0..p).unwrap();
        if b.total() >= bb.total() {
            west[q].push(b);
            busy[q] += b.total();
        } else {
            east[q].insert(0, bb);
            busy[q] += bb.total();
        }
    }
    // step 2: one long A per plane
    let mut a = prep.a.clone();
    let mut abar = prep.abar.clone();
    by_total_desc(&mut a);
    by_total_desc(&mut abar);
    let mut rest_a = a.split_off(p);
    let mut free: Vec<bool> = vec![true; p];
    let mut last_is_a = vec![true; p];
    for it in a {
        let q = min_busy(&busy, (0..p).filter(|&q| free[q])).unwrap();
        free[q] = false;
        mid[q].push(it);
        busy[q] += it.total();
    }
    // step 3: alternate Ā and A on the least busy plane that can take one
    rest_a.reverse();
    abar.reverse();
    while !rest_a.is_empty() || !abar.is_empty() {
        let q = min_busy(
            &busy,
            (0..p).filter(|&q| if last_is_a[q] { !abar.is_empty() } else { !rest_a.is_empty() }),
        )
        .expect("alternation keeps counts balanced");
        let it = if last_is_a[q] { abar.pop() } else { rest_a.pop() }.unwrap();
        last_is_a[q] = !last_is_a[q];
        mid[q].insert(0, it);
        busy[q] += it.total();
    }
    // step 4: short halves
    for &c in &order {
        let (b, bb) = prep.chains[c];
        let q = min_busy(&busy, 0..p).unwrap();
        if b.total() >= bb.total() {
            east[q].insert(0, bb);
            busy[q] += bb.total();
        } else {
            west[q].push(b);
            busy[q] += b.total();
        }
    }
    let planes = (0..p)
        .map(|q| west[q].iter().chain(&mid[q]).chain(&east[q]).copied().collect())
        .collect();
    Plan { planes, coupled: prep.coupled.clone() }
}

fn best_greedy(preps: &[Prepared], p: usize) -> (f64, Plan) {
    let mut best: Option<(f64, Plan)> = None;
    for prep in preps {
        let plan = greedy_plan(prep, p);
        let m = plan.makespan().expect("canonical greedy order cannot deadlock");
        if best.as_ref().is_none_or(|(bm, _)| m < *bm) {
            best = Some((m, plan));
        }
    }
    best.expect("at least one coupling")
}

/// The literal four-step greedy schedule; not optimal in general.
pub fn four_step_schedule(ppp: &Ppp, instance: &Instance) -> Result<(f64, Schedule), ScheduleError> {
    let preps = prepare(ppp, instance)?;
    let (m, plan) = best_greedy(&preps, instance.p());
    Ok((m, build_schedule(&plan, instance)))
}

/// Outcome of a bounded evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    /// Achievable makespan; optimal whenever below the threshold given.
    pub makespan: f64,
    plan: Option<Plan>,
}

/// Searches for the optimum, only trying to beat `threshold`.
///
/// The result is exact whenever it is below `threshold`; otherwise it is the greedy makespan.
pub(crate) fn evaluate(ppp: &Ppp, instance: &Instance, threshold: f64, keep_plan: bool) -> Result<Evaluation, ScheduleError> {
    let preps = prepare(ppp, instance)?;
    let p = instance.p();
    let (gm, gplan) = best_greedy(&preps, p);
    let (_, ml) = bounds(ppp, instance);
    let eps = eps();
    let mut best = gm;
    let mut plan = keep_plan.then_some(gplan);
    let mut target = gm.min(threshold);
    for prep in &preps {
        if target <= ml + eps {
            break;
        }
        let found = if prep.any_coupled() {
            exact_coupled(prep, p, target, ml)
        } else {
            exact_plain(prep, p, target, ml)
        };
        if let Some((m, pl)) = found {
            target = m;
            if m < best {
                best = m;
                if keep_plan {
                    plan = Some(pl);
                }
            }
        }
    }
    Ok(Evaluation { makespan: best, plan })
}

/// Minimal makespan over all schedules realizing the PPP, with one witness.
pub fn lowest_makespan(ppp: &Ppp, instance: &Instance) -> Result<(f64, Schedule), ScheduleError> {
    let ev = evaluate(ppp, instance, f64::INFINITY, true)?;
    let plan = ev.plan.expect("plan requested");
    Ok((ev.makespan, build_schedule(&plan, instance)))
}

struct PlainSearch<'a> {
    items: Vec<Item>,
    p: usize,
    chains: &'a [(Item, Item)],
    coupled: &'a [bool],
    ml: f64,
    eps: f64,
    best: f64,
    best_plan: Option<Plan>,
    assign: Vec<usize>,
    load: Vec<f64>,
    na: Vec<usize>,
    nab: Vec<usize>,
    rem_a: usize,
    rem_abar: usize,
}

/// Branch and bound over plane assignments for plans without coupled chains.
///
/// Every plane is canonical: B halves, then A (Ā A)*, then B̄ halves. Returns a plan strictly
/// better than `bound` if one exists.
fn exact_plain(prep: &Prepared, p: usize, bound: f64, ml: f64) -> Option<(f64, Plan)> {
    let mut items: Vec<Item> = prep.a.iter().chain(&prep.abar).copied().collect();
    for (b, bb) in &prep.chains {
        // chain ids are re-matched at the leaves
        items.push(Item { chain: NO_CHAIN, ..*b });
        items.push(Item { chain: NO_CHAIN, ..*bb });
    }
    items.sort_by(|x, y| {
        y.total()
            .total_cmp(&x.total())
            .then(x.kind.cmp(&y.kind))
            .then(x.city.cmp(&y.city))
    });
    let n = items.len();
    let mut s = PlainSearch {
        rem_a: prep.a.len(),
        rem_abar: prep.abar.len(),
        items,
        p,
        chains: &prep.chains,
        coupled: &prep.coupled,
        ml,
        eps: eps(),
        best: bound,
        best_plan: None,
        assign: vec![0; n],
        load: vec![0.0; p],
        na: vec![0; p],
        nab: vec![0; p],
    };
    s.dfs(0);
    s.best_plan.map(|pl| (s.best, pl))
}

impl PlainSearch<'_> {
    fn feasible_counts(&self) -> bool {
        let (mut need_a, mut need_abar) = (0usize, 0usize);
        for q in 0..self.p {
            let want = self.nab[q] + 1;
            if self.na[q] < want {
                need_a += want - self.na[q];
            } else {
                need_abar += self.na[q] - want;
            }
        }
        need_a <= self.rem_a && need_abar <= self.rem_abar
    }

    fn done(&self) -> bool {
        self.best_plan.is_some() && self.best <= self.ml + self.eps
    }

    fn dfs(&mut self, idx: usize) {
        if self.done() {
            return;
        }
        if idx == self.items.len() {
            self.leaf();
            return;
        }
        let it = self.items[idx];
        let lo = if idx > 0 && self.items[idx - 1].same_shape(&it) { self.assign[idx - 1] } else { 0 };
        for q in lo..self.p {
            if self.load[q] == 0.0 && self.na[q] == 0 && self.nab[q] == 0 && (0..q).any(|r| self.load[r] == 0.0 && self.na[r] == 0 && self.nab[r] == 0) {
                continue;
            }
            let nl = self.load[q] + it.total();
            if nl >= self.best - self.eps {
                continue;
            }
            self.assign[idx] = q;
            self.load[q] = nl;
            match it.kind {
                PatternKind::A => {
                    self.na[q] += 1;
                    self.rem_a -= 1;
                }
                PatternKind::Abar => {
                    self.nab[q] += 1;
                    self.rem_abar -= 1;
                }
                _ => {}
            }
            if self.feasible_counts() {
                self.dfs(idx + 1);
            }
            match it.kind {
                PatternKind::A => {
                    self.na[q] -= 1;
                    self.rem_a += 1;
                }
                PatternKind::Abar => {
                    self.nab[q] -= 1;
                    self.rem_abar += 1;
                }
                _ => {}
            }
            self.load[q] -= it.total();
            if self.done() {
                return;
            }
        }
    }

    fn leaf(&mut self) {
        let p = self.p;
        let mut west: Vec<Vec<Item>> = vec![Vec::new(); p];
        let mut a: Vec<Vec<Item>> = vec![Vec::new(); p];
        let mut abar: Vec<Vec<Item>> = vec![Vec::new(); p];
        let mut east: Vec<Vec<Item>> = vec![Vec::new(); p];
        for (it, &q) in self.items.iter().zip(&self.assign) {
            match it.kind {
                PatternKind::B => west[q].push(*it),
                PatternKind::Bbar => east[q].push(*it),
                PatternKind::A => a[q].push(*it),
                PatternKind::Abar => abar[q].push(*it),
            }
        }
        let mid: Vec<Vec<Item>> = (0..p)
            .map(|q| {
                let mut seq = Vec::with_capacity(a[q].len() + abar[q].len());
                for (i, x) in a[q].iter().enumerate() {
                    if i > 0 {
                        seq.push(abar[q][i - 1]);
                    }
                    seq.push(*x);
                }
                seq
            })
            .collect();
        let maxload = self.load.iter().copied().fold(0.0, f64::max);
        for w in &mut west {
            w.sort_by(|x, y| x.total().total_cmp(&y.total()).then(x.city.cmp(&y.city)));
        }
        for e in &mut east {
            e.sort_by(|x, y| y.total().total_cmp(&x.total()).then(x.city.cmp(&y.city)));
        }
        let plan = self.matched(&west, &mid, &east);
        let m = plan.makespan().expect("canonical plan cannot deadlock");
        if m < self.best - self.eps {
            self.best = m;
            self.best_plan = Some(plan);
        }
        if m <= maxload + self.eps {
            return;
        }
        self.exhaustive_leaf(&west, &mid, &east, maxload);
    }

    /// Default matching: k-th pickup at a city (plane order) takes the k-th earliest drop there.
    fn matched(&self, west: &[Vec<Item>], mid: &[Vec<Item>], east: &[Vec<Item>]) -> Plan {
        let (planes, _) = self.assemble(west, mid, east, None);
        Plan { planes, coupled: self.coupled.to_vec() }
    }

    /// Builds plane sequences with chain ids; `pick_order[c]` overrides which drop a pickup takes.
    fn assemble(&self, west: &[Vec<Item>], mid: &[Vec<Item>], east: &[Vec<Item>], matching: Option<&[usize]>) -> (Vec<Vec<Item>>, Vec<f64>) {
        let p = self.p;
        let mut drops: Vec<(f64, usize, usize)> = Vec::new(); // (time, city, chain)
        let mut planes: Vec<Vec<Item>> = vec![Vec::new(); p];
        let mut chain = 0u8;
        for q in 0..p {
            let mut clock = 0.0;
            for b in &west[q] {
                drops.push((clock + b.first, b.city, chain as usize));
                planes[q].push(Item { chain, ..*b });
                clock += b.total();
                chain += 1;
            }
            planes[q].extend_from_slice(&mid[q]);
        }
        let times: Vec<f64> = drops.iter().map(|d| d.0).collect();
        let mut order: Vec<usize> = (0..drops.len()).collect();
        order.sort_by(|&x, &y| drops[x].0.total_cmp(&drops[y].0).then(x.cmp(&y)));
        let mut used = vec![false; drops.len()];
        let mut k = 0;
        for q in 0..p {
            for bb in &east[q] {
                let c = match matching {
                    Some(m) => m[k],
                    None => {
                        let c = *order.iter().find(|&&c| !used[c] && drops[c].1 == bb.city).expect("every pickup has a drop");
                        used[c] = true;
                        c
                    }
                };
                k += 1;
                planes[q].push(Item { chain: c as u8, ..*bb });
            }
        }
        debug_assert!(self.chains.len() == drops.len());
        (planes, times)
    }

    /// All west orders, east orders and pickup matchings for a fixed assignment.
    fn exhaustive_leaf(&mut self, west: &[Vec<Item>], mid: &[Vec<Item>], east: &[Vec<Item>], maxload: f64) {
        let west_opts: Vec<Vec<Vec<Item>>> = west.iter().map(|w| distinct_perms(w)).collect();
        let east_opts: Vec<Vec<Vec<Item>>> = east.iter().map(|e| distinct_perms(e)).collect();
        let mut wsel = vec![0usize; self.p];
        loop {
            let w: Vec<Vec<Item>> = (0..self.p).map(|q| west_opts[q][wsel[q]].clone()).collect();
            let mut esel = vec![0usize; self.p];
            loop {
                let e: Vec<Vec<Item>> = (0..self.p).map(|q| east_opts[q][esel[q]].clone()).collect();
                self.try_matchings(&w, mid, &e);
                if self.best <= maxload + self.eps || !odometer(&mut esel, &east_opts) {
                    break;
                }
            }
            if self.best <= maxload + self.eps || !odometer(&mut wsel, &west_opts) {
                return;
            }
        }
    }

    fn try_matchings(&mut self, west: &[Vec<Item>], mid: &[Vec<Item>], east: &[Vec<Item>]) {
        let drops_city: Vec<usize> = west.iter().flatten().map(|b| b.city).collect();
        let picks_city: Vec<usize> = east.iter().flatten().map(|b| b.city).collect();
        let mut matching = vec![usize::MAX; picks_city.len()];
        let mut used = vec![false; drops_city.len()];
        self.match_rec(0, &drops_city, &picks_city, &mut matching, &mut used, west, mid, east);
    }

    #[allow(clippy::too_many_arguments)]
    fn match_rec(&mut self, k: usize, drops: &[usize], picks: &[usize], matching: &mut Vec<usize>, used: &mut Vec<bool>, west: &[Vec<Item>], mid: &[Vec<Item>], east: &[Vec<Item>]) {
        if k == picks.len() {
            let (planes, _) = self.assemble(west, mid, east, Some(matching));
            let plan = Plan { planes, coupled: self.coupled.to_vec() };
            let m = plan.makespan().expect("canonical plan cannot deadlock");
            if m < self.best - self.eps {
                self.best = m;
                self.best_plan = Some(plan);
            }
            return;
        }
        for c in 0..drops.len() {
            if used[c] || drops[c] != picks[k] {
                continue;
            }
            // identical drops at the same city and plane position class are interchangeable only by time
            used[c] = true;
            matching[k] = c;
            self.match_rec(k + 1, drops, picks, matching, used, west, mid, east);
            used[c] = false;
        }
    }
}

fn odometer<T>(sel: &mut [usize], opts: &[Vec<T>]) -> bool {
    for (s, o) in sel.iter_mut().zip(opts) {
        if *s + 1 < o.len() {
            *s += 1;
            return true;
        }
        *s = 0;
    }
    false
}

/// Distinct permutations of items, identical shapes collapsed.
fn distinct_perms(items: &[Item]) -> Vec<Vec<Item>> {
    let mut sorted = items.to_vec();
    sorted.sort_by(|x, y| x.kind.cmp(&y.kind).then(x.city.cmp(&y.city)).then(x.chain.cmp(&y.chain)));
    let mut out = Vec::new();
    let mut used = vec![false; sorted.len()];
    let mut cur = Vec::with_capacity(sorted.len());
    fn rec(sorted: &[Item], used: &mut [bool], cur: &mut Vec<Item>, out: &mut Vec<Vec<Item>>) {
        if cur.len() == sorted.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..sorted.len() {
            if used[i] || (i > 0 && !used[i - 1] && sorted[i - 1].same_shape(&sorted[i])) {
                continue;
            }
            used[i] = true;
            cur.push(sorted[i]);
            rec(sorted, used, cur, out);
            cur.pop();
            used[i] = false;
        }
    }
    rec(&sorted, &mut used, &mut cur, &mut out);
    out
}

/// Exhaustive search over assignments and location-consistent orders, for coupled chains.
fn exact_coupled(prep: &Prepared, p: usize, bound: f64, ml: f64) -> Option<(f64, Plan)> {
    let mut items: Vec<Item> = prep.a.iter().chain(&prep.abar).copied().collect();
    for (b, bb) in &prep.chains {
        items.push(*b);
        items.push(*bb);
    }
    items.sort_by(|x, y| {
        y.total()
            .total_cmp(&x.total())
            .then(x.kind.cmp(&y.kind))
            .then(x.city.cmp(&y.city))
            .then(x.chain.cmp(&y.chain))
    });
    let mut search = CoupledSearch {
        p,
        coupled: &prep.coupled,
        eps: eps(),
        ml,
        best: bound,
        best_plan: None,
        groups: vec![Vec::new(); p],
        load: vec![0.0; p],
    };
    search.assign(&items, 0, &mut vec![0; items.len()]);
    search.best_plan.map(|pl| (search.best, pl))
}

struct CoupledSearch<'a> {
    p: usize,
    coupled: &'a [bool],
    eps: f64,
    ml: f64,
    best: f64,
    best_plan: Option<Plan>,
    groups: Vec<Vec<Item>>,
    load: Vec<f64>,
}

impl CoupledSearch<'_> {
    fn done(&self) -> bool {
        self.best_plan.is_some() && self.best <= self.ml + self.eps
    }

    fn assign(&mut self, items: &[Item], idx: usize, assign: &mut Vec<usize>) {
        if self.done() {
            return;
        }
        if idx == items.len() {
            let ok = self.groups.iter().all(|g| {
                let na = g.iter().filter(|i| i.kind == PatternKind::A).count();
                let nab = g.iter().filter(|i| i.kind == PatternKind::Abar).count();
                na == nab + 1
            });
            if ok {
                self.orders();
            }
            return;
        }
        let it = items[idx];
        let lo = if idx > 0 && items[idx - 1].same_shape(&it) { assign[idx - 1] } else { 0 };
        for q in lo..self.p {
            if self.groups[q].is_empty() && (0..q).any(|r| self.groups[r].is_empty()) {
                continue;
            }
            if self.load[q] + it.total() >= self.best - self.eps {
                continue;
            }
            assign[idx] = q;
            self.groups[q].push(it);
            self.load[q] += it.total();
            self.assign(items, idx + 1, assign);
            self.load[q] -= it.total();
            self.groups[q].pop();
        }
    }

    fn orders(&mut self) {
        let opts: Vec<Vec<Vec<Item>>> = self.groups.iter().map(|g| consistent_orders(g)).collect();
        if opts.iter().any(Vec::is_empty) {
            return;
        }
        let mut sel = vec![0usize; self.p];
        loop {
            let planes: Vec<Vec<Item>> = (0..self.p).map(|q| opts[q][sel[q]].clone()).collect();
            if let Some(m) = simulate(&planes, self.coupled, None) {
                if m < self.best - self.eps {
                    self.best = m;
                    self.best_plan = Some(Plan { planes, coupled: self.coupled.to_vec() });
                    if self.done() {
                        return;
                    }
                }
            }
            if !odometer(&mut sel, &opts) {
                return;
            }
        }
    }
}

/// Orders of one plane's items that start at C_I, end at C_G and chain locations.
fn consistent_orders(items: &[Item]) -> Vec<Vec<Item>> {
    let mut sorted = items.to_vec();
    sorted.sort_by(|x, y| x.kind.cmp(&y.kind).then(x.city.cmp(&y.city)).then(x.chain.cmp(&y.chain)));
    let mut out = Vec::new();
    let mut used = vec![false; sorted.len()];
    let mut cur = Vec::with_capacity(sorted.len());
    fn rec(sorted: &[Item], used: &mut [bool], cur: &mut Vec<Item>, at_initial: bool, out: &mut Vec<Vec<Item>>) {
        if cur.len() == sorted.len() {
            if !at_initial {
                out.push(cur.clone());
            }
            return;
        }
        for i in 0..sorted.len() {
            if used[i] || sorted[i].starts_at_initial() != at_initial {
                continue;
            }
            if i > 0 && !used[i - 1] && sorted[i - 1].same_shape(&sorted[i]) {
                continue;
            }
            used[i] = true;
            cur.push(sorted[i]);
            rec(sorted, used, cur, sorted[i].ends_at_initial(), out);
            cur.pop();
            used[i] = false;
        }
    }
    rec(&sorted, &mut used, &mut cur, true, &mut out);
    out
}

/// Converts a plan into timed legs over original cities.
fn build_schedule(plan: &Plan, instance: &Instance) -> Schedule {
    let mut timing: Timing = Vec::new();
    simulate(&plan.planes, &plan.coupled, Some(&mut timing)).expect("plan is feasible");
    let nc = plan.coupled.len();

    // traveler ids: one per A, one per chain (the B passenger)
    let mut next = 0usize;
    let mut own: Vec<Vec<Option<usize>>> = Vec::new();
    let mut chain_pax = vec![usize::MAX; nc];
    for seq in &plan.planes {
        let mut row = Vec::new();
        for it in seq {
            match it.kind {
                PatternKind::A => {
                    row.push(Some(next));
                    next += 1;
                }
                PatternKind::B => {
                    chain_pax[it.chain as usize] = next;
                    row.push(Some(next));
                    next += 1;
                }
                _ => row.push(None),
            }
        }
        own.push(row);
    }
    // the traveler finally collected at a chain's pickup city
    let mut final_pax = chain_pax.clone();
    for (q, seq) in plan.planes.iter().enumerate() {
        for (i, it) in seq.iter().enumerate() {
            if it.kind == PatternKind::A && it.chain != NO_CHAIN {
                final_pax[it.chain as usize] = own[q][i].unwrap();
            }
        }
    }
    let mut handoffs = vec![None; next];
    // a bridged pattern lands twice: the hop's landing is the endpoint's B (A) or B̄ (Ā) cost
    let b_cost = |x: usize| instance.pattern(x, PatternKind::B).cost;
    let bbar_cost = |x: usize| instance.pattern(x, PatternKind::Bbar).cost;
    let mut planes = Vec::new();
    for (q, seq) in plan.planes.iter().enumerate() {
        let mut legs = Vec::new();
        for (i, it) in seq.iter().enumerate() {
            let st = timing[q][i];
            let x = it.city;
            let spec_cost = instance.pattern(x, it.kind).cost;
            let mut push = |from: Location, to: Location, passenger: Option<usize>, duration: f64, start: f64, cost: f64| {
                legs.push(Leg { from, to, passenger, duration, start, end: start + duration, cost });
            };
            use Location::{City, Goal, Initial};
            match (it.kind, instance.bridge(x)) {
                (PatternKind::B, bridge) => {
                    let at = bridge.map_or(x, |b| b.from);
                    let pax = chain_pax[it.chain as usize];
                    handoffs[pax].get_or_insert(st[1]);
                    push(Initial, City(at), Some(pax), it.first, st[0], spec_cost);
                    push(City(at), Initial, None, it.last, st[1], 0.0);
                }
                (PatternKind::Bbar, bridge) => {
                    let at = bridge.map_or(x, |b| b.to);
                    push(Goal, City(at), None, it.first, st[0], spec_cost);
                    push(City(at), Goal, Some(final_pax[it.chain as usize]), it.last, st[1], 0.0);
                }
                (PatternKind::A, Some(b)) => {
                    let mine = own[q][i].unwrap();
                    if it.chain == NO_CHAIN {
                        push(Initial, City(b.to), Some(mine), it.first, st[0], spec_cost - b_cost(b.from));
                        push(City(b.to), City(b.from), Some(mine), it.hop, st[1], b_cost(b.from));
                        push(City(b.from), Goal, Some(mine), it.last, st[2], 0.0);
                    } else {
                        handoffs[mine].get_or_insert(st[1]);
                        push(Initial, City(b.to), Some(mine), it.first, st[0], spec_cost - b_cost(b.from));
                        push(City(b.to), City(b.from), None, it.hop, st[1], b_cost(b.from));
                        push(City(b.from), Goal, Some(chain_pax[it.chain as usize]), it.last, st[2], 0.0);
                    }
                }
                (PatternKind::Abar, Some(b)) => {
                    let pax = (it.chain != NO_CHAIN).then(|| chain_pax[it.chain as usize]);
                    push(Goal, City(b.from), None, it.first, st[0], spec_cost - bbar_cost(b.to));
                    push(City(b.from), City(b.to), pax, it.hop, st[1], bbar_cost(b.to));
                    push(City(b.to), Initial, None, it.last, st[2], 0.0);
                }
                (PatternKind::A, None) => {
                    let mine = own[q][i];
                    push(Initial, City(x), mine, it.first, st[0], spec_cost);
                    push(City(x), Goal, mine, it.last, st[1], 0.0);
                }
                (PatternKind::Abar, None) => {
                    push(Goal, City(x), None, it.first, st[0], spec_cost);
                    push(City(x), Initial, None, it.last, st[1], 0.0);
                }
            }
        }
        planes.push(legs);
    }
    Schedule { planes, handoffs }
}

/// A rule broken by a schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    PlaneMustStartAtInitial(usize),
    PlaneMustEndAtGoal(usize),
    BrokenRoute { plane: usize, leg: usize },
    TimeTravel { plane: usize, leg: usize },
    WrongDuration { plane: usize, leg: usize },
    WrongCost { plane: usize, leg: usize },
    UnknownCity { plane: usize, leg: usize },
    Passenger { passenger: usize, reason: String },
    TravelerCount { expected: usize, got: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PlaneMustStartAtInitial(q) => write!(f, "plane {q}: plane must start at initial"),
            Violation::PlaneMustEndAtGoal(q) => write!(f, "plane {q}: plane must end at goal"),
            Violation::BrokenRoute { plane, leg } => write!(f, "plane {plane} leg {leg}: route is not contiguous"),
            Violation::TimeTravel { plane, leg } => write!(f, "plane {plane} leg {leg}: times inconsistent"),
            Violation::WrongDuration { plane, leg } => write!(f, "plane {plane} leg {leg}: duration does not match the instance"),
            Violation::WrongCost { plane, leg } => write!(f, "plane {plane} leg {leg}: landing cost does not match the instance"),
            Violation::UnknownCity { plane, leg } => write!(f, "plane {plane} leg {leg}: unknown city"),
            Violation::Passenger { passenger, reason } => write!(f, "passenger {passenger}: {reason}"),
            Violation::TravelerCount { expected, got } => write!(f, "expected {expected} travelers, schedule moves {got}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub violations: Vec<Violation>,
    pub makespan: f64,
    pub cost: f64,
}

impl ScheduleReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= eps() * (1.0 + x.abs().max(y.abs()))
}

/// Allowed (duration, landing cost) pairs for a flight between two locations.
fn flight_options(instance: &Instance, from: Location, to: Location) -> Option<Vec<(f64, f64)>> {
    use Location::{City, Goal, Initial};
    let n = instance.n();
    let in_range = |x: usize| x < n;
    let landing = |l: Location, kinds: &[PatternKind]| -> Vec<f64> {
        match l {
            City(x) => match instance.override_for(x) {
                Some(o) => kinds.iter().map(|&k| o.spec(k).cost).collect(),
                None => vec![instance.c()[x]],
            },
            _ => vec![0.0],
        }
    };
    let bridges: Vec<(usize, crate::model::Bridge)> = (0..n).filter_map(|k| instance.bridge(k).map(|b| (k, b))).collect();
    let mut out = Vec::new();
    match (from, to) {
        (Initial, City(x)) | (City(x), Initial) if in_range(x) => {
            let to_city = matches!(to, City(_));
            let durs: Vec<f64> = match instance.override_for(x) {
                Some(o) if to_city => vec![o.a.first, o.b.first],
                Some(o) => vec![o.abar.last, o.b.last],
                None => vec![instance.d()[x]],
            };
            let mut costs = if to_city { landing(to, &[PatternKind::A, PatternKind::B]) } else { vec![0.0] };
            if to_city {
                costs.extend(bridges.iter().filter(|(_, b)| b.to == x).map(|&(k, b)| {
                    instance.pattern(k, PatternKind::A).cost - instance.pattern(b.from, PatternKind::B).cost
                }));
            }
            for &d in &durs {
                for &c in &costs {
                    out.push((d, c));
                }
            }
        }
        (Goal, City(x)) | (City(x), Goal) if in_range(x) => {
            let to_city = matches!(to, City(_));
            let durs: Vec<f64> = match instance.override_for(x) {
                Some(o) if to_city => vec![o.abar.first, o.bbar.first],
                Some(o) => vec![o.a.last, o.bbar.last],
                None => vec![instance.dbar()[x]],
            };
            let mut costs = if to_city { landing(to, &[PatternKind::Abar, PatternKind::Bbar]) } else { vec![0.0] };
            if to_city {
                costs.extend(bridges.iter().filter(|(_, b)| b.from == x).map(|&(k, b)| {
                    instance.pattern(k, PatternKind::Abar).cost - instance.pattern(b.to, PatternKind::Bbar).cost
                }));
            }
            for &d in &durs {
                for &c in &costs {
                    out.push((d, c));
                }
            }
        }
        (City(x), City(y)) if in_range(x) && in_range(y) && x != y => {
            if let Some(m) = instance.central() {
                if !is_unreachable(m[x][y]) {
                    for c in landing(to, &[PatternKind::A]) {
                        out.push((m[x][y], c));
                    }
                }
            }
            for (_, b) in &bridges {
                if b.to == x && b.from == y {
                    out.push((b.hop, instance.pattern(y, PatternKind::B).cost));
                } else if b.from == x && b.to == y {
                    out.push((b.hop, instance.pattern(y, PatternKind::Bbar).cost));
                }
            }
        }
        _ => return None,
    }
    Some(out)
}

/// Checks every plan rule and recomputes makespan and cost.
pub fn validate_schedule(schedule: &Schedule, instance: &Instance) -> ScheduleReport {
    validate_with(schedule, instance.t(), |from, to| flight_options(instance, from, to))
}

/// Checks a schedule flown over a general graph, where `City(v)` names vertex v.
pub fn validate_general_schedule(schedule: &Schedule, g: &GeneralInstance) -> ScheduleReport {
    let vertex = |l: Location| match l {
        Location::Initial => Some(g.initial()),
        Location::Goal => Some(g.goal()),
        Location::City(v) => (v < g.vertices().len() && v != g.initial() && v != g.goal()).then_some(v),
    };
    validate_with(schedule, g.t(), |from, to| {
        let (x, y) = (vertex(from)?, vertex(to)?);
        Some(g.arc(x, y).map(|d| vec![(d, g.vertices()[y].cost)]).unwrap_or_default())
    })
}

fn validate_with(schedule: &Schedule, travelers: usize, options: impl Fn(Location, Location) -> Option<Vec<(f64, f64)>>) -> ScheduleReport {
    let eps = eps();
    let mut violations = Vec::new();
    // passenger -> (start, end, from, to, plane)
    let mut moves: Vec<Vec<(f64, f64, Location, Location)>> = Vec::new();
    for (q, legs) in schedule.planes.iter().enumerate() {
        let Some(first) = legs.first() else {
            violations.push(Violation::PlaneMustEndAtGoal(q));
            continue;
        };
        if first.from != Location::Initial {
            violations.push(Violation::PlaneMustStartAtInitial(q));
        }
        if legs.last().map(|l| l.to) != Some(Location::Goal) {
            violations.push(Violation::PlaneMustEndAtGoal(q));
        }
        let mut clock = 0.0;
        let mut at = Location::Initial;
        for (i, l) in legs.iter().enumerate() {
            if l.from != at && i > 0 {
                violations.push(Violation::BrokenRoute { plane: q, leg: i });
            }
            if l.start < clock - eps || !close(l.end, l.start + l.duration) || l.duration < 0.0 {
                violations.push(Violation::TimeTravel { plane: q, leg: i });
            }
            match options(l.from, l.to) {
                None => violations.push(Violation::UnknownCity { plane: q, leg: i }),
                Some(opts) => {
                    if !opts.iter().any(|&(d, _)| close(d, l.duration)) {
                        violations.push(Violation::WrongDuration { plane: q, leg: i });
                    }
                    if !opts.iter().any(|&(_, c)| close(c, l.cost)) {
                        violations.push(Violation::WrongCost { plane: q, leg: i });
                    }
                }
            }
            if let Some(x) = l.passenger {
                if moves.len() <= x {
                    moves.resize(x + 1, Vec::new());
                }
                moves[x].push((l.start, l.end, l.from, l.to));
            }
            clock = l.end;
            at = l.to;
        }
    }
    let expected = travelers;
    if moves.len() != expected {
        violations.push(Violation::TravelerCount { expected, got: moves.len() });
    }
    for (x, mv) in moves.iter_mut().enumerate() {
        mv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let bad = |reason: &str| Violation::Passenger { passenger: x, reason: reason.into() };
        if mv.is_empty() {
            violations.push(bad("never moves"));
            continue;
        }
        if mv.iter().filter(|m| m.2 == Location::Initial).count() != 1 || mv[0].2 != Location::Initial {
            violations.push(bad("must depart C_I exactly once"));
        }
        if mv.iter().filter(|m| m.3 == Location::Goal).count() != 1 || mv.last().unwrap().3 != Location::Goal {
            violations.push(bad("must arrive at C_G exactly once"));
        }
        for w in mv.windows(2) {
            if w[1].2 != w[0].3 || w[1].0 < w[0].1 - eps {
                violations.push(bad("teleports or rides two planes at once"));
                break;
            }
        }
    }
    ScheduleReport { violations, makespan: schedule.makespan(), cost: schedule.cost() }
}
