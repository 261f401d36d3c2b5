//! PDDL 2.1 export, a syntax checker for the emitted subset, and a plan simulator.
//!
//! Encoding: durative `board`, `debark` and `fly` actions over typed `aircraft`, `person` and
//! `city` objects. A plane holds one person (`empty` predicate). `fly` lasts `flight-time` and
//! adds the arrival city's `landing-cost` to `total-cost`. Boarding and debarking are
//! instantaneous. Object names are `ci`, `cg`, `c0..`, `p0..`, `t0..`, all 0-based to match
//! the arrow notation of witness plans.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{is_unreachable, Instance, Location};
use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PddlPair {
    pub domain: String,
    pub problem: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PddlError {
    #[error("instance has override cities: export original instance before transformation")]
    Overrides,
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("plan step {step}: {reason}")]
    Plan { step: usize, reason: String },
    #[error("goal not reached: {0}")]
    Goal(String),
}

pub const DOMAIN_NAME: &str = "multi-zeno-travel";

const DOMAIN: &str = "\
; MultiZenoTravel: carry every person from ci to cg.
; Both objectives are declared in the problem; standard PDDL has a single :metric, so the
; cost metric is given as a comment. Single-objective planners optimize one of them.
(define (domain multi-zeno-travel)
  (:requirements :typing :durative-actions :numeric-fluents)
  (:types aircraft person city)
  (:predicates
    (at-aircraft ?a - aircraft ?c - city)
    (at-person ?p - person ?c - city)
    (in ?p - person ?a - aircraft)
    (empty ?a - aircraft)
    (connected ?from ?to - city))
  (:functions
    (flight-time ?from ?to - city)
    (landing-cost ?c - city)
    (total-cost))
  (:durative-action board
    :parameters (?p - person ?a - aircraft ?c - city)
    :duration (= ?duration 0)
    :condition (and (at start (at-person ?p ?c)) (at start (empty ?a)) (over all (at-aircraft ?a ?c)))
    :effect (and (at start (not (at-person ?p ?c))) (at start (not (empty ?a))) (at end (in ?p ?a))))
  (:durative-action debark
    :parameters (?p - person ?a - aircraft ?c - city)
    :duration (= ?duration 0)
    :condition (and (at start (in ?p ?a)) (over all (at-aircraft ?a ?c)))
    :effect (and (at start (not (in ?p ?a))) (at end (at-person ?p ?c)) (at end (empty ?a))))
  (:durative-action fly
    :parameters (?a - aircraft ?from ?to - city)
    :duration (= ?duration (flight-time ?from ?to))
    :condition (and (at start (at-aircraft ?a ?from)) (at start (connected ?from ?to)))
    :effect (and (at start (not (at-aircraft ?a ?from))) (at end (at-aircraft ?a ?to))
                 (at end (increase (total-cost) (landing-cost ?to))))))
";

pub fn city_name(loc: Location) -> String {
    match loc {
        Location::Initial => "ci".into(),
        Location::Goal => "cg".into(),
        Location::City(i) => format!("c{i}"),
    }
}

fn locations(n: usize) -> impl Iterator<Item = Location> {
    [Location::Initial, Location::Goal].into_iter().chain((0..n).map(Location::City))
}

/// Flight duration between two locations, or `None` when there is no flight.
pub fn flight_time(instance: &Instance, from: Location, to: Location) -> Option<f64> {
    use Location::*;
    let dur = match (from, to) {
        (Initial, City(i)) | (City(i), Initial) => instance.d()[i],
        (City(i), Goal) | (Goal, City(i)) => instance.dbar()[i],
        (City(i), City(j)) if i != j => instance.hop(i, j),
        _ => return None,
    };
    (!is_unreachable(dur)).then_some(dur)
}

fn landing_cost(instance: &Instance, loc: Location) -> f64 {
    match loc {
        Location::City(i) => instance.c()[i],
        _ => 0.0,
    }
}

pub fn export_pddl(instance: &Instance) -> Result<PddlPair, PddlError> {
    if instance.has_overrides() {
        return Err(PddlError::Overrides);
    }
    let (n, t, p) = (instance.n(), instance.t(), instance.p());
    let names = |prefix: &str, k: usize| (0..k).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ");
    let cities = locations(n).map(city_name).collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    let w = &mut s;
    // fmt::Write into a String cannot fail
    let _ = writeln!(w, "; {n} central cities, {t} persons, {p} aircraft.");
    let _ = writeln!(w, "; Second objective: (:metric minimize (total-cost))");
    let _ = writeln!(w, "(define (problem mzt-n{n}-t{t}-p{p})");
    let _ = writeln!(w, "  (:domain {DOMAIN_NAME})");
    let _ = writeln!(w, "  (:objects {} - aircraft {} - person {cities} - city)", names("p", p), names("t", t));
    let _ = writeln!(w, "  (:init");
    for a in 0..p {
        let _ = writeln!(w, "    (at-aircraft p{a} ci) (empty p{a})");
    }
    for q in 0..t {
        let _ = writeln!(w, "    (at-person t{q} ci)");
    }
    for from in locations(n) {
        for to in locations(n) {
            if let Some(dur) = flight_time(instance, from, to) {
                let (f, g) = (city_name(from), city_name(to));
                let _ = writeln!(w, "    (connected {f} {g}) (= (flight-time {f} {g}) {dur})");
            }
        }
    }
    for loc in locations(n) {
        let _ = writeln!(w, "    (= (landing-cost {}) {})", city_name(loc), landing_cost(instance, loc));
    }
    let _ = writeln!(w, "    (= (total-cost) 0))");
    let goals = (0..t).map(|q| format!("(at-person t{q} cg)")).collect::<Vec<_>>().join(" ");
    let _ = writeln!(w, "  (:goal (and {goals}))");
    let _ = writeln!(w, "  (:metric minimize (total-time)))");
    Ok(PddlPair { domain: DOMAIN.to_string(), problem: s })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs) => Some(xs),
            Sexp::Atom(_) => None,
        }
    }

    /// The first list child headed by `key`.
    fn section(&self, key: &str) -> Option<&[Sexp]> {
        self.list()?.iter().filter_map(Sexp::list).find(|xs| xs.first().and_then(Sexp::atom) == Some(key))
    }
}

fn syntax(msg: impl Into<String>) -> PddlError {
    PddlError::Syntax(msg.into())
}

/// Parses exactly one top-level s-expression; `;` starts a line comment. Atoms are lowercased.
pub fn parse_sexp(text: &str) -> Result<Sexp, PddlError> {
    let mut stack: Vec<Vec<Sexp>> = Vec::new();
    let mut done: Option<Sexp> = None;
    for line in text.lines() {
        let code = line.split(';').next().unwrap_or("");
        let spaced = code.replace('(', " ( ").replace(')', " ) ");
        for tok in spaced.split_whitespace() {
            if done.is_some() {
                return Err(syntax(format!("trailing token {tok:?} after the top-level form")));
            }
            match tok {
                "(" => stack.push(Vec::new()),
                ")" => {
                    let list = stack.pop().ok_or_else(|| syntax("unbalanced ')'"))?;
                    match stack.last_mut() {
                        Some(parent) => parent.push(Sexp::List(list)),
                        None => done = Some(Sexp::List(list)),
                    }
                }
                atom => match stack.last_mut() {
                    Some(parent) => parent.push(Sexp::Atom(atom.to_lowercase())),
                    None => return Err(syntax(format!("atom {atom:?} outside any form"))),
                },
            }
        }
    }
    if !stack.is_empty() {
        return Err(syntax(format!("{} unclosed '('", stack.len())));
    }
    done.ok_or_else(|| syntax("empty input"))
}

fn header<'a>(form: &'a Sexp, kind: &str) -> Result<&'a str, PddlError> {
    let xs = form.list().ok_or_else(|| syntax("top level is not a list"))?;
    if xs.first().and_then(Sexp::atom) != Some("define") {
        return Err(syntax("missing define"));
    }
    form.section(kind)
        .and_then(|h| h.get(1))
        .and_then(Sexp::atom)
        .ok_or_else(|| syntax(format!("missing ({kind} NAME)")))
}

/// Symbols declared in a typed list `a b - t c - u`, without the type names.
fn typed_names(items: &[Sexp]) -> Result<Vec<String>, PddlError> {
    let mut out = Vec::new();
    let mut it = items.iter();
    while let Some(x) = it.next() {
        let a = x.atom().ok_or_else(|| syntax("nested list in a typed list"))?;
        if a == "-" {
            it.next().and_then(Sexp::atom).ok_or_else(|| syntax("'-' without a type"))?;
        } else {
            out.push(a.to_string());
        }
    }
    Ok(out)
}

struct DomainInfo {
    name: String,
    predicates: HashMap<String, usize>,
    functions: HashMap<String, usize>,
}

fn signatures(section: Option<&[Sexp]>) -> Result<HashMap<String, usize>, PddlError> {
    let mut out = HashMap::new();
    for s in section.map_or(&[][..], |xs| &xs[1..]) {
        let xs = s.list().ok_or_else(|| syntax("declaration is not a list"))?;
        let name = xs.first().and_then(Sexp::atom).ok_or_else(|| syntax("declaration without a name"))?;
        out.insert(name.to_string(), typed_names(&xs[1..])?.len());
    }
    Ok(out)
}

fn check_domain(text: &str) -> Result<DomainInfo, PddlError> {
    let form = parse_sexp(text)?;
    let name = header(&form, "domain")?.to_string();
    let predicates = signatures(form.section(":predicates"))?;
    let functions = signatures(form.section(":functions"))?;
    for action in form.list().into_iter().flatten().filter_map(Sexp::list) {
        let head = action.first().and_then(Sexp::atom);
        if !matches!(head, Some(":action" | ":durative-action")) {
            continue;
        }
        let params = action
            .iter()
            .position(|x| x.atom() == Some(":parameters"))
            .and_then(|i| action.get(i + 1))
            .and_then(Sexp::list)
            .ok_or_else(|| syntax("action without :parameters"))?;
        if let Some(bad) = typed_names(params)?.iter().find(|v| !v.starts_with('?')) {
            return Err(syntax(format!("parameter {bad:?} is not a variable")));
        }
    }
    Ok(DomainInfo { name, predicates, functions })
}

/// Checks an atom `(name args..)` against a signature table and the declared objects.
fn check_atom(xs: &[Sexp], table: &HashMap<String, usize>, objects: &BTreeSet<String>) -> Result<(), PddlError> {
    let name = xs.first().and_then(Sexp::atom).ok_or_else(|| syntax("atom without a head"))?;
    let arity = *table.get(name).ok_or_else(|| syntax(format!("undeclared symbol {name:?}")))?;
    if xs.len() - 1 != arity {
        return Err(syntax(format!("{name} takes {arity} arguments, got {}", xs.len() - 1)));
    }
    for arg in &xs[1..] {
        let a = arg.atom().ok_or_else(|| syntax(format!("nested argument in {name}")))?;
        if !objects.contains(a) {
            return Err(syntax(format!("undeclared object {a:?}")));
        }
    }
    Ok(())
}

fn check_fact(fact: &Sexp, domain: &DomainInfo, objects: &BTreeSet<String>) -> Result<(), PddlError> {
    let xs = fact.list().ok_or_else(|| syntax("fact is not a list"))?;
    match xs.first().and_then(Sexp::atom) {
        Some("and") => xs[1..].iter().try_for_each(|f| check_fact(f, domain, objects)),
        Some("not") if xs.len() == 2 => check_fact(&xs[1], domain, objects),
        Some("=") if xs.len() == 3 => {
            let f = xs[1].list().ok_or_else(|| syntax("'=' needs a function term"))?;
            check_atom(f, &domain.functions, objects)?;
            let v = xs[2].atom().and_then(|a| a.parse::<f64>().ok());
            v.filter(|v| v.is_finite()).map(|_| ()).ok_or_else(|| syntax("'=' needs a finite number"))
        }
        _ => check_atom(xs, &domain.predicates, objects),
    }
}

/// Checks balanced parentheses, the define headers, that the problem names the domain, and
/// that every init and goal fact uses declared predicates, functions and objects.
pub fn check_syntax(pair: &PddlPair) -> Result<(), PddlError> {
    let domain = check_domain(&pair.domain)?;
    let form = parse_sexp(&pair.problem)?;
    header(&form, "problem")?;
    let named = form.section(":domain").and_then(|d| d.get(1)).and_then(Sexp::atom);
    if named != Some(domain.name.as_str()) {
        return Err(syntax(format!("problem refers to domain {named:?}, expected {:?}", domain.name)));
    }
    let objects: BTreeSet<String> = typed_names(form.section(":objects").map_or(&[][..], |xs| &xs[1..]))?.into_iter().collect();
    let init = form.section(":init").ok_or_else(|| syntax("missing :init"))?;
    init[1..].iter().try_for_each(|f| check_fact(f, &domain, &objects))?;
    let goal = form.section(":goal").ok_or_else(|| syntax("missing :goal"))?;
    if goal.len() != 2 {
        return Err(syntax(":goal takes one formula"));
    }
    check_fact(&goal[1], &domain, &objects)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionKind {
    Board { person: usize, city: Location },
    Debark { person: usize, city: Location },
    Fly { from: Location, to: Location },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanAction {
    pub start: f64,
    pub plane: usize,
    pub kind: ActionKind,
}

impl PlanAction {
    /// One line of a timed plan: `start: (action args) [duration]`.
    pub fn render(&self, instance: &Instance) -> String {
        let (text, dur) = match self.kind {
            ActionKind::Board { person, city } => (format!("board t{person} p{} {}", self.plane, city_name(city)), 0.0),
            ActionKind::Debark { person, city } => (format!("debark t{person} p{} {}", self.plane, city_name(city)), 0.0),
            ActionKind::Fly { from, to } => (
                format!("fly p{} {} {}", self.plane, city_name(from), city_name(to)),
                flight_time(instance, from, to).unwrap_or(f64::NAN),
            ),
        };
        format!("{:.3}: ({text}) [{dur:.3}]", self.start)
    }
}

/// Timed actions of a schedule: board at take-off, debark on landing.
pub fn schedule_actions(schedule: &Schedule) -> Vec<PlanAction> {
    let mut out = Vec::new();
    for (plane, legs) in schedule.planes.iter().enumerate() {
        for leg in legs {
            if let Some(person) = leg.passenger {
                out.push(PlanAction { start: leg.start, plane, kind: ActionKind::Board { person, city: leg.from } });
            }
            out.push(PlanAction { start: leg.start, plane, kind: ActionKind::Fly { from: leg.from, to: leg.to } });
            if let Some(person) = leg.passenger {
                out.push(PlanAction { start: leg.end, plane, kind: ActionKind::Debark { person, city: leg.to } });
            }
        }
    }
    out
}

/// One hop of a plane itinerary: destination and the person carried, if any.
pub type Hop = (Location, Option<usize>);

/// Earliest-start timing of untimed itineraries: a plane waits at a city until the person it
/// must carry has been dropped there. Errors when no plane can move.
pub fn itinerary_actions(instance: &Instance, itineraries: &[Vec<Hop>]) -> Result<Vec<PlanAction>, PddlError> {
    let mut at = vec![Location::Initial; itineraries.len()];
    let mut clock = vec![0.0; itineraries.len()];
    let mut next = vec![0usize; itineraries.len()];
    let mut person_at: Vec<Option<(Location, f64)>> = vec![Some((Location::Initial, 0.0)); instance.t()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<(f64, usize)> = None;
        for (plane, hops) in itineraries.iter().enumerate() {
            let Some(&(_, passenger)) = hops.get(next[plane]) else { continue };
            let ready = match passenger {
                None => Some(clock[plane]),
                Some(q) => match person_at.get(q).copied().flatten() {
                    Some((loc, time)) if loc == at[plane] => Some(f64::max(clock[plane], time)),
                    _ => None,
                },
            };
            if let Some(start) = ready {
                if best.is_none_or(|(s, _)| start < s) {
                    best = Some((start, plane));
                }
            }
        }
        let Some((start, plane)) = best else {
            return match itineraries.iter().zip(&next).position(|(h, &k)| k < h.len()) {
                Some(stuck) => Err(PddlError::Plan { step: out.len(), reason: format!("plane p{stuck} waits forever") }),
                None => Ok(out),
            };
        };
        let (to, passenger) = itineraries[plane][next[plane]];
        let from = at[plane];
        let dur = flight_time(instance, from, to).ok_or_else(|| PddlError::Plan {
            step: out.len(),
            reason: format!("no flight {} -> {}", city_name(from), city_name(to)),
        })?;
        if let Some(person) = passenger {
            out.push(PlanAction { start, plane, kind: ActionKind::Board { person, city: from } });
            person_at[person] = None;
        }
        out.push(PlanAction { start, plane, kind: ActionKind::Fly { from, to } });
        let end = start + dur;
        if let Some(person) = passenger {
            out.push(PlanAction { start: end, plane, kind: ActionKind::Debark { person, city: to } });
            person_at[person] = Some((to, end));
        }
        at[plane] = to;
        clock[plane] = end;
        next[plane] += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    pub makespan: f64,
    pub cost: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Person {
    At(Location),
    In(usize),
}

/// Executes timed actions under the domain's semantics and checks the goal.
///
/// Events are applied in time order; at equal times landings come first, then debarks, then
/// boards, then take-offs.
pub fn simulate(instance: &Instance, actions: &[PlanAction]) -> Result<SimulationResult, PddlError> {
    // (time, order, action index); order 0 is the landing half of a fly
    let mut events: Vec<(f64, u8, usize)> = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        match a.kind {
            ActionKind::Fly { from, to } => {
                let dur = flight_time(instance, from, to)
                    .ok_or_else(|| PddlError::Plan { step: i, reason: format!("no flight {} -> {}", city_name(from), city_name(to)) })?;
                events.push((a.start, 3, i));
                events.push((a.start + dur, 0, i));
            }
            ActionKind::Debark { .. } => events.push((a.start, 1, i)),
            ActionKind::Board { .. } => events.push((a.start, 2, i)),
        }
        if a.plane >= instance.p() {
            return Err(PddlError::Plan { step: i, reason: format!("unknown aircraft p{}", a.plane) });
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut plane_at: Vec<Option<Location>> = vec![Some(Location::Initial); instance.p()];
    let mut load: Vec<Option<usize>> = vec![None; instance.p()];
    let mut people = vec![Person::At(Location::Initial); instance.t()];
    let (mut makespan, mut cost) = (0.0f64, 0.0);
    for &(time, order, step) in &events {
        let a = actions[step];
        let fail = |reason: String| PddlError::Plan { step, reason };
        let plane = a.plane;
        match (a.kind, order) {
            (ActionKind::Fly { from, .. }, 3) => {
                if plane_at[plane] != Some(from) {
                    return Err(fail(format!("p{plane} is not at {}", city_name(from))));
                }
                plane_at[plane] = None;
            }
            (ActionKind::Fly { to, .. }, _) => {
                plane_at[plane] = Some(to);
                cost += landing_cost(instance, to);
                makespan = makespan.max(time);
            }
            (ActionKind::Board { person, city } | ActionKind::Debark { person, city }, _) if person >= instance.t() => {
                return Err(fail(format!("unknown person t{person} at {}", city_name(city))));
            }
            (ActionKind::Board { person, city }, _) => {
                if plane_at[plane] != Some(city) || people[person] != Person::At(city) || load[plane].is_some() {
                    return Err(fail(format!("board t{person} p{plane} {} is not applicable", city_name(city))));
                }
                people[person] = Person::In(plane);
                load[plane] = Some(person);
            }
            (ActionKind::Debark { person, city }, _) => {
                if plane_at[plane] != Some(city) || people[person] != Person::In(plane) {
                    return Err(fail(format!("debark t{person} p{plane} {} is not applicable", city_name(city))));
                }
                people[person] = Person::At(city);
                load[plane] = None;
            }
        }
    }
    if let Some(q) = people.iter().position(|&s| s != Person::At(Location::Goal)) {
        let place = match people[q] {
            Person::At(loc) => city_name(loc),
            Person::In(a) => format!("aboard p{a}"),
        };
        return Err(PddlError::Goal(format!("t{q} ends at {place}")));
    }
    Ok(SimulationResult { makespan, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, table_spec};
    use crate::model::RawInstance;
    use crate::solver::{solve_classic, SolveOptions};
    use Location::{City, Goal, Initial};

    fn four_city_instance() -> Instance {
        let central = (0..4).map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
        let raw = RawInstance {
            n: 4,
            t: 3,
            p: 2,
            d: vec![1.0, 2.0, 3.0, 4.0],
            dbar: vec![4.0, 3.0, 2.0, 1.0],
            c: vec![1.0; 4],
            central: Some(central),
            overrides: Vec::new(),
        };
        crate::model::validate(raw).unwrap()
    }

    #[test]
    fn example_plan_leaves_a_traveler_behind() {
        // drawn itineraries: the flights out of c3 are empty, so t0 and t2 stay there
        let inst = four_city_instance();
        let mut p0 = vec![(City(3), Some(0)), (Goal, None), (City(1), None), (Goal, Some(1))];
        let mut p1 = vec![(City(1), Some(1)), (Initial, None), (City(2), Some(2)), (City(3), Some(2)), (Goal, None)];
        let drawn = itinerary_actions(&inst, &[p0.clone(), p1.clone()]).unwrap();
        assert_eq!(simulate(&inst, &drawn), Err(PddlError::Goal("t0 ends at c3".into())));
        p0[1].1 = Some(0);
        p1[4].1 = Some(2);
        let fixed = itinerary_actions(&inst, &[p0, p1]).unwrap();
        // p0 reaches c1 at 8 and carries t1 to cg by 11; p1 lands at cg at 9
        assert_eq!(simulate(&inst, &fixed), Ok(SimulationResult { makespan: 11.0, cost: 5.0 }));
        check_syntax(&export_pddl(&inst).unwrap()).unwrap();
        assert!(fixed[0].render(&inst).starts_with("0.000: (board t0 p0 ci)"));
    }

    #[test]
    fn witnesses_replay_on_the_domain() {
        let inst = generate(&table_spec(4)).unwrap();
        let (front, _) = solve_classic(&inst, &SolveOptions::default()).unwrap();
        for pt in &front.points {
            let sim = simulate(&inst, &schedule_actions(&pt.witness)).unwrap();
            assert!((sim.makespan - pt.makespan).abs() < 1e-9 && (sim.cost - pt.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn simulator_rejects_double_boarding() {
        let inst = Instance::new(vec![1.0], vec![1.0], vec![1.0], 2, 1).unwrap();
        let board = |person| PlanAction { start: 0.0, plane: 0, kind: ActionKind::Board { person, city: Initial } };
        let err = simulate(&inst, &[board(0), board(1)]).unwrap_err();
        assert!(matches!(err, PddlError::Plan { step: 1, .. }));
    }

    #[test]
    fn single_city_problem() {
        let inst = Instance::new(vec![1.0], vec![1.0], vec![1.0], 1, 1).unwrap();
        let pair = export_pddl(&inst).unwrap();
        check_syntax(&pair).unwrap();
        let form = parse_sexp(&pair.problem).unwrap();
        let objects = typed_names(&form.section(":objects").unwrap()[1..]).unwrap();
        assert_eq!(objects, ["p0", "t0", "ci", "cg", "c0"]);
    }

    #[test]
    fn table_instance_passes_checker() {
        let pair = export_pddl(&generate(&table_spec(3)).unwrap()).unwrap();
        check_syntax(&pair).unwrap();
        assert!(pair.problem.contains("(= (flight-time ci c2) 3)"));
        assert!(!pair.problem.contains("(connected ci cg)"));
    }

    #[test]
    fn checker_rejects_bad_text() {
        let good = export_pddl(&generate(&table_spec(3)).unwrap()).unwrap();
        let unbalanced = PddlPair { problem: good.problem.trim_end().trim_end_matches(')').to_string(), ..good.clone() };
        assert!(matches!(check_syntax(&unbalanced), Err(PddlError::Syntax(_))));
        let stray = PddlPair { problem: good.problem.replace("(at-person t0 cg)", "(at-person t9 cg)"), ..good.clone() };
        assert!(check_syntax(&stray).unwrap_err().to_string().contains("t9"));
        let wrong_domain = PddlPair { problem: good.problem.replace(DOMAIN_NAME, "zeno"), ..good };
        assert!(check_syntax(&wrong_domain).is_err());
    }

    #[test]
    fn refuses_overrides() {
        let mut raw = Instance::new(vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 1.0], 2, 1).unwrap().to_raw();
        let spec = crate::model::PatternSpec { first: 1.0, last: 1.0, cost: 1.0 };
        raw.overrides.push(crate::model::CityOverride { city: 0, a: spec, abar: spec, b: spec, bbar: spec, bridge: None });
        let inst = crate::model::validate(raw).unwrap();
        let err = export_pddl(&inst).unwrap_err();
        assert!(err.to_string().contains("export original instance before transformation"));
    }
}
