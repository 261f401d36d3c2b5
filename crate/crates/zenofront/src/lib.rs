//! Exact Pareto fronts (plan cost × makespan) for MultiZenoTravel instances.
//!
//! Clique instances are solved by enumerating plan skeletons ([`schedule::Ppp`]) and scheduling
//! each one optimally. General graphs reduce to cliques through non-dominated paths, and
//! crossing city pairs are handled by virtual cities with relay bridges. The [`oracle`] module
//! is an independent state-space search used to check everything else at toy scale.

pub mod combinatorics;
pub mod generators;
pub mod io;
pub mod model;
pub mod openflight;
pub mod oracle;
pub mod pddl;
pub mod schedule;
pub mod solver;
pub mod transform;

pub use model::{eps, Instance, Location, ModelError, PatternKind, RawInstance};
pub use schedule::{lowest_makespan, Ppp, Schedule};
pub use solver::{same_values, solve_classic, solve_noduplicate, FrontPoint, ParetoFront, SolveOptions, Stats};
