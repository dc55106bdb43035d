//! Multiobjective steepest descent with equality and inequality constraints.
//!
//! Problems implement [`Problem`] and are looked up by name in a
//! [`ProblemRegistry`]. The solver computes common descent directions from a
//! min-norm subproblem ([`direction`]), steps with an Armijo rule
//! ([`linesearch`]) and returns to the feasible set with a retraction
//! ([`geometry`]). [`globalize`] runs the solver from a grid of starts and
//! filters the results by Pareto dominance.

pub use nalgebra;

pub mod audit;
pub mod direction;
pub mod error;
pub mod geometry;
pub mod globalize;
pub mod hull;
pub mod io;
pub mod linesearch;
pub mod oracle;
pub mod polynomial;
pub mod problem;
pub mod registry;
pub mod solver;

pub use direction::{active_set, solve_direction, ActiveSet, DirectionResult, SubproblemKind};
pub use error::{DirectionError, Error, GeometryError, LineSearchError, ProblemError};
pub use geometry::{feasible_start, project, retract_psi, Chart, Retraction, RetractionKind};
pub use globalize::{multistart, nondominated_filter, GridSpec, ParetoArchive};
pub use hull::{min_norm_in_hull, MinNormPoint};
pub use polynomial::PolynomialProblem;
pub use problem::{evaluate, fd_audit, EvalBundle, Problem, SamplingBox};
pub use registry::{registry_get, ProblemRegistry};
pub use solver::{
    solve, solve_constrained, solve_equality, Branch, IterateTrace, SolveOutcome, SolverConfig,
    SolverError, Termination,
};
