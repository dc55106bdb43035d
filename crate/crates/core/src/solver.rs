//! Descent loops.
//!
//! [`solve_equality`] handles problems without inequalities: it steps along
//! the steepest common descent direction in the tangent space and retracts.
//!
//! [`solve_constrained`] handles inequalities with two active-set strategies
//! combined by a threshold `eta`. Each iteration first solves the subproblem
//! that keeps the currently active inequalities as equalities (value
//! `alpha2`). If `alpha2 <= -eta` the step follows that boundary and may land
//! on a new one; otherwise the active inequalities join the objectives (value
//! `alpha1`) and the step moves back into the feasible set. With `eta = inf`
//! only the second branch is ever taken.

use std::fmt;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::direction::{active_set, solve_direction, ActiveSet, DirectionResult, SubproblemKind};
use crate::error::Error;
use crate::geometry::{feasible_start, project, Chart, RetractionKind};
use crate::linesearch::{
    armijo_step, boundary_step, feasible_armijo_step, ArmijoParams, StepResult,
};
use crate::problem::{evaluate, EvalBundle, Problem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial trial step length.
    pub beta0: f64,
    /// Backtracking factor.
    pub beta: f64,
    /// Armijo sufficient-decrease constant.
    pub sigma: f64,
    /// Activation tolerance for the objective-augmenting subproblem.
    pub epsilon: f64,
    /// Strategy threshold; `inf` disables boundary following.
    #[serde(serialize_with = "ser_eta", deserialize_with = "de_eta")]
    pub eta: f64,
    /// Approximation tolerance in `(0, 1]`. Directions are always exact.
    pub gamma: f64,
    /// Stop once `alpha >= -tol_alpha`.
    pub tol_alpha: f64,
    pub max_iters: usize,
    /// An inequality counts as exactly active when `G_i >= -eps_act`; also the
    /// feasibility tolerance of accepted steps.
    pub eps_act: f64,
    pub k_max: u32,
    pub retraction: RetractionKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta0: 1.0,
            beta: 0.5,
            sigma: 1e-4,
            epsilon: 1e-4,
            eta: f64::INFINITY,
            gamma: 1.0,
            tol_alpha: 1e-8,
            max_iters: 10_000,
            eps_act: 1e-9,
            k_max: 60,
            retraction: RetractionKind::Project,
        }
    }
}

fn ser_eta<S: Serializer>(eta: &f64, s: S) -> Result<S::Ok, S::Error> {
    if eta.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*eta)
    }
}

fn de_eta<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Str(s) => parse_eta(&s).map_err(serde::de::Error::custom),
    }
}

/// Parses a threshold value; `inf` selects pure objective augmentation.
pub fn parse_eta(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "Inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("invalid eta `{other}`: {e}")),
    }
}

impl SolverConfig {
    /// Parameter set of the circle example: `beta = 1/2`, `beta0 = 1/10`,
    /// `epsilon = 1e-4`.
    pub fn circle_example(eta: f64) -> Self {
        Self {
            beta0: 0.1,
            beta: 0.5,
            epsilon: 1e-4,
            eta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return fail(format!("beta0 must be positive, got {}", self.beta0));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return fail(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return fail(format!("sigma must lie in (0, 1), got {}", self.sigma));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return fail(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            ));
        }
        if self.eta.is_nan() || self.eta < 0.0 {
            return fail(format!("eta must be non-negative or inf, got {}", self.eta));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if !(self.tol_alpha >= 0.0 && self.eps_act >= 0.0) {
            return fail("tolerances must be non-negative".into());
        }
        Ok(())
    }

    pub fn armijo(&self) -> ArmijoParams {
        ArmijoParams {
            beta0: self.beta0,
            beta: self.beta,
            sigma: self.sigma,
            k_max: self.k_max,
        }
    }
}

/// Which rule produced a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Equality-constrained (or unconstrained) descent step.
    #[serde(rename = "EQ")]
    Equality,
    /// Active inequalities as extra objectives.
    #[serde(rename = "SP1")]
    ObjectiveIcs,
    /// Active inequalities as equalities (boundary following).
    #[serde(rename = "SP2")]
    EqualityIcs,
    /// Final record; no step taken.
    #[serde(rename = "NONE")]
    Terminal,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Equality => "EQ",
            Branch::ObjectiveIcs => "SP1",
            Branch::EqualityIcs => "SP2",
            Branch::Terminal => "NONE",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iter: usize,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    /// Value of the subproblem whose direction was used (for the terminal
    /// record, the stopping test's value).
    pub alpha: f64,
    /// Boundary-following value when it was computed this iteration.
    pub alpha2: Option<f64>,
    /// Inequalities used by the subproblem (zero-based).
    pub active_set: Vec<usize>,
    pub branch: Branch,
    pub t: Option<f64>,
    pub k: Option<u32>,
    pub feasibility_repaired: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    /// Stopping test met.
    TerminatedCritical,
    MaxIterations,
    /// Aborted by an error; see [`SolverError`].
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
    pub termination: Termination,
}

impl IterateTrace {
    fn new() -> Self {
        Self {
            records: Vec::new(),
            termination: Termination::Failed,
        }
    }

    /// Number of steps taken (the terminal record is not a step).
    pub fn iterations(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.branch != Branch::Terminal)
            .count()
    }

    pub fn count_branch(&self, branch: Branch) -> usize {
        self.records.iter().filter(|r| r.branch == branch).count()
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub x: DVector<f64>,
    pub f: DVector<f64>,
    /// Stopping-test value at `x`.
    pub alpha: f64,
    pub trace: IterateTrace,
    pub elapsed_secs: f64,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.trace.termination == Termination::TerminatedCritical
    }
}

/// A failed solve, with everything recorded up to the failure.
#[derive(Clone, Debug, thiserror::Error)]
#[error("{source} (after {} iterations)", trace.iterations())]
pub struct SolverError {
    pub source: Error,
    pub trace: IterateTrace,
}

fn fail(source: impl Into<Error>, mut trace: IterateTrace) -> SolverError {
    trace.termination = Termination::Failed;
    SolverError {
        source: source.into(),
        trace,
    }
}

fn record(
    iter: usize,
    bundle: &EvalBundle,
    dir: &DirectionResult,
    alpha2: Option<f64>,
    branch: Branch,
    step: Option<&StepResult>,
) -> IterateRecord {
    IterateRecord {
        iter,
        x: bundle.x.iter().copied().collect(),
        f: bundle.f.iter().copied().collect(),
        alpha: dir.alpha,
        alpha2,
        active_set: dir.active.indices.clone(),
        branch,
        t: step.map(|s| s.t),
        k: step.map(|s| s.k),
        feasibility_repaired: step.is_some_and(|s| s.feasibility_repaired),
    }
}

/// Runs the constrained or equality loop depending on whether the problem
/// has inequalities.
pub fn solve(
    problem: &dyn Problem,
    x_init: &DVector<f64>,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    if problem.num_inequalities() == 0 {
        solve_equality(problem, x_init, config)
    } else {
        solve_constrained(problem, x_init, config)
    }
}

/// Steepest descent on `H = 0` (plain steepest descent when there are no
/// equalities). Starts from the projection of `x_init`.
pub fn solve_equality(
    problem: &dyn Problem,
    x_init: &DVector<f64>,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    let started = Instant::now();
    let mut trace = IterateTrace::new();
    if let Err(e) = config.validate() {
        return Err(fail(e, trace));
    }
    if problem.num_inequalities() != 0 {
        return Err(fail(
            Error::Config(format!(
                "problem `{}` has inequalities; use the constrained solver",
                problem.name()
            )),
            trace,
        ));
    }
    let chart = Chart::manifold(problem);
    let kind = if problem.num_equalities() == 0 {
        SubproblemKind::Unconstrained
    } else {
        SubproblemKind::Equality
    };
    let mut x = match project(&chart, x_init) {
        Ok(x) => x,
        Err(e) => return Err(fail(e, trace)),
    };
    let retraction = config.retraction.get();
    let params = config.armijo();

    for iter in 0..=config.max_iters {
        let bundle = evaluate(problem, &x).map_err(|e| fail(e, trace.clone()))?;
        let dir = solve_direction(&bundle, kind, 0.0, config.gamma)
            .map_err(|e| fail(e, trace.clone()))?;
        if dir.alpha >= -config.tol_alpha || iter == config.max_iters {
            trace
                .records
                .push(record(iter, &bundle, &dir, None, Branch::Terminal, None));
            trace.termination = if dir.alpha >= -config.tol_alpha {
                Termination::TerminatedCritical
            } else {
                Termination::MaxIterations
            };
            return Ok(SolveOutcome {
                f: bundle.f.clone(),
                x,
                alpha: dir.alpha,
                trace,
                elapsed_secs: started.elapsed().as_secs_f64(),
            });
        }
        let retract = |w: &DVector<f64>| retraction.retract(&chart, &bundle.x, w);
        let step = armijo_step(problem, &bundle, &dir.v, &retract, &params)
            .map_err(|e| fail(e, trace.clone()))?;
        trace.records.push(record(
            iter,
            &bundle,
            &dir,
            None,
            Branch::Equality,
            Some(&step),
        ));
        x = step.new_point;
    }
    unreachable!("loop returns at iter == max_iters")
}

/// Descent with equality and inequality constraints, switching between the
/// two active-set strategies by `config.eta`.
pub fn solve_constrained(
    problem: &dyn Problem,
    x_init: &DVector<f64>,
    config: &SolverConfig,
) -> Result<SolveOutcome, SolverError> {
    let started = Instant::now();
    let mut trace = IterateTrace::new();
    if let Err(e) = config.validate() {
        return Err(fail(e, trace));
    }
    let mut x = match feasible_start(problem, x_init) {
        Ok(x) => x,
        Err(e) => return Err(fail(e, trace)),
    };
    let retraction = config.retraction.get();
    let params = config.armijo();
    let follow_boundaries = config.eta.is_finite();

    for iter in 0..=config.max_iters {
        let bundle = evaluate(problem, &x).map_err(|e| fail(e, trace.clone()))?;
        let eps_set = active_set(&bundle, config.epsilon);

        // With no inequality near activity both subproblems coincide, so one
        // solve serves both branches.
        let shared = eps_set.is_empty() && active_set(&bundle, config.eps_act).is_empty();
        let boundary_dir = if !follow_boundaries {
            None
        } else {
            let kind = if shared {
                SubproblemKind::ObjectiveIcs
            } else {
                SubproblemKind::EqualityIcs
            };
            let eps = if shared {
                config.epsilon
            } else {
                config.eps_act
            };
            Some(
                solve_direction(&bundle, kind, eps, config.gamma)
                    .map_err(|e| fail(e, trace.clone()))?,
            )
        };
        let alpha2 = boundary_dir.as_ref().map(|d| d.alpha);
        let leave_boundary = match alpha2 {
            None => true,
            Some(a) => a > -config.eta || a >= -config.tol_alpha,
        };

        if leave_boundary || iter == config.max_iters {
            let dir = match (shared, boundary_dir) {
                (true, Some(d)) => d,
                _ => solve_direction(
                    &bundle,
                    SubproblemKind::ObjectiveIcs,
                    config.epsilon,
                    config.gamma,
                )
                .map_err(|e| fail(e, trace.clone()))?,
            };
            if dir.alpha >= -config.tol_alpha || iter == config.max_iters {
                trace
                    .records
                    .push(record(iter, &bundle, &dir, alpha2, Branch::Terminal, None));
                trace.termination = if dir.alpha >= -config.tol_alpha {
                    Termination::TerminatedCritical
                } else {
                    Termination::MaxIterations
                };
                return Ok(SolveOutcome {
                    f: bundle.f.clone(),
                    x,
                    alpha: dir.alpha,
                    trace,
                    elapsed_secs: started.elapsed().as_secs_f64(),
                });
            }
            let step = feasible_armijo_step(
                problem,
                &bundle,
                &dir.v,
                &dir.active,
                retraction,
                &params,
                config.eps_act,
            )
            .map_err(|e| fail(e, trace.clone()))?;
            trace.records.push(record(
                iter,
                &bundle,
                &dir,
                alpha2,
                Branch::ObjectiveIcs,
                Some(&step),
            ));
            x = step.new_point;
        } else {
            let dir = boundary_dir.expect("boundary branch implies a boundary direction");
            let on: &ActiveSet = &dir.active;
            let chart = Chart::with_inequalities(problem, &on.indices);
            let step = boundary_step(
                problem,
                &bundle,
                &dir.v,
                &chart,
                retraction,
                &params,
                config.eps_act,
            )
            .map_err(|e| fail(e, trace.clone()))?;
            trace.records.push(record(
                iter,
                &bundle,
                &dir,
                alpha2,
                Branch::EqualityIcs,
                Some(&step),
            ));
            x = step.new_point;
        }
    }
    unreachable!("loop returns at iter == max_iters")
}
