//! Componentwise Armijo backtracking, `t = beta0 * beta^k`, and its two
//! feasibility-aware variants.

use nalgebra::DVector;

use crate::direction::ActiveSet;
use crate::error::{GeometryError, LineSearchError};
use crate::geometry::{Chart, Retraction};
use crate::problem::{evaluate_values, EvalBundle, Problem, Values};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmijoParams {
    pub beta0: f64,
    pub beta: f64,
    pub sigma: f64,
    pub k_max: u32,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            beta0: 1.0,
            beta: 0.5,
            sigma: 1e-4,
            k_max: 60,
        }
    }
}

impl ArmijoParams {
    pub fn step_length(&self, k: u32) -> f64 {
        self.beta0 * self.beta.powi(k as i32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub t: f64,
    /// Backtracking exponent; for a boundary-landing step, the exponent of
    /// the last trial before the landing search.
    pub k: u32,
    /// `F(new)` at acceptance.
    pub armijo_lhs: DVector<f64>,
    /// `F(x) + sigma * t * DF(x) v` at acceptance.
    pub armijo_rhs: DVector<f64>,
    /// The plain Armijo step was shortened to keep or land the point in the
    /// feasible set.
    pub feasibility_repaired: bool,
    pub new_point: DVector<f64>,
}

/// Feasibility-aware variants accept a trial point when `G <= feas_tol`.
pub const DEFAULT_FEAS_TOL: f64 = 1e-9;

struct Trial {
    t: f64,
    point: DVector<f64>,
    values: Values,
    rhs: DVector<f64>,
}

impl Trial {
    fn armijo(&self) -> bool {
        self.values
            .f
            .iter()
            .zip(self.rhs.iter())
            .all(|(lhs, rhs)| lhs < rhs)
    }

    fn into_step(self, k: u32, repaired: bool) -> StepResult {
        StepResult {
            t: self.t,
            k,
            armijo_lhs: self.values.f,
            armijo_rhs: self.rhs,
            feasibility_repaired: repaired,
            new_point: self.point,
        }
    }
}

fn slopes(bundle: &EvalBundle, v: &DVector<f64>) -> Result<DVector<f64>, LineSearchError> {
    if v.len() != bundle.dim() {
        return Err(LineSearchError::Precondition(format!(
            "direction has length {}, expected {}",
            v.len(),
            bundle.dim()
        )));
    }
    let s = &bundle.df * v;
    if let Some(i) = s.iter().position(|&d| d.is_nan() || d >= 0.0) {
        return Err(LineSearchError::Precondition(format!(
            "not a descent direction: DF(x)v[{i}] = {:e}",
            s[i]
        )));
    }
    Ok(s)
}

/// Maps a step `w` from the current point to the retracted trial point.
pub type RetractFn<'a> = dyn Fn(&DVector<f64>) -> Result<DVector<f64>, GeometryError> + 'a;

/// Evaluates the retracted trial point for step length `t`. A retraction
/// failure rejects the trial rather than aborting the search.
fn trial(
    problem: &dyn Problem,
    bundle: &EvalBundle,
    v: &DVector<f64>,
    slope: &DVector<f64>,
    t: f64,
    sigma: f64,
    retract: &RetractFn<'_>,
) -> Result<Option<Trial>, LineSearchError> {
    let point = match retract(&(v * t)) {
        Ok(p) => p,
        Err(GeometryError::Problem(e)) => return Err(e.into()),
        Err(_) => return Ok(None),
    };
    let values = match evaluate_values(problem, &point) {
        Ok(vals) => vals,
        Err(_) => return Ok(None),
    };
    let rhs = &bundle.f + slope * (sigma * t);
    Ok(Some(Trial {
        t,
        point,
        values,
        rhs,
    }))
}

/// Plain Armijo backtracking through `retract`, which maps a step `w` to the
/// new point (e.g. `w -> pi(x + w)`).
pub fn armijo_step(
    problem: &dyn Problem,
    bundle: &EvalBundle,
    v: &DVector<f64>,
    retract: &RetractFn<'_>,
    params: &ArmijoParams,
) -> Result<StepResult, LineSearchError> {
    let slope = slopes(bundle, v)?;
    for k in 0..=params.k_max {
        let t = params.step_length(k);
        if let Some(tr) = trial(problem, bundle, v, &slope, t, params.sigma, retract)? {
            if tr.armijo() {
                return Ok(tr.into_step(k, false));
            }
        }
    }
    Err(LineSearchError::NoStep {
        k_max: params.k_max,
    })
}

/// Armijo backtracking on the equality manifold that also keeps every
/// inequality satisfied: the smallest `k` for which both hold.
///
/// `active` are the inequalities the direction was computed against; `v` must
/// strictly decrease each of them.
pub fn feasible_armijo_step(
    problem: &dyn Problem,
    bundle: &EvalBundle,
    v: &DVector<f64>,
    active: &ActiveSet,
    retraction: &dyn Retraction,
    params: &ArmijoParams,
    feas_tol: f64,
) -> Result<StepResult, LineSearchError> {
    let slope = slopes(bundle, v)?;
    for &i in &active.indices {
        let d = bundle.dg.row(i).transpose().dot(v);
        if d.is_nan() || d >= 0.0 {
            return Err(LineSearchError::Precondition(format!(
                "direction does not decrease active inequality {i}: slope {d:e}"
            )));
        }
    }
    let chart = Chart::manifold(problem);
    let retract = |w: &DVector<f64>| retraction.retract(&chart, &bundle.x, w);
    let mut first_armijo = None;
    for k in 0..=params.k_max {
        let t = params.step_length(k);
        let Some(tr) = trial(problem, bundle, v, &slope, t, params.sigma, &retract)? else {
            continue;
        };
        if !tr.armijo() {
            continue;
        }
        let k_armijo = *first_armijo.get_or_insert(k);
        if tr.values.max_inequality() <= feas_tol {
            return Ok(tr.into_step(k, k > k_armijo));
        }
    }
    Err(LineSearchError::NoStep {
        k_max: params.k_max,
    })
}

/// Armijo backtracking on the chart of the currently active inequalities.
///
/// If the Armijo point violates a previously inactive inequality, the step is
/// shortened to land on that inequality's boundary: geometric shrinking finds
/// a feasible trial, then bisection finds `t` with the largest inactive `G_j`
/// in `[-feas_tol, feas_tol]`. The landing point must still satisfy Armijo.
pub fn boundary_step(
    problem: &dyn Problem,
    bundle: &EvalBundle,
    v: &DVector<f64>,
    chart: &Chart<'_>,
    retraction: &dyn Retraction,
    params: &ArmijoParams,
    feas_tol: f64,
) -> Result<StepResult, LineSearchError> {
    let slope = slopes(bundle, v)?;
    let retract = |w: &DVector<f64>| retraction.retract(chart, &bundle.x, w);
    let inactive: Vec<usize> = (0..bundle.g.len())
        .filter(|i| !chart.inequalities().contains(i))
        .collect();
    let worst_inactive = |vals: &Values| {
        inactive
            .iter()
            .map(|&j| vals.g[j])
            .fold(f64::NEG_INFINITY, f64::max)
    };

    let mut armijo = None;
    for k in 0..=params.k_max {
        let t = params.step_length(k);
        if let Some(tr) = trial(problem, bundle, v, &slope, t, params.sigma, &retract)? {
            if tr.armijo() {
                armijo = Some((k, tr));
                break;
            }
        }
    }
    let Some((k_armijo, accepted)) = armijo else {
        return Err(LineSearchError::NoStep {
            k_max: params.k_max,
        });
    };
    if worst_inactive(&accepted.values) <= feas_tol {
        return Ok(accepted.into_step(k_armijo, false));
    }

    // Shrink until feasible; the last infeasible trial bounds the landing search.
    let mut hi = accepted.t;
    let mut lo = None;
    let mut k_lo = k_armijo;
    for k in (k_armijo + 1)..=params.k_max {
        let t = params.step_length(k);
        let Some(tr) = trial(problem, bundle, v, &slope, t, params.sigma, &retract)? else {
            continue;
        };
        let phi = worst_inactive(&tr.values);
        if phi <= feas_tol {
            k_lo = k;
            lo = Some(tr);
            break;
        }
        hi = t;
    }
    let Some(mut lo) = lo else {
        return Err(LineSearchError::NoStep {
            k_max: params.k_max,
        });
    };
    let mut lo_phi = worst_inactive(&lo.values);
    let mut hi_t = hi;
    for _ in 0..200 {
        if lo_phi >= -feas_tol {
            break;
        }
        let mid = 0.5 * (lo.t + hi_t);
        if mid <= lo.t || mid >= hi_t {
            break;
        }
        let Some(tr) = trial(problem, bundle, v, &slope, mid, params.sigma, &retract)? else {
            hi_t = mid;
            continue;
        };
        let phi = worst_inactive(&tr.values);
        if phi > feas_tol {
            hi_t = mid;
        } else {
            lo_phi = phi;
            lo = tr;
        }
    }
    if lo_phi >= -feas_tol && lo.armijo() {
        Ok(lo.into_step(k_lo, true))
    } else {
        Err(LineSearchError::NoStep {
            k_max: params.k_max,
        })
    }
}
