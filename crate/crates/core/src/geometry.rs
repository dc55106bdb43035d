//! Projections and retractions onto constraint manifolds.
//!
//! A [`Chart`] is the manifold `{H = 0, G_i = 0 for i in I}` for a chosen set
//! `I` of inequalities. Retractions map `x + step` back onto a chart and are
//! selected by name through [`RetractionKind`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::problem::{evaluate_values, Problem};

pub const MAX_PROJECTION_ITERS: usize = 100;

/// Constraint residual at which a projection counts as converged.
const FEAS_TOL: f64 = 1e-12;
/// Stationarity residual at which a projection counts as converged.
const STAT_TOL: f64 = 1e-10;

/// The manifold cut out by all equalities plus a chosen set of inequalities
/// treated as equalities.
#[derive(Clone, Copy)]
pub struct Chart<'a> {
    problem: &'a dyn Problem,
    inequalities: &'a [usize],
}

impl<'a> Chart<'a> {
    /// The equality manifold `H = 0`.
    pub fn manifold(problem: &'a dyn Problem) -> Self {
        Self {
            problem,
            inequalities: &[],
        }
    }

    /// `H = 0` together with `G_i = 0` for each listed (zero-based) index.
    pub fn with_inequalities(problem: &'a dyn Problem, inequalities: &'a [usize]) -> Self {
        Self {
            problem,
            inequalities,
        }
    }

    pub fn problem(&self) -> &'a dyn Problem {
        self.problem
    }

    pub fn inequalities(&self) -> &'a [usize] {
        self.inequalities
    }

    /// Number of defining constraints.
    pub fn codim(&self) -> usize {
        self.problem.num_equalities() + self.inequalities.len()
    }

    pub fn residual(&self, z: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
        let vals = evaluate_values(self.problem, z)?;
        let mh = vals.h.len();
        let mut c = DVector::zeros(self.codim());
        c.rows_mut(0, mh).copy_from(&vals.h);
        for (r, &i) in self.inequalities.iter().enumerate() {
            c[mh + r] = vals.g[i];
        }
        Ok(c)
    }

    pub fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>, GeometryError> {
        let n = self.problem.dim();
        let dh = self.problem.equality_jacobian(z);
        let mh = dh.nrows();
        let mut j = DMatrix::zeros(self.codim(), n);
        j.view_mut((0, 0), (mh, n)).copy_from(&dh);
        if !self.inequalities.is_empty() {
            let dg = self.problem.inequality_jacobian(z);
            for (r, &i) in self.inequalities.iter().enumerate() {
                j.set_row(mh + r, &dg.row(i));
            }
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NoConvergence {
                iterations: 0,
                reason: "non-finite constraint Jacobian".into(),
            });
        }
        Ok(j)
    }

    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> Result<bool, GeometryError> {
        Ok(self.codim() == 0 || self.residual(z)?.amax() <= tol)
    }
}

/// Nearest point of `chart` to `y`, by Lagrange-Newton iteration started at `y`.
pub fn project(chart: &Chart<'_>, y: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
    project_from(chart, y, y)
}

/// Like [`project`], with the Newton iteration started at `start` instead of `y`.
///
/// Solves the stationarity system `z - y + J(z)^T mu = 0`, `c(z) = 0`. The
/// Hessian of `mu . c` is built from central differences of the Jacobian.
/// Steps are damped on the squared KKT residual.
pub fn project_from(
    chart: &Chart<'_>,
    y: &DVector<f64>,
    start: &DVector<f64>,
) -> Result<DVector<f64>, GeometryError> {
    let k = chart.codim();
    if k == 0 {
        return Ok(y.clone());
    }
    let n = y.len();
    let mut z = start.clone();
    let mut jac = chart.jacobian(&z)?;
    let mut c = chart.residual(&z)?;
    // Least-squares multiplier estimate; zero when starting at y.
    let mut mu = {
        let jjt = &jac * jac.transpose();
        let rhs = -(&jac * (&z - y));
        jjt.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(k))
    };

    for iter in 0..MAX_PROJECTION_ITERS {
        let stat = &z - y + jac.tr_mul(&mu);
        let merit = stat.norm_squared() + c.norm_squared();
        if c.amax() <= FEAS_TOL && stat.amax() <= STAT_TOL {
            return Ok(z);
        }

        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut hess = DMatrix::identity(n, n);
        if mu.amax() > 0.0 {
            hess += lagrangian_hessian(chart, &z, &mu)?;
        }
        kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        kkt.view_mut((0, n), (n, k)).copy_from(&jac.transpose());
        kkt.view_mut((n, 0), (k, n)).copy_from(&jac);
        let mut rhs = DVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&stat));
        rhs.rows_mut(n, k).copy_from(&(-&c));
        let delta = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| GeometryError::NoConvergence {
                iterations: iter,
                reason: "singular KKT matrix".into(),
            })?;
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(GeometryError::NoConvergence {
                iterations: iter,
                reason: "non-finite Newton step".into(),
            });
        }
        let dz = delta.rows(0, n).into_owned();
        let dmu = delta.rows(n, k).into_owned();

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let zt = &z + &dz * step;
            let mut_ = &mu + &dmu * step;
            if let (Ok(ct), Ok(jt)) = (chart.residual(&zt), chart.jacobian(&zt)) {
                let st = &zt - y + jt.tr_mul(&mut_);
                let mt = st.norm_squared() + ct.norm_squared();
                if mt < merit || (step == 1.0 && mt <= merit * (1.0 + 1e-12)) {
                    z = zt;
                    mu = mut_;
                    c = ct;
                    jac = jt;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(GeometryError::NoConvergence {
                iterations: iter,
                reason: "damped Newton step made no progress".into(),
            });
        }
    }
    Err(GeometryError::NoConvergence {
        iterations: MAX_PROJECTION_ITERS,
        reason: "iteration limit".into(),
    })
}

/// Central-difference Hessian of `z -> mu . c(z)`, symmetrized.
fn lagrangian_hessian(
    chart: &Chart<'_>,
    z: &DVector<f64>,
    mu: &DVector<f64>,
) -> Result<DMatrix<f64>, GeometryError> {
    let n = z.len();
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = 1e-5 * z[j].abs().max(1.0);
        let mut zp = z.clone();
        zp[j] += h;
        let mut zm = z.clone();
        zm[j] -= h;
        let col = (chart.jacobian(&zp)?.tr_mul(mu) - chart.jacobian(&zm)?.tr_mul(mu)) / (2.0 * h);
        hess.set_column(j, &col);
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

/// Gauss-Newton feasibility restoration with a step cap; lands somewhere on
/// the chart, not necessarily at the nearest point.
fn restore(chart: &Chart<'_>, start: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
    let mut z = start.clone();
    let radius = z.norm().max(1.0);
    for iter in 0..200 {
        let c = chart.residual(&z)?;
        if c.amax() <= FEAS_TOL {
            return Ok(z);
        }
        let jac = chart.jacobian(&z)?;
        let jjt = &jac * jac.transpose();
        let w = jjt
            .lu()
            .solve(&c)
            .ok_or_else(|| GeometryError::NoConvergence {
                iterations: iter,
                reason: "rank-deficient constraint Jacobian".into(),
            })?;
        let mut dz = -jac.tr_mul(&w);
        let len = dz.norm();
        if !len.is_finite() {
            break;
        }
        if len > radius {
            dz *= radius / len;
        }
        let base = c.norm();
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let zt = &z + &dz * step;
            if chart
                .residual(&zt)
                .map(|ct| ct.norm() < base)
                .unwrap_or(false)
            {
                z = zt;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Err(GeometryError::NoConvergence {
        iterations: 200,
        reason: "feasibility restoration stalled".into(),
    })
}

/// Projection that survives degenerate starting points: on failure, restore
/// feasibility from a slightly shifted start and polish toward `y`.
fn robust_project(chart: &Chart<'_>, y: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
    match project(chart, y) {
        Ok(z) => Ok(z),
        Err(first) => {
            let n = y.len();
            let shift = DVector::from_fn(n, |i, _| 1e-3 * (1.0 + i as f64) / n as f64);
            for sign in [1.0, -1.0] {
                let start = y + &shift * sign;
                if let Ok(z0) = restore(chart, &start) {
                    if let Ok(z) = project_from(chart, y, &z0) {
                        return Ok(z);
                    }
                }
            }
            Err(first)
        }
    }
}

/// Tolerance for "feasible" in [`feasible_start`].
pub const START_TOL: f64 = 1e-9;

/// A locally nearest feasible point to `x`: `|H| <= 1e-9`, `G <= 1e-9`.
///
/// Active-set loop: project onto the chart of the currently violated
/// inequalities, add newly violated ones, drop those with negative
/// multipliers, repeat.
pub fn feasible_start(
    problem: &dyn Problem,
    x: &DVector<f64>,
) -> Result<DVector<f64>, GeometryError> {
    let vals = evaluate_values(problem, x)?;
    if vals.equality_violation() <= START_TOL && vals.max_inequality() <= START_TOL {
        return Ok(x.clone());
    }
    let mut working: Vec<usize> = vals
        .g
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > START_TOL)
        .map(|(i, _)| i)
        .collect();
    let rounds = 2 * problem.num_inequalities() + 4;
    for _ in 0..rounds {
        let chart = Chart::with_inequalities(problem, &working);
        let z = robust_project(&chart, x)?;
        let vz = evaluate_values(problem, &z)?;
        let violated: Vec<usize> =
            vz.g.iter()
                .enumerate()
                .filter(|(i, &g)| g > START_TOL && !working.contains(i))
                .map(|(i, _)| i)
                .collect();
        if !violated.is_empty() {
            working.extend(violated);
            working.sort_unstable();
            continue;
        }
        // Multipliers from z - x + J^T mu = 0; inequalities need mu >= 0.
        let mh = problem.num_equalities();
        let negative = if working.is_empty() {
            None
        } else {
            let jac = chart.jacobian(&z)?;
            let jjt = &jac * jac.transpose();
            let mu = jjt
                .lu()
                .solve(&(-(&jac * (&z - x))))
                .unwrap_or_else(|| DVector::zeros(chart.codim()));
            (0..working.len())
                .filter(|&r| mu[mh + r] < -1e-10)
                .min_by(|&a, &b| mu[mh + a].total_cmp(&mu[mh + b]))
        };
        match negative {
            Some(r) => {
                working.remove(r);
            }
            None => return Ok(z),
        }
    }
    Err(GeometryError::NoConvergence {
        iterations: rounds,
        reason: "active-set loop for the feasible start did not settle".into(),
    })
}

/// `x + w + s * grad c(x)` with `s` the smallest-magnitude root of
/// `s -> c(x + w + s * grad c(x))`, for charts with one defining constraint.
pub fn retract_psi(
    chart: &Chart<'_>,
    x: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<DVector<f64>, GeometryError> {
    if chart.codim() != 1 {
        return Err(GeometryError::UnsupportedChart {
            codim: chart.codim(),
        });
    }
    let grad = chart.jacobian(x)?.row(0).transpose();
    let p = x + w;
    let phi = |s: f64| -> Result<f64, GeometryError> { Ok(chart.residual(&(&p + &grad * s))?[0]) };
    let phi0 = phi(0.0)?;
    if phi0 == 0.0 {
        return Ok(p);
    }
    let g2 = grad.norm_squared();
    if g2 == 0.0 {
        return Err(GeometryError::NoRoot);
    }
    let mut width = (phi0.abs() / g2).max(1e-14);
    let (mut pos_prev, mut neg_prev) = ((0.0, phi0), (0.0, phi0));
    for _ in 0..64 {
        let pos = (width, phi(width)?);
        let neg = (-width, phi(-width)?);
        let mut roots = Vec::new();
        if pos.1 == 0.0 || pos_prev.1.signum() != pos.1.signum() {
            roots.push(bracketed_root(&phi, pos_prev, pos)?);
        }
        if neg.1 == 0.0 || neg_prev.1.signum() != neg.1.signum() {
            roots.push(bracketed_root(&phi, neg_prev, neg)?);
        }
        if let Some(s) = roots.into_iter().min_by(|a, b| a.abs().total_cmp(&b.abs())) {
            return Ok(&p + &grad * s);
        }
        pos_prev = pos;
        neg_prev = neg;
        width *= 2.0;
    }
    Err(GeometryError::NoRoot)
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn bracketed_root(
    phi: &dyn Fn(f64) -> Result<f64, GeometryError>,
    a: (f64, f64),
    b: (f64, f64),
) -> Result<f64, GeometryError> {
    let (mut a, mut fa) = a;
    let (mut b, mut fb) = b;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) {
            c
        } else {
            0.5 * (a + b)
        };
        let fc = phi(c)?;
        if fc == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * c.abs().max(1e-300) {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fc.abs() <= 1e-15 {
            return Ok(c);
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Maps a point `x` on a chart and a step `w` back onto the chart.
pub trait Retraction: Send + Sync {
    fn name(&self) -> &'static str;

    fn retract(
        &self,
        chart: &Chart<'_>,
        x: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<DVector<f64>, GeometryError>;
}

/// Nearest-point projection of `x + w`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProjectionRetraction;

impl Retraction for ProjectionRetraction {
    fn name(&self) -> &'static str {
        "project"
    }

    fn retract(
        &self,
        chart: &Chart<'_>,
        x: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<DVector<f64>, GeometryError> {
        project(chart, &(x + w))
    }
}

/// Correction along the constraint gradient at `x` (see [`retract_psi`]).
/// Charts with more than one constraint fall back to projection.
#[derive(Clone, Copy, Debug, Default)]
pub struct PsiRetraction;

impl Retraction for PsiRetraction {
    fn name(&self) -> &'static str {
        "psi"
    }

    fn retract(
        &self,
        chart: &Chart<'_>,
        x: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<DVector<f64>, GeometryError> {
        match chart.codim() {
            0 => Ok(x + w),
            1 => retract_psi(chart, x, w),
            _ => project(chart, &(x + w)),
        }
    }
}

static PROJECTION: ProjectionRetraction = ProjectionRetraction;
static PSI: PsiRetraction = PsiRetraction;

/// Registered retractions, selectable by name.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetractionKind {
    #[default]
    Project,
    Psi,
}

impl RetractionKind {
    pub const NAMES: [&'static str; 2] = ["project", "psi"];

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "project" => Some(Self::Project),
            "psi" => Some(Self::Psi),
            _ => None,
        }
    }

    pub fn get(self) -> &'static dyn Retraction {
        match self {
            Self::Project => &PROJECTION,
            Self::Psi => &PSI,
        }
    }
}
