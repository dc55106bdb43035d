//! Steepest common descent directions.
//!
//! All four subproblem variants reduce to one computation: restrict the
//! generator gradients to the kernel of a set of constraint rows, find the
//! minimum-norm point of their convex hull, and negate it.
//!
//! | kind            | kernel of              | hull generators               |
//! |-----------------|------------------------|-------------------------------|
//! | `Unconstrained` | (nothing)              | objective gradients           |
//! | `Equality`      | `DH`                   | objective gradients           |
//! | `ObjectiveIcs`  | `DH`                   | objectives + active `DG` rows |
//! | `EqualityIcs`   | `DH` + active `DG` rows| objective gradients           |

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::DirectionError;
use crate::hull::min_norm_in_hull;
use crate::problem::EvalBundle;

/// Relative rank cutoff: singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Inequalities with `G_i(x) >= -epsilon` at the defining point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    /// Sorted, zero-based inequality indices.
    pub indices: Vec<usize>,
    pub epsilon: f64,
}

impl ActiveSet {
    pub fn empty(epsilon: f64) -> Self {
        Self {
            indices: Vec::new(),
            epsilon,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

pub fn active_set(bundle: &EvalBundle, epsilon: f64) -> ActiveSet {
    active_set_of(&bundle.g, epsilon)
}

pub(crate) fn active_set_of(g: &DVector<f64>, epsilon: f64) -> ActiveSet {
    debug_assert!(epsilon >= 0.0);
    ActiveSet {
        indices: g
            .iter()
            .enumerate()
            .filter(|(_, &gi)| gi >= -epsilon)
            .map(|(i, _)| i)
            .collect(),
        epsilon,
    }
}

/// Orthonormal basis (as columns) of the kernel of the `k x n` matrix `rows`.
///
/// Fails with [`DirectionError::Rank`] unless the rows are linearly independent.
pub fn tangent_basis(rows: &DMatrix<f64>) -> Result<DMatrix<f64>, DirectionError> {
    let (k, n) = rows.shape();
    if k == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    if k > n {
        return Err(DirectionError::Rank { rank: n, rows: k });
    }
    // Pad rows^T (n x k) to n x n; its full left singular basis splits into
    // range(rows^T) and the kernel of rows.
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (n, k)).copy_from(&rows.transpose());
    let svd = padded.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.max();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let rank = order
        .iter()
        .filter(|&&i| smax > 0.0 && sv[i] > RANK_TOL * smax)
        .count();
    if rank < k {
        return Err(DirectionError::Rank { rank, rows: k });
    }
    let mut basis = DMatrix::zeros(n, n - k);
    for (c, &i) in order[k..].iter().enumerate() {
        basis.set_column(c, &u.column(i));
    }
    Ok(basis)
}

/// Which subproblem a direction solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubproblemKind {
    /// Objectives only, no constraints.
    Unconstrained,
    /// Directions tangent to `H = 0`.
    Equality,
    /// Tangent to `H = 0`; active inequalities join the objectives.
    ObjectiveIcs,
    /// Tangent to `H = 0` and to every active inequality boundary.
    EqualityIcs,
}

/// Owner of one hull generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    Objective(usize),
    Inequality(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionResult {
    pub v: DVector<f64>,
    /// Optimal value `max_j g_j.v + |v|^2 / 2`; never positive.
    pub alpha: f64,
    /// Simplex weights, aligned with `generators`.
    pub lambda: Vec<f64>,
    pub generators: Vec<Generator>,
    /// Generator gradients projected onto the tangent space, aligned with `generators`.
    pub projected: Vec<DVector<f64>>,
    pub kind: SubproblemKind,
    /// Inequalities used by the subproblem (empty for `Unconstrained` and `Equality`).
    pub active: ActiveSet,
    /// Positions in `generators` attaining `max_j g_j.v`.
    pub maxset: Vec<usize>,
}

impl DirectionResult {
    /// `max_j g_j.w + |w|^2 / 2` over this result's generators.
    pub fn value_of(&self, w: &DVector<f64>) -> f64 {
        let max = self
            .projected
            .iter()
            .map(|g| g.dot(w))
            .fold(f64::NEG_INFINITY, f64::max);
        max + 0.5 * w.norm_squared()
    }

    /// Whether `w` is an approximate solution with tolerance `gamma`: tangent
    /// (orthogonal to the constraint rows within `tol`) and
    /// `value_of(w) <= gamma * alpha`.
    pub fn is_approximate_solution(
        &self,
        constraint_rows: &DMatrix<f64>,
        w: &DVector<f64>,
        gamma: f64,
        tol: f64,
    ) -> bool {
        let tangent = constraint_rows.nrows() == 0 || (constraint_rows * w).amax() <= tol;
        tangent && self.value_of(w) <= gamma * self.alpha + tol
    }
}

/// Rows whose kernel the direction of `kind` must lie in.
pub fn constraint_rows(
    bundle: &EvalBundle,
    kind: SubproblemKind,
    active: &ActiveSet,
) -> DMatrix<f64> {
    let n = bundle.dim();
    match kind {
        SubproblemKind::Unconstrained => DMatrix::zeros(0, n),
        SubproblemKind::Equality | SubproblemKind::ObjectiveIcs => bundle.dh.clone(),
        SubproblemKind::EqualityIcs => {
            let mh = bundle.dh.nrows();
            let mut rows = DMatrix::zeros(mh + active.len(), n);
            rows.view_mut((0, 0), (mh, n)).copy_from(&bundle.dh);
            for (r, &i) in active.indices.iter().enumerate() {
                rows.set_row(mh + r, &bundle.dg.row(i));
            }
            rows
        }
    }
}

/// Solves the subproblem of `kind` at the bundle's point.
///
/// `epsilon` is the activation tolerance for inequalities (ignored by
/// `Unconstrained` and `Equality`). `gamma` must lie in `(0, 1]`; the solve is
/// always exact, so the result is admissible for every such `gamma`.
pub fn solve_direction(
    bundle: &EvalBundle,
    kind: SubproblemKind,
    epsilon: f64,
    gamma: f64,
) -> Result<DirectionResult, DirectionError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(DirectionError::Gamma(gamma));
    }
    let n = bundle.dim();
    if bundle.df.ncols() != n || bundle.dh.ncols() != n || bundle.dg.ncols() != n {
        return Err(DirectionError::Dimension(format!(
            "Jacobians must have {n} columns"
        )));
    }
    if bundle.df.nrows() == 0 {
        return Err(DirectionError::Dimension("no objectives".into()));
    }
    let active = match kind {
        SubproblemKind::ObjectiveIcs | SubproblemKind::EqualityIcs => active_set(bundle, epsilon),
        _ => ActiveSet::empty(epsilon),
    };
    let rows = constraint_rows(bundle, kind, &active);
    let basis = tangent_basis(&rows)?;

    let mut generators: Vec<Generator> = (0..bundle.df.nrows()).map(Generator::Objective).collect();
    if kind == SubproblemKind::ObjectiveIcs {
        generators.extend(active.indices.iter().map(|&i| Generator::Inequality(i)));
    }
    let gradient = |g: &Generator| -> DVector<f64> {
        match *g {
            Generator::Objective(i) => bundle.df.row(i).transpose(),
            Generator::Inequality(i) => bundle.dg.row(i).transpose(),
        }
    };
    // Kernel coordinates of each gradient.
    let coords: Vec<DVector<f64>> = generators
        .iter()
        .map(|g| basis.tr_mul(&gradient(g)))
        .collect();
    let projected: Vec<DVector<f64>> = coords.iter().map(|c| &basis * c).collect();

    let (lambda, v) = if basis.ncols() == 0 {
        // Zero-dimensional tangent space: only v = 0 is admissible.
        let mut l = vec![0.0; generators.len()];
        l[0] = 1.0;
        (l, DVector::zeros(n))
    } else {
        let sol = min_norm_in_hull(&coords);
        (sol.weights, -(&basis * sol.point))
    };

    let slopes: Vec<f64> = generators.iter().map(|g| gradient(g).dot(&v)).collect();
    let max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let alpha = (max + 0.5 * v.norm_squared()).min(0.0);
    let cut = 1e-8 * max.abs().max(1.0);
    let maxset = slopes
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= max - cut)
        .map(|(i, _)| i)
        .collect();

    Ok(DirectionResult {
        v,
        alpha,
        lambda,
        generators,
        projected,
        kind,
        active,
        maxset,
    })
}
