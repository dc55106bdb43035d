//! Constrained multiobjective problems as evaluable objects.
//!
//! A problem is `min F(x)` subject to `H(x) = 0` and `G(x) <= 0`, with all
//! first derivatives supplied in closed form by the implementor. Jacobians
//! store one gradient per row.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::ProblemError;

/// Axis-aligned box used to seed multistart runs and derivative audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SamplingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "box bounds differ in length");
        Self { lower, upper }
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }
}

/// A smooth constrained multiobjective problem.
///
/// Implementations must be immutable: every method is a pure function of its
/// arguments so a problem can be shared across threads.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    /// Decision-space dimension `n`.
    fn dim(&self) -> usize;

    /// Number of objectives `m`.
    fn num_objectives(&self) -> usize;

    fn num_equalities(&self) -> usize {
        0
    }

    fn num_inequalities(&self) -> usize {
        0
    }

    fn objectives(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `m x n` Jacobian of the objectives.
    fn objective_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    fn equalities(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }

    fn equality_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(0, self.dim())
    }

    fn inequalities(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }

    fn inequality_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(0, self.dim())
    }

    fn sampling_box(&self) -> SamplingBox;
}

impl fmt::Debug for dyn Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name())
            .field("n", &self.dim())
            .field("m", &self.num_objectives())
            .field("m_h", &self.num_equalities())
            .field("m_g", &self.num_inequalities())
            .finish()
    }
}

/// Which evaluated quantity a value belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    F,
    H,
    G,
    DF,
    DH,
    DG,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Component::F => "F",
            Component::H => "H",
            Component::G => "G",
            Component::DF => "DF",
            Component::DH => "DH",
            Component::DG => "DG",
        };
        f.write_str(s)
    }
}

/// Function values only (no Jacobians).
#[derive(Clone, Debug, PartialEq)]
pub struct Values {
    pub f: DVector<f64>,
    pub h: DVector<f64>,
    pub g: DVector<f64>,
}

impl Values {
    /// Largest inequality value, or `-inf` without inequalities.
    pub fn max_inequality(&self) -> f64 {
        self.g.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn equality_violation(&self) -> f64 {
        self.h.amax()
    }
}

/// All values and Jacobians of a problem at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalBundle {
    pub x: DVector<f64>,
    pub f: DVector<f64>,
    pub h: DVector<f64>,
    pub g: DVector<f64>,
    pub df: DMatrix<f64>,
    pub dh: DMatrix<f64>,
    pub dg: DMatrix<f64>,
}

impl EvalBundle {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn values(&self) -> Values {
        Values {
            f: self.f.clone(),
            h: self.h.clone(),
            g: self.g.clone(),
        }
    }
}

fn check_point(problem: &dyn Problem, x: &DVector<f64>) -> Result<(), ProblemError> {
    if x.len() != problem.dim() {
        return Err(ProblemError::Dimension {
            expected: problem.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

fn check_vector(
    component: Component,
    v: &DVector<f64>,
    expected: usize,
) -> Result<(), ProblemError> {
    if v.len() != expected {
        return Err(ProblemError::Shape {
            component,
            expected: (expected, 1),
            got: (v.len(), 1),
        });
    }
    match v.iter().position(|e| !e.is_finite()) {
        Some(index) => Err(ProblemError::Evaluation { component, index }),
        None => Ok(()),
    }
}

fn check_matrix(
    component: Component,
    m: &DMatrix<f64>,
    rows: usize,
    cols: usize,
) -> Result<(), ProblemError> {
    if m.shape() != (rows, cols) {
        return Err(ProblemError::Shape {
            component,
            expected: (rows, cols),
            got: m.shape(),
        });
    }
    // Column-major storage: report the flat row-major index.
    for r in 0..rows {
        for c in 0..cols {
            if !m[(r, c)].is_finite() {
                return Err(ProblemError::Evaluation {
                    component,
                    index: r * cols + c,
                });
            }
        }
    }
    Ok(())
}

/// Evaluates `F`, `H` and `G` at `x` and checks them for shape and finiteness.
pub fn evaluate_values(problem: &dyn Problem, x: &DVector<f64>) -> Result<Values, ProblemError> {
    check_point(problem, x)?;
    let f = problem.objectives(x);
    check_vector(Component::F, &f, problem.num_objectives())?;
    let h = problem.equalities(x);
    check_vector(Component::H, &h, problem.num_equalities())?;
    let g = problem.inequalities(x);
    check_vector(Component::G, &g, problem.num_inequalities())?;
    Ok(Values { f, h, g })
}

/// Evaluates every value and Jacobian of `problem` at `x`.
pub fn evaluate(problem: &dyn Problem, x: &DVector<f64>) -> Result<EvalBundle, ProblemError> {
    let Values { f, h, g } = evaluate_values(problem, x)?;
    let n = problem.dim();
    let df = problem.objective_jacobian(x);
    check_matrix(Component::DF, &df, problem.num_objectives(), n)?;
    let dh = problem.equality_jacobian(x);
    check_matrix(Component::DH, &dh, problem.num_equalities(), n)?;
    let dg = problem.inequality_jacobian(x);
    check_matrix(Component::DG, &dg, problem.num_inequalities(), n)?;
    Ok(EvalBundle {
        x: x.clone(),
        f,
        h,
        g,
        df,
        dh,
        dg,
    })
}

/// Compares every supplied Jacobian entry against a central difference with
/// step `h` and returns the worst relative error `|fd - exact| / max(1, |exact|)`.
pub fn fd_audit(problem: &dyn Problem, x: &DVector<f64>, h: f64) -> Result<f64, ProblemError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(ProblemError::InvalidArgument(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let bundle = evaluate(problem, x)?;
    let mut worst = 0.0_f64;
    for k in 0..problem.dim() {
        let mut plus = x.clone();
        plus[k] += h;
        let mut minus = x.clone();
        minus[k] -= h;
        let vp = evaluate_values(problem, &plus)?;
        let vm = evaluate_values(problem, &minus)?;
        let pairs = [
            (&vp.f, &vm.f, &bundle.df),
            (&vp.h, &vm.h, &bundle.dh),
            (&vp.g, &vm.g, &bundle.dg),
        ];
        for (fp, fm, jac) in pairs {
            for i in 0..fp.len() {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                let exact = jac[(i, k)];
                let err = (fd - exact).abs() / exact.abs().max(1.0);
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}
