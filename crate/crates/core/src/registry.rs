//! Named problem registry.
//!
//! Problems are registered as factories under a name and looked up at run
//! time (CLI `--problem`). Diagnostic fixtures live in the same table but are
//! excluded from [`ProblemRegistry::names`], so "audit everything" never picks
//! them up.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::ProblemError;
use crate::problem::{Problem, SamplingBox};

type Factory = Box<dyn Fn() -> Arc<dyn Problem> + Send + Sync>;

struct Entry {
    summary: &'static str,
    fixture: bool,
    factory: Factory,
}

pub struct ProblemRegistry {
    entries: BTreeMap<String, Entry>,
}

impl Default for ProblemRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ProblemRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Registry holding the built-in test problems and diagnostic fixtures.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(
            "circle2d",
            "two shifted paraboloids outside the unit disk (n=2, m=2, m_G=1)",
            || Arc::new(Circle2d),
        );
        reg.register(
            "sphere3d",
            "minimize x3 on the unit sphere (n=3, m=1, m_H=1)",
            || Arc::new(Sphere3d),
        );
        reg.register_fixture(
            "broken-jacobian-fixture",
            "circle2d with a deliberately wrong objective Jacobian",
            || Arc::new(BrokenJacobian),
        );
        reg
    }

    pub fn register<F>(&mut self, name: &str, summary: &'static str, factory: F)
    where
        F: Fn() -> Arc<dyn Problem> + Send + Sync + 'static,
    {
        self.insert(name, summary, false, Box::new(factory));
    }

    pub fn register_fixture<F>(&mut self, name: &str, summary: &'static str, factory: F)
    where
        F: Fn() -> Arc<dyn Problem> + Send + Sync + 'static,
    {
        self.insert(name, summary, true, Box::new(factory));
    }

    fn insert(&mut self, name: &str, summary: &'static str, fixture: bool, factory: Factory) {
        self.entries.insert(
            name.to_string(),
            Entry {
                summary,
                fixture,
                factory,
            },
        );
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Problem>, ProblemError> {
        match self.entries.get(name) {
            Some(entry) => Ok((entry.factory)()),
            None => Err(ProblemError::UnknownProblem {
                name: name.to_string(),
                available: self.entries.keys().cloned().collect(),
            }),
        }
    }

    /// Names of regular (non-fixture) problems, sorted.
    pub fn names(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, e)| !e.fixture)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// Every registered name with its summary and fixture flag.
    pub fn describe(&self) -> Vec<(&str, &'static str, bool)> {
        self.entries
            .iter()
            .map(|(k, e)| (k.as_str(), e.summary, e.fixture))
            .collect()
    }
}

/// Looks `name` up in the built-in registry.
pub fn registry_get(name: &str) -> Result<Arc<dyn Problem>, ProblemError> {
    ProblemRegistry::builtin().get(name)
}

/// `F = ((x1-2)^2 + (x2-1)^2, (x1-2)^2 + (x2+1)^2)` subject to
/// `1 - x1^2 - x2^2 <= 0`: the feasible set is the plane minus the open unit
/// disk.
#[derive(Clone, Copy, Debug, Default)]
pub struct Circle2d;

impl Problem for Circle2d {
    fn name(&self) -> &str {
        "circle2d"
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_objectives(&self) -> usize {
        2
    }
    fn num_inequalities(&self) -> usize {
        1
    }
    fn objectives(&self, x: &DVector<f64>) -> DVector<f64> {
        let a = x[0] - 2.0;
        DVector::from_vec(vec![
            a * a + (x[1] - 1.0).powi(2),
            a * a + (x[1] + 1.0).powi(2),
        ])
    }
    fn objective_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let a = 2.0 * (x[0] - 2.0);
        DMatrix::from_row_slice(2, 2, &[a, 2.0 * (x[1] - 1.0), a, 2.0 * (x[1] + 1.0)])
    }
    fn inequalities(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, 1.0 - x[0] * x[0] - x[1] * x[1])
    }
    fn inequality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 2, &[-2.0 * x[0], -2.0 * x[1]])
    }
    fn sampling_box(&self) -> SamplingBox {
        SamplingBox::cube(2, -3.0, 3.0)
    }
}

/// Minimize `x3` on the unit sphere.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sphere3d;

impl Problem for Sphere3d {
    fn name(&self) -> &str {
        "sphere3d"
    }
    fn dim(&self) -> usize {
        3
    }
    fn num_objectives(&self) -> usize {
        1
    }
    fn num_equalities(&self) -> usize {
        1
    }
    fn objectives(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, x[2])
    }
    fn objective_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0])
    }
    fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, x.norm_squared() - 1.0)
    }
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 3, &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2]])
    }
    fn sampling_box(&self) -> SamplingBox {
        SamplingBox::cube(3, -1.5, 1.5)
    }
}

/// Same values as [`Circle2d`], but `dF1/dx1` is off by one everywhere.
#[derive(Clone, Copy, Debug, Default)]
pub struct BrokenJacobian;

impl Problem for BrokenJacobian {
    fn name(&self) -> &str {
        "broken-jacobian-fixture"
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_objectives(&self) -> usize {
        2
    }
    fn num_inequalities(&self) -> usize {
        1
    }
    fn objectives(&self, x: &DVector<f64>) -> DVector<f64> {
        Circle2d.objectives(x)
    }
    fn objective_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut j = Circle2d.objective_jacobian(x);
        j[(0, 0)] += 1.0;
        j
    }
    fn inequalities(&self, x: &DVector<f64>) -> DVector<f64> {
        Circle2d.inequalities(x)
    }
    fn inequality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        Circle2d.inequality_jacobian(x)
    }
    fn sampling_box(&self) -> SamplingBox {
        Circle2d.sampling_box()
    }
}
