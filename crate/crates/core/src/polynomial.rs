//! Polynomial problems loaded from a JSON description.
//!
//! ```json
//! {
//!   "name": "shifted-disk",
//!   "n": 2,
//!   "m": 2,
//!   "objectives":   [[[1.0, [2, 0]], [-4.0, [1, 0]], [4.0, [0, 0]], ...], ...],
//!   "equalities":   [],
//!   "inequalities": [[[-1.0, [2, 0]], [-1.0, [0, 2]], [1.0, [0, 0]]]],
//!   "sampling_box": {"lower": [-3, -3], "upper": [3, 3]}
//! }
//! ```
//!
//! Each function is a list of `(coefficient, exponent-vector)` monomials.
//! Monomials may also be written as `{"coefficient": c, "exponents": [...]}`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::ProblemError;
use crate::problem::{Problem, SamplingBox};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum MonomialRepr {
    Pair(f64, Vec<u32>),
    Object {
        coefficient: f64,
        exponents: Vec<u32>,
    },
}

#[derive(Clone, Debug, Deserialize)]
struct PolynomialDoc {
    #[serde(default)]
    name: Option<String>,
    n: usize,
    m: usize,
    objectives: Vec<Vec<MonomialRepr>>,
    #[serde(default)]
    equalities: Vec<Vec<MonomialRepr>>,
    #[serde(default)]
    inequalities: Vec<Vec<MonomialRepr>>,
    #[serde(default)]
    sampling_box: Option<SamplingBox>,
}

/// A real polynomial in `n` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, Vec<u32>)>) -> Self {
        Self { terms }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * monomial(x, e, None))
            .sum()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..x.len())
            .map(|k| {
                self.terms
                    .iter()
                    .filter(|(_, e)| e[k] > 0)
                    .map(|(c, e)| c * f64::from(e[k]) * monomial(x, e, Some(k)))
                    .sum()
            })
            .collect()
    }
}

/// `prod x_i^e_i`, with the exponent of `lowered` reduced by one.
fn monomial(x: &DVector<f64>, exps: &[u32], lowered: Option<usize>) -> f64 {
    exps.iter()
        .enumerate()
        .map(|(i, &e)| {
            let e = if Some(i) == lowered { e - 1 } else { e };
            x[i].powi(e as i32)
        })
        .product()
}

#[derive(Clone, Debug)]
pub struct PolynomialProblem {
    name: String,
    n: usize,
    objectives: Vec<Polynomial>,
    equalities: Vec<Polynomial>,
    inequalities: Vec<Polynomial>,
    sampling_box: SamplingBox,
}

impl PolynomialProblem {
    pub fn from_json_str(text: &str) -> Result<Self, ProblemError> {
        let doc: PolynomialDoc =
            serde_json::from_str(text).map_err(|e| ProblemError::Parse(e.to_string()))?;
        Self::from_doc(doc)
    }

    pub fn from_path(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProblemError::Parse(format!("{}: {e}", path.display())))?;
        let mut problem = Self::from_json_str(&text)?;
        if problem.name.is_empty() {
            problem.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(problem)
    }

    fn from_doc(doc: PolynomialDoc) -> Result<Self, ProblemError> {
        if doc.n == 0 {
            return Err(ProblemError::Parse("n must be at least 1".into()));
        }
        if doc.m == 0 || doc.objectives.len() != doc.m {
            return Err(ProblemError::Parse(format!(
                "m = {} but {} objectives given",
                doc.m,
                doc.objectives.len()
            )));
        }
        let n = doc.n;
        let convert = |what: &str, funcs: Vec<Vec<MonomialRepr>>| {
            funcs
                .into_iter()
                .enumerate()
                .map(|(i, terms)| {
                    let terms = terms
                        .into_iter()
                        .map(|t| match t {
                            MonomialRepr::Pair(c, e) => (c, e),
                            MonomialRepr::Object {
                                coefficient,
                                exponents,
                            } => (coefficient, exponents),
                        })
                        .collect::<Vec<_>>();
                    for (c, e) in &terms {
                        if e.len() != n {
                            return Err(ProblemError::Parse(format!(
                                "{what}[{i}]: exponent vector of length {}, expected {n}",
                                e.len()
                            )));
                        }
                        if !c.is_finite() {
                            return Err(ProblemError::Parse(format!(
                                "{what}[{i}]: non-finite coefficient"
                            )));
                        }
                    }
                    Ok(Polynomial::new(terms))
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let objectives = convert("objectives", doc.objectives)?;
        let equalities = convert("equalities", doc.equalities)?;
        let inequalities = convert("inequalities", doc.inequalities)?;
        let sampling_box = match doc.sampling_box {
            Some(b) if b.lower.len() == n && b.upper.len() == n => b,
            Some(_) => {
                return Err(ProblemError::Parse(format!(
                    "sampling_box must have {n} lower and upper bounds"
                )))
            }
            None => SamplingBox::cube(n, -1.0, 1.0),
        };
        Ok(Self {
            name: doc.name.unwrap_or_default(),
            n,
            objectives,
            equalities,
            inequalities,
            sampling_box,
        })
    }
}

fn values(polys: &[Polynomial], x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(polys.len(), polys.iter().map(|p| p.eval(x)))
}

fn jacobian(polys: &[Polynomial], x: &DVector<f64>) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(polys.len(), x.len());
    for (r, p) in polys.iter().enumerate() {
        for (c, g) in p.gradient(x).into_iter().enumerate() {
            j[(r, c)] = g;
        }
    }
    j
}

impl Problem for PolynomialProblem {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn num_objectives(&self) -> usize {
        self.objectives.len()
    }
    fn num_equalities(&self) -> usize {
        self.equalities.len()
    }
    fn num_inequalities(&self) -> usize {
        self.inequalities.len()
    }
    fn objectives(&self, x: &DVector<f64>) -> DVector<f64> {
        values(&self.objectives, x)
    }
    fn objective_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        jacobian(&self.objectives, x)
    }
    fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        values(&self.equalities, x)
    }
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        jacobian(&self.equalities, x)
    }
    fn inequalities(&self, x: &DVector<f64>) -> DVector<f64> {
        values(&self.inequalities, x)
    }
    fn inequality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        jacobian(&self.inequalities, x)
    }
    fn sampling_box(&self) -> SamplingBox {
        self.sampling_box.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{evaluate, fd_audit};
    use crate::registry::Circle2d;

    const CIRCLE_JSON: &str = r#"{
        "name": "circle-poly",
        "n": 2, "m": 2,
        "objectives": [
            [[1, [2, 0]], [-4, [1, 0]], [1, [0, 2]], [-2, [0, 1]], [5, [0, 0]]],
            [{"coefficient": 1, "exponents": [2, 0]}, [-4, [1, 0]], [1, [0, 2]], [2, [0, 1]], [5, [0, 0]]]
        ],
        "inequalities": [[[-1, [2, 0]], [-1, [0, 2]], [1, [0, 0]]]],
        "sampling_box": {"lower": [-3, -3], "upper": [3, 3]}
    }"#;

    #[test]
    fn matches_hand_coded_circle() {
        let p = PolynomialProblem::from_json_str(CIRCLE_JSON).unwrap();
        assert_eq!(p.name(), "circle-poly");
        for pt in [[-2.0, 0.5], [1.0, 0.0], [0.3, -2.7]] {
            let x = DVector::from_column_slice(&pt);
            let a = evaluate(&p, &x).unwrap();
            let b = evaluate(&Circle2d, &x).unwrap();
            assert!((a.f - b.f).amax() < 1e-12);
            assert!((a.df - b.df).amax() < 1e-12);
            assert!((a.g - b.g).amax() < 1e-12);
            assert!((a.dg - b.dg).amax() < 1e-12);
        }
    }

    #[test]
    fn polynomial_derivatives_pass_audit() {
        let text = r#"{"n": 3, "m": 1,
            "objectives": [[[2.5, [3, 1, 0]], [-1, [0, 0, 4]]]],
            "equalities": [[[1, [2, 0, 0]], [1, [0, 2, 0]], [1, [0, 0, 2]], [-1, [0, 0, 0]]]]}"#;
        let p = PolynomialProblem::from_json_str(text).unwrap();
        let x = DVector::from_column_slice(&[0.4, -0.7, 0.9]);
        assert!(fd_audit(&p, &x, 1e-6).unwrap() < 1e-6);
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let wrong_m = r#"{"n": 1, "m": 2, "objectives": [[[1, [1]]]]}"#;
        assert!(matches!(
            PolynomialProblem::from_json_str(wrong_m),
            Err(ProblemError::Parse(_))
        ));
        let wrong_len = r#"{"n": 2, "m": 1, "objectives": [[[1, [1]]]]}"#;
        assert!(PolynomialProblem::from_json_str(wrong_len).is_err());
        assert!(PolynomialProblem::from_json_str("not json").is_err());
    }
}
