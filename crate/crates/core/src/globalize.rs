//! Grid multistart and Pareto dominance filtering.

use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ProblemError;
use crate::problem::{Problem, SamplingBox};
use crate::solver::{solve, SolverConfig, Termination};

/// Tensor grid of start points. A count of 1 along an axis places the single
/// point at the midpoint of that axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Counts parsed from `20x20`-style strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridCounts(pub Vec<usize>);

impl FromStr for GridCounts {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let counts = s
            .split(['x', 'X'])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("invalid grid `{s}`: {e}"))
                    .and_then(|c| {
                        if c == 0 {
                            Err(format!("invalid grid `{s}`: zero count"))
                        } else {
                            Ok(c)
                        }
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GridCounts(counts))
    }
}

impl GridSpec {
    /// Grid spanning a sampling box.
    pub fn over_box(bx: &SamplingBox, counts: Vec<usize>) -> Result<Self, ProblemError> {
        let spec = Self {
            lower: bx.lower.clone(),
            upper: bx.upper.clone(),
            counts,
        };
        spec.validate(bx)?;
        Ok(spec)
    }

    /// A single start point.
    pub fn at_point(x: &[f64]) -> Self {
        Self {
            lower: x.to_vec(),
            upper: x.to_vec(),
            counts: vec![1; x.len()],
        }
    }

    pub fn validate(&self, bx: &SamplingBox) -> Result<(), ProblemError> {
        let n = bx.dim();
        if self.lower.len() != n || self.upper.len() != n || self.counts.len() != n {
            return Err(ProblemError::Dimension {
                expected: n,
                got: self.counts.len(),
            });
        }
        if self.counts.contains(&0) {
            return Err(ProblemError::InvalidArgument(
                "grid counts must be positive".into(),
            ));
        }
        for i in 0..n {
            if self.lower[i] > self.upper[i] {
                return Err(ProblemError::InvalidArgument(format!(
                    "grid axis {i}: lower bound exceeds upper bound"
                )));
            }
        }
        if !bx.contains(&self.lower) || !bx.contains(&self.upper) {
            return Err(ProblemError::InvalidArgument(
                "grid extends outside the sampling box".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points, first axis varying slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.counts.len())
            .map(|i| {
                let (lo, hi, c) = (self.lower[i], self.upper[i], self.counts[i]);
                if c == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..c)
                        .map(|j| lo + (hi - lo) * j as f64 / (c - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub start: Vec<f64>,
    /// Terminal point; the start point when the run failed.
    pub x: Vec<f64>,
    /// Objective values at `x`; empty when the run failed before evaluating.
    pub f: Vec<f64>,
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub error: Option<String>,
    pub dominated: bool,
}

impl ArchiveEntry {
    pub fn failed(&self) -> bool {
        self.termination == Termination::Failed
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    pub entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Runs the solver from every grid point. Runs are independent and execute
/// in parallel; entries stay in grid order. Failed runs are recorded, not
/// propagated.
pub fn multistart(
    problem: &dyn Problem,
    grid: &GridSpec,
    config: &SolverConfig,
) -> Result<ParetoArchive, ProblemError> {
    grid.validate(&problem.sampling_box())?;
    let starts = grid.points();
    let entries = starts
        .into_par_iter()
        .map(|start| run_one(problem, start, config))
        .collect();
    Ok(ParetoArchive { entries })
}

fn run_one(problem: &dyn Problem, start: Vec<f64>, config: &SolverConfig) -> ArchiveEntry {
    let x0 = DVector::from_vec(start.clone());
    match solve(problem, &x0, config) {
        Ok(out) => ArchiveEntry {
            start,
            x: out.x.iter().copied().collect(),
            f: out.f.iter().copied().collect(),
            alpha: out.alpha,
            iterations: out.trace.iterations(),
            converged: out.converged(),
            termination: out.trace.termination,
            error: None,
            dominated: false,
        },
        Err(e) => {
            let last = e.trace.records.last();
            ArchiveEntry {
                x: last.map_or_else(|| start.clone(), |r| r.x.clone()),
                f: last.map_or_else(Vec::new, |r| r.f.clone()),
                alpha: last.map_or(f64::NAN, |r| r.alpha),
                start,
                iterations: e.trace.iterations(),
                converged: false,
                termination: Termination::Failed,
                error: Some(e.to_string()),
                dominated: false,
            }
        }
    }
}

/// `v` dominates `w` when `v <= w` componentwise with at least one strict
/// inequality.
pub fn dominates(v: &[f64], w: &[f64]) -> bool {
    debug_assert_eq!(v.len(), w.len());
    let mut strict = false;
    for (a, b) in v.iter().zip(w) {
        if a > b {
            return false;
        }
        if a < b {
            strict = true;
        }
    }
    strict
}

/// Sets `dominated` on every entry whose objective vector is dominated by
/// another entry's. Failed entries neither dominate nor are kept.
pub fn mark_dominated(archive: &mut ParetoArchive) {
    let n = archive.entries.len();
    let flags: Vec<bool> = (0..n)
        .map(|i| {
            let e = &archive.entries[i];
            e.failed()
                || (0..n).any(|j| {
                    let o = &archive.entries[j];
                    j != i && !o.failed() && dominates(&o.f, &e.f)
                })
        })
        .collect();
    for (e, d) in archive.entries.iter_mut().zip(flags) {
        e.dominated = d;
    }
}

/// Entries whose objective vector no other entry dominates. Identical
/// objective vectors do not dominate each other, so duplicates survive.
pub fn nondominated_filter(archive: &ParetoArchive) -> ParetoArchive {
    let mut marked = archive.clone();
    mark_dominated(&mut marked);
    ParetoArchive {
        entries: marked
            .entries
            .into_iter()
            .filter(|e| !e.dominated)
            .collect(),
    }
}

/// Drops entries whose `x` lies within `tol` of an earlier kept entry.
pub fn dedup_by_x(archive: &ParetoArchive, tol: f64) -> ParetoArchive {
    let mut kept: Vec<ArchiveEntry> = Vec::new();
    for e in &archive.entries {
        let near = kept.iter().any(|k| {
            k.x.iter()
                .zip(&e.x)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                < tol
        });
        if !near {
            kept.push(e.clone());
        }
    }
    ParetoArchive { entries: kept }
}
