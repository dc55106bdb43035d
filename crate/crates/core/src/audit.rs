//! Self-checks for a problem definition and the numerical kernels.
//!
//! * derivative audit: central differences at random points of the sampling
//!   box;
//! * retraction slope: `(R(x, t v) - x) / t` should approach `v` for tangent
//!   `v` on every chart the problem defines, for each registered retraction;
//! * dual oracle: min-norm points from the direction solver agree with a
//!   brute-force simplex search.
//!
//! Sampling uses a fixed seed, so reports are reproducible.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::direction::{solve_direction, tangent_basis, SubproblemKind};
use crate::geometry::{feasible_start, project, Chart, RetractionKind};
use crate::hull::{kkt_residual, min_norm_in_hull};
use crate::oracle::grid_min_norm;
use crate::problem::{evaluate, fd_audit, Problem};

pub const AUDIT_SEED: u64 = 0x5eed_a0d1;

#[derive(Clone, Debug, PartialEq)]
pub struct AuditConfig {
    pub fd_points: usize,
    pub fd_step: f64,
    pub fd_tol: f64,
    pub slope_pairs: usize,
    pub slope_t: f64,
    pub slope_tol: f64,
    pub oracle_points: usize,
    pub oracle_step: f64,
    pub oracle_tol: f64,
    pub kkt_tol: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            fd_points: 100,
            fd_step: 1e-6,
            fd_tol: 1e-6,
            slope_pairs: 50,
            slope_t: 1e-3,
            slope_tol: 1e-2,
            oracle_points: 10,
            oracle_step: 1e-2,
            oracle_tol: 1e-2,
            kkt_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Worst observed value.
    pub value: f64,
    pub threshold: f64,
    pub samples: usize,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    fn new(name: String, value: f64, threshold: f64, samples: usize) -> Self {
        Self {
            passed: value <= threshold,
            name,
            value,
            threshold,
            samples,
            note: None,
        }
    }

    fn failed(name: String, note: String) -> Self {
        Self {
            name,
            value: f64::INFINITY,
            threshold: 0.0,
            samples: 0,
            passed: false,
            note: Some(note),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub problem: String,
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn sample_box(problem: &dyn Problem, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let bx = problem.sampling_box();
    DVector::from_fn(bx.dim(), |i, _| {
        let (lo, hi) = (bx.lower[i], bx.upper[i]);
        if lo < hi {
            rng.gen_range(lo..hi)
        } else {
            lo
        }
    })
}

/// Largest relative derivative error over `points` random box points.
pub fn derivative_check(problem: &dyn Problem, cfg: &AuditConfig, rng: &mut ChaCha8Rng) -> Check {
    let name = "derivatives".to_string();
    let mut worst = 0.0_f64;
    for _ in 0..cfg.fd_points {
        let x = sample_box(problem, rng);
        match fd_audit(problem, &x, cfg.fd_step) {
            Ok(e) => worst = worst.max(e),
            Err(e) => return Check::failed(name, e.to_string()),
        }
    }
    Check::new(name, worst, cfg.fd_tol, cfg.fd_points)
}

/// Charts to test: the equality manifold (when there are equalities) and each
/// single inequality boundary.
fn chart_sets(problem: &dyn Problem) -> Vec<Vec<usize>> {
    let mut sets = Vec::new();
    if problem.num_equalities() > 0 {
        sets.push(Vec::new());
    }
    sets.extend((0..problem.num_inequalities()).map(|i| vec![i]));
    sets
}

fn chart_label(set: &[usize]) -> String {
    match set {
        [] => "manifold".into(),
        [i] => format!("boundary {i}"),
        _ => format!("{set:?}"),
    }
}

/// Worst relative slope error `|(R(x, t v) - x)/t - v| / |v|` per chart and
/// retraction.
pub fn retraction_checks(
    problem: &dyn Problem,
    cfg: &AuditConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Check> {
    let mut out = Vec::new();
    for set in chart_sets(problem) {
        let chart = Chart::with_inequalities(problem, &set);
        for kind in [RetractionKind::Project, RetractionKind::Psi] {
            let retraction = kind.get();
            let name = format!("retraction {} on {}", retraction.name(), chart_label(&set));
            let mut worst = 0.0_f64;
            let mut samples = 0;
            let mut attempts = 0;
            let mut note = None;
            while samples < cfg.slope_pairs && attempts < 20 * cfg.slope_pairs {
                attempts += 1;
                let Ok(x) = project(&chart, &sample_box(problem, rng)) else {
                    continue;
                };
                let Ok(jac) = chart.jacobian(&x) else {
                    continue;
                };
                let Ok(basis) = tangent_basis(&jac) else {
                    continue;
                };
                if basis.ncols() == 0 {
                    break;
                }
                let c = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-1.0..1.0));
                let v = &basis * c;
                if v.norm() < 1e-3 {
                    continue;
                }
                samples += 1;
                match retraction.retract(&chart, &x, &(cfg.slope_t * &v)) {
                    Ok(y) => {
                        let err = ((y - &x) / cfg.slope_t - &v).norm() / v.norm();
                        worst = worst.max(err);
                    }
                    Err(e) => {
                        note = Some(e.to_string());
                        worst = f64::INFINITY;
                    }
                }
            }
            let mut check = Check::new(name, worst, cfg.slope_tol, samples);
            if samples == 0 {
                check.note = Some("no chart points found".into());
            }
            if note.is_some() {
                check.note = note;
            }
            out.push(check);
        }
    }
    out
}

/// Compares the direction solver's min-norm points with the brute-force
/// oracle at random feasible points, and checks the KKT certificate.
pub fn oracle_checks(problem: &dyn Problem, cfg: &AuditConfig, rng: &mut ChaCha8Rng) -> Vec<Check> {
    let mut dist = 0.0_f64;
    let mut kkt = 0.0_f64;
    let mut samples = 0;
    let mut attempts = 0;
    while samples < cfg.oracle_points && attempts < 20 * cfg.oracle_points {
        attempts += 1;
        let Ok(x) = feasible_start(problem, &sample_box(problem, rng)) else {
            continue;
        };
        let Ok(bundle) = evaluate(problem, &x) else {
            continue;
        };
        let Ok(dir) = solve_direction(&bundle, SubproblemKind::ObjectiveIcs, 1e-4, 1.0) else {
            continue;
        };
        samples += 1;
        let reference = grid_min_norm(&dir.projected, cfg.oracle_step);
        dist = dist.max((&reference.point + &dir.v).norm());
        let sol = min_norm_in_hull(&dir.projected);
        let scale = dir
            .projected
            .iter()
            .map(|g| g.norm_squared())
            .fold(1.0, f64::max);
        kkt = kkt.max(kkt_residual(&dir.projected, &sol) / scale);
    }
    vec![
        Check::new("dual oracle distance".into(), dist, cfg.oracle_tol, samples),
        Check::new("dual KKT residual".into(), kkt, cfg.kkt_tol, samples),
    ]
}

pub fn audit_problem(problem: &dyn Problem, cfg: &AuditConfig) -> AuditReport {
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let mut checks = vec![derivative_check(problem, cfg, &mut rng)];
    checks.extend(retraction_checks(problem, cfg, &mut rng));
    checks.extend(oracle_checks(problem, cfg, &mut rng));
    AuditReport {
        problem: problem.name().to_string(),
        checks,
    }
}
