//! Reference values computed by independent means (finite differences,
//! closed forms, brute-force searches) and frozen as constants. Each test
//! recomputes the reference, checks it against the frozen value, then checks
//! the library against both.

mod common;

use common::{face_enumeration, grid_oracle, simplex_grid, v};
use modescent::direction::{solve_direction, SubproblemKind};
use modescent::geometry::{feasible_start, retract_psi, Chart, RetractionKind};
use modescent::globalize::{multistart, nondominated_filter, GridSpec};
use modescent::linesearch::{armijo_step, boundary_step, feasible_armijo_step, ArmijoParams};
use modescent::nalgebra::{DMatrix, DVector};
use modescent::problem::{evaluate, fd_audit, Problem, SamplingBox};
use modescent::registry::{Circle2d, Sphere3d};
use modescent::{min_norm_in_hull, solve_constrained, solve_equality, SolverConfig};

fn close(a: &DVector<f64>, b: &[f64], tol: f64) -> bool {
    (a - v(b)).amax() <= tol
}

#[test]
fn circle2d_jacobian_at_start() {
    const FROZEN: [[f64; 2]; 2] = [[-8.0, -1.0], [-8.0, 3.0]];
    let x = v(&[-2.0, 0.5]);
    let h = 1e-6;
    for (i, row) in FROZEN.iter().enumerate() {
        for (j, &expected) in row.iter().enumerate() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (Circle2d.objectives(&xp)[i] - Circle2d.objectives(&xm)[i]) / (2.0 * h);
            assert!((fd - expected).abs() < 1e-6);
        }
    }
    let b = evaluate(&Circle2d, &x).unwrap();
    assert_eq!(
        b.df,
        DMatrix::from_row_slice(2, 2, &[-8.0, -1.0, -8.0, 3.0])
    );
    assert!(fd_audit(&Circle2d, &x, 1e-6).unwrap() <= 1e-6);
}

#[test]
fn min_norm_of_start_gradients() {
    const FROZEN_WEIGHTS: [f64; 2] = [0.75, 0.25];
    let g = vec![v(&[-8.0, -1.0]), v(&[-8.0, 3.0])];
    let w = simplex_grid(&g, 1e-4);
    assert!((w[0] - FROZEN_WEIGHTS[0]).abs() < 1e-9 && (w[1] - FROZEN_WEIGHTS[1]).abs() < 1e-9);
    let s = min_norm_in_hull(&g);
    assert!((s.weights[0] - 0.75).abs() < 1e-12);
    assert!(close(&s.point, &[-8.0, 0.0], 1e-12));
}

#[test]
fn direction_at_circle_start() {
    // v = -(min-norm point), alpha = max_j g_j.v + |v|^2/2 = -64 + 32
    const FROZEN_V: [f64; 2] = [8.0, 0.0];
    const FROZEN_ALPHA: f64 = -32.0;
    let g = vec![v(&[-8.0, -1.0]), v(&[-8.0, 3.0])];
    let (_, p) = grid_oracle(&g, 1e-2);
    let vo = -p;
    let alpha_o = g
        .iter()
        .map(|gi| gi.dot(&vo))
        .fold(f64::NEG_INFINITY, f64::max)
        + 0.5 * vo.norm_squared();
    assert!(close(&vo, &FROZEN_V, 1e-6));
    assert!((alpha_o - FROZEN_ALPHA).abs() < 1e-6);

    let b = evaluate(&Circle2d, &v(&[-2.0, 0.5])).unwrap();
    let d = solve_direction(&b, SubproblemKind::ObjectiveIcs, 1e-4, 1.0).unwrap();
    assert!(d.active.is_empty());
    assert!(close(&d.v, &FROZEN_V, 1e-10));
    assert!((d.alpha - FROZEN_ALPHA).abs() < 1e-10);
    assert!((d.lambda[0] - 0.75).abs() < 1e-10 && (d.lambda[1] - 0.25).abs() < 1e-10);
}

#[test]
fn origin_in_hull_on_arc() {
    // a(-6,-2) + b(-6,2) + c(2,0) = 0 with a + b + c = 1 gives (1/8, 1/8, 3/4).
    const FROZEN_WEIGHTS: [f64; 3] = [0.125, 0.125, 0.75];
    let g = vec![v(&[-6.0, -2.0]), v(&[-6.0, 2.0]), v(&[2.0, 0.0])];
    let combo: DVector<f64> = g.iter().zip(FROZEN_WEIGHTS).map(|(gi, w)| gi * w).sum();
    assert!(combo.norm() < 1e-15);
    assert!(face_enumeration(&g).norm() < 1e-12);

    let b = evaluate(&Circle2d, &v(&[-1.0, 0.0])).unwrap();
    let d = solve_direction(&b, SubproblemKind::ObjectiveIcs, 1e-4, 1.0).unwrap();
    assert_eq!(d.active.indices, vec![0]);
    assert!(d.v.norm() < 1e-10);
    assert!(d.alpha.abs() < 1e-12);
    for (l, w) in d.lambda.iter().zip(FROZEN_WEIGHTS) {
        assert!((l - w).abs() < 1e-10);
    }
}

#[test]
fn critical_on_segment() {
    let g = vec![v(&[0.0, -2.0]), v(&[0.0, 2.0])];
    let (w, p) = grid_oracle(&g, 1e-2);
    assert!(p.norm() < 1e-12 && (w[0] - 0.5).abs() < 1e-12);
    let b = evaluate(&Circle2d, &v(&[2.0, 0.0])).unwrap();
    let d = solve_direction(&b, SubproblemKind::ObjectiveIcs, 1e-4, 1.0).unwrap();
    assert_eq!(d.alpha, 0.0);
}

#[test]
fn psi_closed_forms() {
    // x = (1,0), w = (0,t): (1+2s)^2 + t^2 = 1, smallest root s = (sqrt(1-t^2) - 1)/2
    let t: f64 = 0.6;
    let s = ((1.0 - t * t).sqrt() - 1.0) / 2.0;
    const FROZEN_A: [f64; 2] = [0.8, 0.6];
    assert!((1.0 + 2.0 * s - FROZEN_A[0]).abs() < 1e-15);
    // x = (0,1), w = (0.5,0): 0.25 + (1+2s)^2 = 1
    let s2 = (0.75_f64.sqrt() - 1.0) / 2.0;
    const FROZEN_B: [f64; 2] = [0.5, 0.866_025_403_784_438_6];
    assert!((1.0 + 2.0 * s2 - FROZEN_B[1]).abs() < 1e-15);

    let chart = Chart::with_inequalities(&Circle2d, &[0]);
    let a = retract_psi(&chart, &v(&[1.0, 0.0]), &v(&[0.0, 0.6])).unwrap();
    assert!(close(&a, &FROZEN_A, 1e-12));
    let b = retract_psi(&chart, &v(&[0.0, 1.0]), &v(&[0.5, 0.0])).unwrap();
    assert!(close(&b, &FROZEN_B, 1e-12));
    let c = retract_psi(&chart, &v(&[0.0, 1.0]), &v(&[0.0, 0.0])).unwrap();
    assert!(close(&c, &[0.0, 1.0], 0.0));
}

#[test]
fn nearest_feasible_point_by_dense_sampling() {
    const FROZEN: [f64; 2] = [1.0, 0.0];
    let y = [0.5, 0.0];
    let n = 100_000;
    let best = (0..n)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [t.cos(), t.sin()]
        })
        .min_by(|a, b| {
            let da = (a[0] - y[0]).hypot(a[1] - y[1]);
            let db = (b[0] - y[0]).hypot(b[1] - y[1]);
            da.total_cmp(&db)
        })
        .unwrap();
    assert!((best[0] - FROZEN[0]).abs() < 1e-9 && (best[1] - FROZEN[1]).abs() < 1e-9);
    let x0 = feasible_start(&Circle2d, &v(&y)).unwrap();
    assert!(close(&x0, &FROZEN, 1e-9));
}

/// `F = x^2` in one dimension.
struct Parabola;

impl Problem for Parabola {
    fn name(&self) -> &str {
        "parabola"
    }
    fn dim(&self) -> usize {
        1
    }
    fn num_objectives(&self) -> usize {
        1
    }
    fn objectives(&self, x: &DVector<f64>) -> DVector<f64> {
        v(&[x[0] * x[0]])
    }
    fn objective_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 2.0 * x[0])
    }
    fn sampling_box(&self) -> SamplingBox {
        SamplingBox::cube(1, -2.0, 2.0)
    }
}

#[test]
fn armijo_enumeration_on_parabola() {
    let (x, d, sigma) = (1.0_f64, -2.0_f64, 0.1);
    let k_ref = (0..10)
        .find(|&k| {
            let t = 0.5_f64.powi(k);
            (x + t * d).powi(2) < x * x + sigma * t * (2.0 * x * d)
        })
        .unwrap();
    const FROZEN_K: u32 = 1;
    assert_eq!(k_ref as u32, FROZEN_K);

    let b = evaluate(&Parabola, &v(&[x])).unwrap();
    let params = ArmijoParams {
        beta0: 1.0,
        beta: 0.5,
        sigma,
        k_max: 60,
    };
    let step = armijo_step(
        &Parabola,
        &b,
        &v(&[d]),
        &|w: &DVector<f64>| Ok(&b.x + w),
        &params,
    )
    .unwrap();
    assert_eq!(step.k, FROZEN_K);
    assert_eq!(step.t, 0.5);
    assert_eq!(step.new_point[0], 0.0);
}

/// `F = x1 + x2`, `G = -x1`.
struct HalfPlane;

impl Problem for HalfPlane {
    fn name(&self) -> &str {
        "half-plane"
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_objectives(&self) -> usize {
        1
    }
    fn num_inequalities(&self) -> usize {
        1
    }
    fn objectives(&self, x: &DVector<f64>) -> DVector<f64> {
        v(&[x[0] + x[1]])
    }
    fn objective_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 2, &[1.0, 1.0])
    }
    fn inequalities(&self, x: &DVector<f64>) -> DVector<f64> {
        v(&[-x[0]])
    }
    fn inequality_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 2, &[-1.0, 0.0])
    }
    fn sampling_box(&self) -> SamplingBox {
        SamplingBox::cube(2, -2.0, 2.0)
    }
}

#[test]
fn objective_ics_step_on_half_plane() {
    const FROZEN_LAMBDA: [f64; 2] = [0.4, 0.6];
    const FROZEN_V: [f64; 2] = [0.2, -0.4];
    let g = vec![v(&[1.0, 1.0]), v(&[-1.0, 0.0])];
    let (w, p) = grid_oracle(&g, 1e-2);
    assert!((w[0] - FROZEN_LAMBDA[0]).abs() < 1e-9);
    assert!(close(&(-p), &FROZEN_V, 1e-9));

    let b = evaluate(&HalfPlane, &v(&[0.0, 1.0])).unwrap();
    let d = solve_direction(&b, SubproblemKind::ObjectiveIcs, 1e-4, 1.0).unwrap();
    assert!(close(&d.v, &FROZEN_V, 1e-12));
    assert!((d.lambda[0] - 0.4).abs() < 1e-12);
    let params = ArmijoParams {
        beta0: 0.1,
        ..ArmijoParams::default()
    };
    let step = feasible_armijo_step(
        &HalfPlane,
        &b,
        &d.v,
        &d.active,
        RetractionKind::Project.get(),
        &params,
        1e-9,
    )
    .unwrap();
    assert_eq!(step.k, 0);
    assert_eq!(step.t, 0.1);
}

#[test]
fn boundary_step_along_circle() {
    // On the circle F = (6 - 4 x1 - 2 x2, 6 - 4 x1 + 2 x2), so from (0, -1)
    // both objectives fall while moving toward (1, 0).
    // Hand-evaluated: project(x + t v) = (x + t v)/|x + t v|.
    let x = v(&[0.0, -1.0]);
    let b = evaluate(&Circle2d, &x).unwrap();
    let d = solve_direction(&b, SubproblemKind::EqualityIcs, 1e-9, 1.0).unwrap();
    let params = ArmijoParams {
        beta0: 1.0,
        ..ArmijoParams::default()
    };
    let slope = &b.df * &d.v;
    let k_ref = (0..60)
        .find(|&k| {
            let t = 0.5_f64.powi(k);
            let y = &x + &d.v * t;
            let z = &y / y.norm();
            let f = Circle2d.objectives(&z);
            (0..2).all(|i| f[i] < b.f[i] + params.sigma * t * slope[i])
        })
        .unwrap() as u32;
    let chart = Chart::with_inequalities(&Circle2d, &[0]);
    let step = boundary_step(
        &Circle2d,
        &b,
        &d.v,
        &chart,
        RetractionKind::Project.get(),
        &params,
        1e-9,
    )
    .unwrap();
    assert_eq!(step.k, k_ref);
    assert!(step.k <= 10);
    assert!((step.new_point.norm() - 1.0).abs() < 1e-10);
    assert!(step.new_point[0] > 0.0);
    assert!(!step.feasibility_repaired);
}

/// `F = x1 - x2` on `x1 >= 0`, `x2 <= 1`.
struct Corner;

impl Problem for Corner {
    fn name(&self) -> &str {
        "corner"
    }
    fn dim(&self) -> usize {
        2
    }
    fn num_objectives(&self) -> usize {
        1
    }
    fn num_inequalities(&self) -> usize {
        2
    }
    fn objectives(&self, x: &DVector<f64>) -> DVector<f64> {
        v(&[x[0] - x[1]])
    }
    fn objective_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 2, &[1.0, -1.0])
    }
    fn inequalities(&self, x: &DVector<f64>) -> DVector<f64> {
        v(&[-x[0], x[1] - 1.0])
    }
    fn inequality_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0])
    }
    fn sampling_box(&self) -> SamplingBox {
        SamplingBox::cube(2, -2.0, 2.0)
    }
}

#[test]
fn boundary_step_lands_on_second_face() {
    // Along x1 = 0 from (0,0) with v = (0,1) the second face x2 = 1 is
    // reached at t = 1; scan a fine t grid for the first infeasible t.
    const FROZEN_T: f64 = 1.0;
    let first_bad = (1..=3000)
        .map(|i| i as f64 * 1e-3)
        .find(|&t| Corner.inequalities(&v(&[0.0, t]))[1] > 0.0)
        .unwrap();
    assert!((first_bad - 1e-3 - FROZEN_T).abs() < 1e-9);

    let b = evaluate(&Corner, &v(&[0.0, 0.0])).unwrap();
    let d = solve_direction(&b, SubproblemKind::EqualityIcs, 1e-9, 1.0).unwrap();
    assert_eq!(d.active.indices, vec![0]);
    assert!(close(&d.v, &[0.0, 1.0], 1e-12));
    let params = ArmijoParams {
        beta0: 3.0,
        ..ArmijoParams::default()
    };
    let chart = Chart::with_inequalities(&Corner, &d.active.indices);
    let step = boundary_step(
        &Corner,
        &b,
        &d.v,
        &chart,
        RetractionKind::Project.get(),
        &params,
        1e-9,
    )
    .unwrap();
    assert!(step.feasibility_repaired);
    assert!((step.t - FROZEN_T).abs() < 1e-9);
    let g = Corner.inequalities(&step.new_point);
    assert!(g[0].abs() <= 1e-9 && g[1].abs() <= 1e-9, "{g}");
}

#[test]
fn sphere_descends_to_south_pole() {
    const FROZEN: [f64; 3] = [0.0, 0.0, -1.0];
    let out = solve_equality(&Sphere3d, &v(&[1.0, 0.0, 0.0]), &SolverConfig::default()).unwrap();
    assert!((&out.x - v(&FROZEN)).norm() < 1e-4);
    for r in &out.trace.records {
        assert!((v(&r.x).norm_squared() - 1.0).abs() <= 1e-9);
    }
}

/// `F = (x.a, -x.a)` on the unit sphere: every feasible point is critical.
struct Opposed;

impl Problem for Opposed {
    fn name(&self) -> &str {
        "opposed"
    }
    fn dim(&self) -> usize {
        3
    }
    fn num_objectives(&self) -> usize {
        2
    }
    fn num_equalities(&self) -> usize {
        1
    }
    fn objectives(&self, x: &DVector<f64>) -> DVector<f64> {
        let s = x[0] + 2.0 * x[1] - x[2];
        v(&[s, -s])
    }
    fn objective_jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, -1.0, -2.0, 1.0])
    }
    fn equalities(&self, x: &DVector<f64>) -> DVector<f64> {
        v(&[x.norm_squared() - 1.0])
    }
    fn equality_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 3, &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2]])
    }
    fn sampling_box(&self) -> SamplingBox {
        SamplingBox::cube(3, -1.5, 1.5)
    }
}

#[test]
fn opposed_gradients_stop_immediately() {
    for x in [[0.3, -0.2, 0.9], [1.0, 1.0, 1.0], [-0.5, 0.1, 0.0]] {
        let out = solve_equality(&Opposed, &v(&x), &SolverConfig::default()).unwrap();
        assert!(out.converged());
        assert_eq!(out.trace.iterations(), 0);
    }
}

#[test]
fn critical_start_on_segment() {
    let out = solve_constrained(
        &Circle2d,
        &v(&[2.0, 0.0]),
        &SolverConfig::circle_example(1.0),
    )
    .unwrap();
    assert_eq!(out.trace.iterations(), 0);
    assert!(out.alpha >= -1e-8);
}

#[test]
fn multistart_terminal_points_on_critical_set() {
    let grid = GridSpec::over_box(&Circle2d.sampling_box(), vec![20, 20]).unwrap();
    let archive = multistart(
        &Circle2d,
        &grid,
        &SolverConfig::circle_example(f64::INFINITY),
    )
    .unwrap();
    assert_eq!(archive.len(), 400);
    for e in archive.entries.iter().filter(|e| e.converged) {
        assert!(common::dist_to_critical_set(&e.x) <= 1e-2, "{:?}", e.x);
    }
    let front = nondominated_filter(&archive);
    assert!(front
        .entries
        .iter()
        .all(|e| common::dist_to_segment(&e.x) <= 1e-2));
}

#[test]
fn single_point_grid_at_critical_point() {
    let grid = GridSpec::at_point(&[2.0, 0.0]);
    let archive = multistart(&Circle2d, &grid, &SolverConfig::default()).unwrap();
    assert_eq!(archive.len(), 1);
    assert_eq!(archive.entries[0].iterations, 0);
}
