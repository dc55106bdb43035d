//! Minimum-norm point of the convex hull of finitely many vectors.
//!
//! Wolfe's algorithm: keep a "corral" of generators whose affine hull
//! contains the current iterate, add the generator that most violates the
//! optimality condition, and walk back toward the corral's convex hull
//! whenever the affine minimizer leaves it.

use nalgebra::{DMatrix, DVector};

/// Relative tolerance of the optimality test `x.x - min_j x.g_j <= tol`.
pub const KKT_TOL: f64 = 1e-12;

const WEIGHT_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct MinNormPoint {
    /// Simplex weights, one per generator.
    pub weights: Vec<f64>,
    /// `sum_j weights[j] * generators[j]`.
    pub point: DVector<f64>,
}

/// Finds the point of minimal Euclidean norm in the convex hull of
/// `generators`.
///
/// Panics if `generators` is empty or the generators differ in length.
pub fn min_norm_in_hull(generators: &[DVector<f64>]) -> MinNormPoint {
    assert!(!generators.is_empty(), "min_norm_in_hull needs a generator");
    let dim = generators[0].len();
    assert!(
        generators.iter().all(|g| g.len() == dim),
        "generators differ in dimension"
    );
    let k = generators.len();
    let scale = generators
        .iter()
        .map(|g| g.norm_squared())
        .fold(1.0_f64, f64::max);
    let tol = KKT_TOL * scale;

    let start = (0..k)
        .min_by(|&a, &b| {
            generators[a]
                .norm_squared()
                .total_cmp(&generators[b].norm_squared())
        })
        .unwrap();
    let mut lambda = vec![0.0; k];
    lambda[start] = 1.0;
    let mut corral = vec![start];
    let mut x = generators[start].clone();

    for _major in 0..(50 * k + 100) {
        let xx = x.norm_squared();
        let (j, xg) = (0..k)
            .map(|j| (j, x.dot(&generators[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - xg <= tol || corral.contains(&j) {
            break;
        }
        corral.push(j);

        // Minor cycles.
        loop {
            let mu = affine_minimizer(generators, &corral);
            if mu.iter().all(|&m| m > WEIGHT_TOL) {
                for (&i, &m) in corral.iter().zip(&mu) {
                    lambda[i] = m;
                }
                x = combine(generators, &lambda, dim);
                break;
            }
            let theta = corral
                .iter()
                .zip(&mu)
                .filter(|(_, &m)| m <= WEIGHT_TOL)
                .map(|(&i, &m)| lambda[i] / (lambda[i] - m))
                .fold(1.0_f64, f64::min)
                .clamp(0.0, 1.0);
            for (&i, &m) in corral.iter().zip(&mu) {
                lambda[i] = theta * m + (1.0 - theta) * lambda[i];
            }
            // Drop the vertices that hit zero; always at least one.
            let before = corral.len();
            corral.retain(|&i| lambda[i] > WEIGHT_TOL);
            if corral.len() == before {
                let (pos, _) = corral
                    .iter()
                    .enumerate()
                    .min_by(|a, b| lambda[*a.1].total_cmp(&lambda[*b.1]))
                    .unwrap();
                corral.remove(pos);
            }
            for l in lambda.iter_mut() {
                if *l <= WEIGHT_TOL {
                    *l = 0.0;
                }
            }
            normalize(&mut lambda);
            x = combine(generators, &lambda, dim);
            if corral.len() <= 1 {
                break;
            }
        }
    }

    normalize(&mut lambda);
    let point = combine(generators, &lambda, dim);
    MinNormPoint {
        weights: lambda,
        point,
    }
}

/// Worst violation of the optimality certificate of `sol`:
/// `g_j.p >= |p|^2` for all `j`, with equality on the support.
pub fn kkt_residual(generators: &[DVector<f64>], sol: &MinNormPoint) -> f64 {
    let pp = sol.point.norm_squared();
    let mut worst = 0.0_f64;
    for (g, &w) in generators.iter().zip(&sol.weights) {
        let gap = g.dot(&sol.point) - pp;
        worst = worst.max(-gap);
        if w > 1e-8 {
            worst = worst.max(gap.abs());
        }
    }
    let sum: f64 = sol.weights.iter().sum();
    let neg = sol.weights.iter().copied().fold(0.0_f64, |a, w| a.max(-w));
    worst.max((sum - 1.0).abs()).max(neg)
}

/// Weights (summing to one) of the minimum-norm point of the affine hull of
/// the generators listed in `corral`.
fn affine_minimizer(generators: &[DVector<f64>], corral: &[usize]) -> Vec<f64> {
    let base = &generators[corral[0]];
    let r = corral.len() - 1;
    if r == 0 {
        return vec![1.0];
    }
    let dim = base.len();
    let mut d = DMatrix::zeros(dim, r);
    for (c, &i) in corral[1..].iter().enumerate() {
        d.set_column(c, &(&generators[i] - base));
    }
    // least squares: min |base + D c|
    let svd = d.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-13 * smax.max(f64::MIN_POSITIVE);
    let c = svd
        .solve(&(-base), eps)
        .unwrap_or_else(|_| DVector::zeros(r));
    let mut mu = Vec::with_capacity(r + 1);
    mu.push(1.0 - c.sum());
    mu.extend(c.iter().copied());
    mu
}

fn combine(generators: &[DVector<f64>], lambda: &[f64], dim: usize) -> DVector<f64> {
    let mut x = DVector::zeros(dim);
    for (g, &l) in generators.iter().zip(lambda) {
        if l != 0.0 {
            x.axpy(l, g, 1.0);
        }
    }
    x
}

fn normalize(lambda: &mut [f64]) {
    for l in lambda.iter_mut() {
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    let s: f64 = lambda.iter().sum();
    if s > 0.0 {
        for l in lambda.iter_mut() {
            *l /= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gens(rows: &[&[f64]]) -> Vec<DVector<f64>> {
        rows.iter().map(|r| DVector::from_column_slice(r)).collect()
    }

    #[test]
    fn symmetric_pair_straddles_origin() {
        let g = gens(&[&[0.0, -2.0], &[0.0, 2.0]]);
        let s = min_norm_in_hull(&g);
        assert!((s.weights[0] - 0.5).abs() < 1e-12);
        assert!((s.weights[1] - 0.5).abs() < 1e-12);
        assert!(s.point.norm() < 1e-12);
    }

    #[test]
    fn circle2d_start_gradients() {
        // Frozen from a simplex-grid search with step 1e-4 (see tests/oracles.rs).
        let g = gens(&[&[-8.0, -1.0], &[-8.0, 3.0]]);
        let s = min_norm_in_hull(&g);
        assert!((s.weights[0] - 0.75).abs() < 1e-12);
        assert!((s.weights[1] - 0.25).abs() < 1e-12);
        assert!((s.point[0] + 8.0).abs() < 1e-12);
        assert!(s.point[1].abs() < 1e-12);
        assert!(kkt_residual(&g, &s) < 1e-10);
    }

    #[test]
    fn singleton() {
        let g = gens(&[&[3.0, -4.0, 1.0]]);
        let s = min_norm_in_hull(&g);
        assert_eq!(s.weights, vec![1.0]);
        assert_eq!(s.point, g[0]);
    }

    #[test]
    fn duplicate_and_dependent_generators() {
        let g = gens(&[&[1.0, 1.0], &[1.0, 1.0], &[2.0, 2.0], &[1.0, -1.0]]);
        let s = min_norm_in_hull(&g);
        assert!((&s.point - DVector::from_column_slice(&[1.0, 0.0])).norm() < 1e-12);
        assert!(kkt_residual(&g, &s) < 1e-10);
    }

    #[test]
    fn origin_inside_triangle() {
        let g = gens(&[&[-6.0, -2.0], &[-6.0, 2.0], &[2.0, 0.0]]);
        let s = min_norm_in_hull(&g);
        assert!(s.point.norm() < 1e-12);
        assert!(kkt_residual(&g, &s) < 1e-10);
    }
}
