#![allow(dead_code)]

use std::f64::consts::PI;

use modescent::nalgebra::DVector;

pub fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// Half-angle of the critical arc of circle2d around `t = pi`.
pub fn arc_half_angle() -> f64 {
    0.5_f64.atan()
}

/// Euclidean distance to the segment `{2} x [-1, 1]`.
pub fn dist_to_segment(x: &[f64]) -> f64 {
    let dy = (x[1].abs() - 1.0).max(0.0);
    ((x[0] - 2.0).powi(2) + dy * dy).sqrt()
}

/// Euclidean distance to the arc `{(cos t, sin t) : |t - pi| <= atan(1/2)}`.
pub fn dist_to_arc(x: &[f64]) -> f64 {
    let theta = arc_half_angle();
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let t = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
    if r > 0.0 && (t - PI).abs() <= theta {
        (r - 1.0).abs()
    } else {
        let ends = [PI - theta, PI + theta];
        ends.iter()
            .map(|&s| ((x[0] - s.cos()).powi(2) + (x[1] - s.sin()).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance to the critical set of circle2d (arc union segment).
pub fn dist_to_critical_set(x: &[f64]) -> f64 {
    dist_to_arc(x).min(dist_to_segment(x))
}

/// Point of the arc at parameter `s` in `[0, 1]`.
pub fn arc_point(s: f64) -> [f64; 2] {
    let theta = arc_half_angle();
    let t = PI - theta + 2.0 * theta * s;
    [t.cos(), t.sin()]
}

fn combine(g: &[DVector<f64>], w: &[f64]) -> DVector<f64> {
    let mut p = DVector::zeros(g[0].len());
    for (gi, &wi) in g.iter().zip(w) {
        p += gi * wi;
    }
    p
}

/// Minimum of `|sum w_i g_i|^2` over a uniform simplex grid with spacing
/// `step`. Returns the weights.
pub fn simplex_grid(g: &[DVector<f64>], step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    let k = g.len();
    let gram: Vec<Vec<f64>> = g
        .iter()
        .map(|a| g.iter().map(|b| a.dot(b)).collect())
        .collect();
    let mut best = vec![0usize; k];
    let mut best_val = f64::INFINITY;
    let mut counts = vec![0usize; k];
    // odometer over compositions of n into k parts
    loop {
        let used: usize = counts[..k - 1].iter().sum();
        if used <= n {
            counts[k - 1] = n - used;
            let mut val = 0.0;
            for i in 0..k {
                let ci = counts[i] as f64;
                if ci == 0.0 {
                    continue;
                }
                for j in 0..k {
                    val += ci * counts[j] as f64 * gram[i][j];
                }
            }
            if val < best_val {
                best_val = val;
                best.copy_from_slice(&counts);
            }
        }
        let mut i = 0;
        loop {
            if i + 1 >= k {
                return best.iter().map(|&c| c as f64 / n as f64).collect();
            }
            counts[i] += 1;
            if counts[..k - 1].iter().sum::<usize>() <= n {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// Refines simplex weights by exact minimization along the pairwise
/// transfer direction `e_i - e_j` with the largest decrease, until no
/// transfer improves the norm.
pub fn pairwise_refine(g: &[DVector<f64>], w: &mut [f64]) {
    let k = g.len();
    let gram: Vec<Vec<f64>> = g
        .iter()
        .map(|a| g.iter().map(|b| a.dot(b)).collect())
        .collect();
    // gw[i] = g_i . p
    let mut gw: Vec<f64> = (0..k)
        .map(|i| (0..k).map(|j| gram[i][j] * w[j]).sum())
        .collect();
    for _ in 0..1_000_000 {
        let pp: f64 = (0..k).map(|i| w[i] * gw[i]).sum();
        let mut best = (0, 0, 0.0, 0.0);
        for i in 0..k {
            for j in 0..k {
                if i == j || w[j] <= 0.0 {
                    continue;
                }
                // move s from j to i: p(s) = p + s (g_i - g_j), s in [0, w_j]
                let pd = gw[i] - gw[j];
                let dd = gram[i][i] + gram[j][j] - 2.0 * gram[i][j];
                if dd <= 0.0 {
                    continue;
                }
                let s = (-pd / dd).clamp(0.0, w[j]);
                let gain = -(2.0 * s * pd + s * s * dd);
                if gain > best.3 {
                    best = (i, j, s, gain);
                }
            }
        }
        let (i, j, s, gain) = best;
        if gain <= 1e-20 * pp.max(1e-300) {
            return;
        }
        w[i] += s;
        w[j] -= s;
        for (r, gr) in gw.iter_mut().enumerate() {
            *gr += s * (gram[r][i] - gram[r][j]);
        }
    }
}

/// Min-norm point via exhaustive search over faces of the simplex: for every
/// subset, solve the affine problem from the Gram system and keep the best
/// candidate with non-negative weights.
pub fn face_enumeration(g: &[DVector<f64>]) -> DVector<f64> {
    let k = g.len();
    let mut best: Option<DVector<f64>> = None;
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let r = idx.len();
        // [G 1; 1^T 0] [w; mu] = [0; 1]
        let mut a = modescent::nalgebra::DMatrix::zeros(r + 1, r + 1);
        let mut b = DVector::zeros(r + 1);
        for (p, &i) in idx.iter().enumerate() {
            for (q, &j) in idx.iter().enumerate() {
                a[(p, q)] = g[i].dot(&g[j]);
            }
            a[(p, r)] = 1.0;
            a[(r, p)] = 1.0;
        }
        b[r] = 1.0;
        let Some(sol) = a.lu().solve(&b) else {
            continue;
        };
        let w: Vec<f64> = sol.iter().take(r).copied().collect();
        if w.iter().any(|&x| x < -1e-12 || !x.is_finite()) {
            continue;
        }
        let sub: Vec<DVector<f64>> = idx.iter().map(|&i| g[i].clone()).collect();
        let p = combine(&sub, &w);
        if best
            .as_ref()
            .is_none_or(|b| p.norm_squared() < b.norm_squared())
        {
            best = Some(p);
        }
    }
    best.expect("singletons always qualify")
}

/// Reference min-norm point: simplex grid with `step`, then pairwise
/// refinement.
pub fn grid_oracle(g: &[DVector<f64>], step: f64) -> (Vec<f64>, DVector<f64>) {
    let mut w = simplex_grid(g, step);
    pairwise_refine(g, &mut w);
    let p = combine(g, &w);
    (w, p)
}
