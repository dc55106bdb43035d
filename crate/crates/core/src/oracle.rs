//! Brute-force min-norm reference used by the audit.
//!
//! Enumerates simplex weights on a uniform grid, then repeatedly searches a
//! finer grid around the best weights found so far. Because
//! `|p|^2 - |p*|^2 >= |p - p*|^2` on the hull, a small norm gap bounds the
//! distance to the true min-norm point.

use nalgebra::DVector;

use crate::hull::MinNormPoint;

/// Refinement levels after the coarse grid, each ten times finer.
const LEVELS: u32 = 4;
const RADIUS: i64 = 5;
const MAX_RECENTER: usize = 200;

pub fn grid_min_norm(generators: &[DVector<f64>], step: f64) -> MinNormPoint {
    assert!(!generators.is_empty());
    assert!(step > 0.0 && step <= 1.0);
    let k = generators.len();
    let n = (1.0 / step).round().max(1.0) as i64;

    let mut best = vec![0.0; k];
    let mut best_val = f64::INFINITY;
    for_each_composition(n, k, &mut |c| {
        let w: Vec<f64> = c.iter().map(|&ci| ci as f64 / n as f64).collect();
        let val = norm_sq(generators, &w);
        if val < best_val {
            best_val = val;
            best = w;
        }
    });

    let mut h = 1.0 / n as f64;
    for _ in 0..LEVELS {
        h /= 10.0;
        for _ in 0..MAX_RECENTER {
            let (w, val) = local_search(generators, &best, h);
            if val < best_val {
                best = w;
                best_val = val;
            } else {
                break;
            }
        }
    }

    let point = combine(generators, &best);
    MinNormPoint {
        weights: best,
        point,
    }
}

/// Best weights among `center + h * d` with `|d_i| <= RADIUS` on the first
/// `k - 1` coordinates; the last coordinate closes the simplex.
fn local_search(generators: &[DVector<f64>], center: &[f64], h: f64) -> (Vec<f64>, f64) {
    let k = center.len();
    let mut best = center.to_vec();
    let mut best_val = norm_sq(generators, center);
    if k == 1 {
        return (best, best_val);
    }
    let mut offs = vec![-RADIUS; k - 1];
    loop {
        let mut w = center.to_vec();
        let mut ok = true;
        let mut shift = 0.0;
        for (i, &o) in offs.iter().enumerate() {
            w[i] += o as f64 * h;
            shift += o as f64 * h;
            if w[i] < 0.0 {
                ok = false;
            }
        }
        w[k - 1] -= shift;
        if w[k - 1] < 0.0 {
            ok = false;
        }
        if ok {
            let val = norm_sq(generators, &w);
            if val < best_val {
                best_val = val;
                best = w;
            }
        }
        // odometer
        let mut i = 0;
        loop {
            if i == offs.len() {
                return (best, best_val);
            }
            offs[i] += 1;
            if offs[i] <= RADIUS {
                break;
            }
            offs[i] = -RADIUS;
            i += 1;
        }
    }
}

fn for_each_composition(n: i64, k: usize, f: &mut impl FnMut(&[i64])) {
    fn rec(rest: i64, slot: usize, buf: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            f(buf);
            return;
        }
        for c in 0..=rest {
            buf[slot] = c;
            rec(rest - c, slot + 1, buf, f);
        }
    }
    let mut buf = vec![0; k];
    rec(n, 0, &mut buf, f);
}

fn combine(generators: &[DVector<f64>], w: &[f64]) -> DVector<f64> {
    let mut p = DVector::zeros(generators[0].len());
    for (g, &wi) in generators.iter().zip(w) {
        p.axpy(wi, g, 1.0);
    }
    p
}

fn norm_sq(generators: &[DVector<f64>], w: &[f64]) -> f64 {
    combine(generators, w).norm_squared()
}
