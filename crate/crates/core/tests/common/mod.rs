//! Oracles shared by the integration suites. None of them call into the
//! closed forms they are used to check.

#![allow(dead_code)]

use bjlab::blockspace::{dual_exponent, inner_duality_map, inner_norm};
use std::f64::consts::PI;

use bjlab::{BochnerElement, SpaceSpec};

/// Points per axis in each level of the brute-force grid.
pub const GRID_POINTS: usize = 41;

/// `min |T(y)|` over `T in J(x)` on `L^1(mu, l^q_d)` by exhaustive search.
///
/// Blocks where `x` vanishes exactly are free in the dual unit ball, the
/// others are pinned to their norming functionals. A free block of dimension
/// one is `g = r` with `r in [-1, 1]`; of dimension two it is
/// `g = r (cos t, sin t) / ||(cos t, sin t)||_{q*}` with `r in [0, 1]`.
/// Every parameter gets a 41-point grid; the grids shrink by half around the
/// incumbent at each level until they are narrower than `1e-9`.
pub fn brute_force_min_certificate(
    x: &BochnerElement,
    y: &BochnerElement,
    spec: &SpaceSpec,
) -> f64 {
    assert_eq!(spec.p(), 1.0);
    let (q, d) = (spec.q(), spec.d());
    assert!(d <= 2, "the oracle handles blocks of dimension at most two");
    let q_star = dual_exponent(q);
    let mut fixed = 0.0;
    let mut free: Vec<(f64, Vec<f64>)> = Vec::new();
    for i in 0..spec.n() {
        let (xi, yi, w) = (x.block(i), y.block(i), spec.weights()[i]);
        if xi.iter().all(|&v| v == 0.0) {
            free.push((w, yi.to_vec()));
        } else {
            let f = inner_duality_map(xi, q).unwrap();
            fixed += w * f.iter().zip(yi).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    if free.is_empty() {
        return fixed.abs();
    }

    // (lo, hi, periodic) per parameter, block after block.
    let mut axes: Vec<(f64, f64, bool)> = Vec::new();
    for _ in &free {
        if d == 1 {
            axes.push((-1.0, 1.0, false));
        } else {
            axes.push((0.0, 1.0, false));
            axes.push((-PI, PI, true));
        }
    }
    let mut center: Vec<f64> = axes.iter().map(|(lo, hi, _)| 0.5 * (lo + hi)).collect();
    let mut half: Vec<f64> = axes.iter().map(|(lo, hi, _)| 0.5 * (hi - lo)).collect();
    let mut best = f64::INFINITY;

    while half.iter().cloned().fold(0.0, f64::max) > 1e-9 {
        let grids: Vec<Vec<f64>> = axes
            .iter()
            .zip(&center)
            .zip(&half)
            .map(|(((lo, hi, periodic), c), h)| {
                let step = 2.0 * h / (GRID_POINTS - 1) as f64;
                (0..GRID_POINTS)
                    .map(|a| {
                        let v = c - h + a as f64 * step;
                        if *periodic {
                            v
                        } else {
                            v.clamp(*lo, *hi)
                        }
                    })
                    .collect()
            })
            .collect();
        // Contribution of each free block at each point of its own grid.
        let mut tables: Vec<Vec<(f64, Vec<f64>)>> = Vec::new();
        let mut axis = 0;
        for (w, yi) in &free {
            let mut table = Vec::new();
            if d == 1 {
                for &r in &grids[axis] {
                    table.push((w * r * yi[0], vec![r]));
                }
                axis += 1;
            } else {
                for &r in &grids[axis] {
                    for &t in &grids[axis + 1] {
                        let (c, s) = (t.cos(), t.sin());
                        let scale = r / inner_norm(&[c, s], q_star);
                        table.push((w * scale * (c * yi[0] + s * yi[1]), vec![r, t]));
                    }
                }
                axis += 2;
            }
            tables.push(table);
        }
        let mut pick = vec![0usize; tables.len()];
        let mut best_pick = None;
        loop {
            let total: f64 = fixed + pick.iter().zip(&tables).map(|(&k, t)| t[k].0).sum::<f64>();
            if total.abs() < best {
                best = total.abs();
                best_pick = Some(pick.clone());
            }
            let mut j = 0;
            while j < pick.len() {
                pick[j] += 1;
                if pick[j] < tables[j].len() {
                    break;
                }
                pick[j] = 0;
                j += 1;
            }
            if j == pick.len() {
                break;
            }
        }
        if let Some(p) = best_pick {
            center = p
                .iter()
                .zip(&tables)
                .flat_map(|(&k, t)| t[k].1.clone())
                .collect();
        }
        half.iter_mut().for_each(|h| *h /= 2.0);
    }
    best
}

/// Central difference of `t -> ||v + t u||_q` at `t = 0`.
pub fn central_difference(v: &[f64], u: &[f64], q: f64, h: f64) -> f64 {
    let shifted = |t: f64| -> Vec<f64> { v.iter().zip(u).map(|(a, b)| a + t * b).collect() };
    (inner_norm(&shifted(h), q) - inner_norm(&shifted(-h), q)) / (2.0 * h)
}

/// Weighted Euclidean product `sum_i mu_i <x_i, y_i>`.
pub fn weighted_dot(x: &BochnerElement, y: &BochnerElement, spec: &SpaceSpec) -> f64 {
    x.blocks()
        .zip(y.blocks())
        .zip(spec.weights())
        .map(|((a, b), w)| w * a.iter().zip(b).map(|(s, t)| s * t).sum::<f64>())
        .sum()
}
