#![allow(dead_code)]

use lplimit::linalg::Matrix;
use lplimit::rng::StreamRng;
use lplimit::{Lp, StandardLp};
use rand::Rng;

pub fn ot2x2(b: [f64; 3]) -> Lp {
    StandardLp::from_rows(
        &[vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0, 0.0]],
        &b,
        &[0.0, 1.0, 1.0, 0.0],
    )
    .unwrap()
}

/// 3×3 transport with uniform marginals and cost `π₁₂ + π₂₁`; the last
/// column-marginal row is dropped. Variables are row-major.
pub fn ot3x3() -> Lp {
    let mut rows = Vec::new();
    for i in 0..3 {
        rows.push((0..9).map(|j| if j / 3 == i { 1.0 } else { 0.0 }).collect());
    }
    for c in 0..2 {
        rows.push((0..9).map(|j| if j % 3 == c { 1.0 } else { 0.0 }).collect());
    }
    let mut cost = vec![0.0; 9];
    cost[1] = 1.0;
    cost[3] = 1.0;
    StandardLp::from_rows(&rows, &[1.0 / 3.0; 5], &cost).unwrap()
}

/// Random bounded program with `b = A·x₀` for a positive `x₀` and
/// `c = Aᵀy + s` with `s ≥ 0`. Integer data in half of the draws makes
/// degenerate vertices and ties common.
pub fn random_lp(rng: &mut StreamRng, max_k: usize, max_m: usize) -> Lp {
    loop {
        let k = rng.random_range(1..=max_k);
        let m = rng.random_range(k..=max_m.max(k));
        let integer = rng.random_bool(0.5);
        let entry = |rng: &mut StreamRng| {
            if integer {
                rng.random_range(-3i32..=3) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        };
        let rows: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| entry(rng)).collect()).collect();
        let Ok(a) = Matrix::from_rows(&rows) else { continue };
        let x0: Vec<f64> = (0..m)
            .map(|_| if integer { rng.random_range(1..=3) as f64 } else { rng.random_range(0.1..2.0) })
            .collect();
        let y: Vec<f64> = (0..k).map(|_| entry(rng)).collect();
        let s: Vec<f64> = (0..m)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else if integer { rng.random_range(0..=3) as f64 } else { rng.random_range(0.0..1.0) })
            .collect();
        let b = a.mul_vec(&x0);
        let c: Vec<f64> = a.tr_mul_vec(&y).iter().zip(&s).map(|(u, v)| u + v).collect();
        if let Ok(lp) = StandardLp::new(a, b, c) {
            return lp;
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Uniform point on the sphere of radius `r` in dimension `d`.
pub fn sphere_point(rng: &mut StreamRng, d: usize, r: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let n = norm(&v);
    v.iter().map(|x| r * x / n).collect()
}
