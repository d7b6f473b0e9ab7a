//! Support functions, minimum-norm points and Hausdorff distances for
//! polytopes given by their vertices.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::lp_core::Polytope;
use crate::scalar::{dot, norm2, Scalar};

/// Point on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction<T> {
    alpha: Vec<T>,
}

impl<T: Scalar> Direction<T> {
    /// Normalizes `v`.
    pub fn new(v: Vec<T>) -> Result<Self> {
        let n = norm2(&v);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidInput("direction must be a nonzero finite vector".into()));
        }
        Ok(Self { alpha: v.into_iter().map(|x| x / n).collect() })
    }

    /// Accepts `v` only if it already has unit length.
    pub fn from_unit(v: Vec<T>) -> Result<Self> {
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        if (norm2(&v) - T::one()).abs() > tol {
            return Err(Error::InvalidInput("direction is not a unit vector".into()));
        }
        Ok(Self { alpha: v })
    }

    /// Coordinate axis `e_i` in dimension `dim`.
    pub fn axis(dim: usize, i: usize) -> Self {
        let mut alpha = vec![T::zero(); dim];
        alpha[i] = T::one();
        Self { alpha }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

/// Deterministic set of directions covering the sphere.
///
/// Circle: equally spaced angles. Two-sphere: Fibonacci lattice. Higher
/// dimensions: Halton points pushed through the normal quantile and
/// normalized, so a grid's directions are a prefix of any larger grid's.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid<T> {
    directions: Vec<Direction<T>>,
    resolution: usize,
}

impl<T: Scalar> SphereGrid<T> {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if dim == 0 || resolution == 0 {
            return Err(Error::InvalidInput("sphere grid needs positive dimension and resolution".into()));
        }
        let raw: Vec<Vec<f64>> = match dim {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => (0..resolution)
                .map(|j| {
                    let t = std::f64::consts::TAU * j as f64 / resolution as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            3 => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..resolution)
                    .map(|j| {
                        let z = 1.0 - (2 * j + 1) as f64 / resolution as f64;
                        let r = (1.0 - z * z).max(0.0).sqrt();
                        let phi = golden * j as f64;
                        vec![r * phi.cos(), r * phi.sin(), z]
                    })
                    .collect()
            }
            _ => {
                let primes = first_primes(dim);
                let normal = Normal::standard();
                (0..resolution)
                    .map(|j| {
                        primes
                            .iter()
                            .map(|&p| normal.inverse_cdf(radical_inverse(j as u64 + 1, p)))
                            .collect()
                    })
                    .collect()
            }
        };
        let directions = raw
            .into_iter()
            .map(|v| Direction::new(v.into_iter().map(T::lit).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { directions, resolution })
    }

    pub fn directions(&self) -> &[Direction<T>] {
        &self.directions
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

fn check_dim<T: Scalar>(p: &Polytope<T>, d: usize) -> Result<()> {
    if p.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    if p.dim() != d {
        return Err(Error::Dimension(format!("polytope has dimension {} but argument has {d}", p.dim())));
    }
    Ok(())
}

/// `h_P(α) = max_v ⟨α, v⟩`.
pub fn support_function<T: Scalar>(p: &Polytope<T>, alpha: &Direction<T>) -> Result<T> {
    check_dim(p, alpha.dim())?;
    Ok(p.vertices()
        .iter()
        .map(|v| dot(alpha.as_slice(), v))
        .fold(T::neg_infinity(), T::max))
}

/// A maximizing vertex of `⟨α, ·⟩`. When several vertices come within
/// `tie_tol` of the maximum the lexicographically smallest is returned and
/// the second component is `false`.
pub fn argmax_vertex<T: Scalar>(p: &Polytope<T>, alpha: &Direction<T>, tie_tol: T) -> Result<(Vec<T>, bool)> {
    let best = support_function(p, alpha)?;
    let mut ties: Vec<&Vec<T>> = p
        .vertices()
        .iter()
        .filter(|v| dot(alpha.as_slice(), v) >= best - tie_tol)
        .collect();
    ties.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok((ties[0].clone(), ties.len() == 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint<T> {
    pub point: Vec<T>,
    pub distance: T,
    /// `‖x−z‖² − min_v ⟨x−z, v−z⟩` at the returned point.
    pub gap: T,
    pub iterations: usize,
}

/// Closest point of `conv(P)` to `z`, by Wolfe's minimum-norm-point method
/// over the translated vertex set.
pub fn min_norm_point<T: Scalar>(p: &Polytope<T>, z: &[T], wolfe_tol: T) -> Result<MinNormPoint<T>> {
    check_dim(p, z.len())?;
    let pts: Vec<Vec<T>> = p
        .vertices()
        .iter()
        .map(|v| v.iter().zip(z).map(|(&a, &b)| a - b).collect())
        .collect();
    let scale = pts.iter().map(|q| dot(q, q)).fold(T::one(), T::max);
    let accept = wolfe_tol * scale;
    let target = accept * T::lit(1e-3);
    let tiny = T::epsilon() * T::lit(1e3);
    let max_iter = (10 * pts.len() * z.len().max(1)).max(10);

    let first = (0..pts.len())
        .min_by(|&a, &b| dot(&pts[a], &pts[a]).partial_cmp(&dot(&pts[b], &pts[b])).unwrap())
        .expect("nonempty");
    let mut corral = vec![first];
    let mut weights = vec![T::one()];
    let mut x = pts[first].clone();

    let oracle = |x: &[T]| -> (usize, T) {
        pts.iter()
            .enumerate()
            .map(|(i, q)| (i, dot(x, q)))
            .fold((0, T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best })
    };
    let finish = |x: Vec<T>, iterations: usize| -> MinNormPoint<T> {
        let gap = (dot(&x, &x) - oracle(&x).1).max(T::zero());
        let distance = norm2(&x);
        let point = x.iter().zip(z).map(|(&a, &b)| a + b).collect();
        MinNormPoint { point, distance, gap, iterations }
    };

    for iter in 0..max_iter {
        let (j, val) = oracle(&x);
        let gap = dot(&x, &x) - val;
        if gap <= target {
            return Ok(finish(x, iter));
        }
        if corral.contains(&j) {
            // Stalled on roundoff; accept if the certificate is good enough.
            if gap <= accept {
                return Ok(finish(x, iter));
            }
            return Err(Error::NoConvergence { iterations: iter, gap: gap.to_f64_lossy() });
        }
        corral.push(j);
        weights.push(T::zero());
        loop {
            let Some(mu) = affine_minimizer(&pts, &corral) else {
                corral.pop();
                weights.pop();
                if gap <= accept {
                    return Ok(finish(x, iter));
                }
                return Err(Error::NoConvergence { iterations: iter, gap: gap.to_f64_lossy() });
            };
            if mu.iter().all(|&m| m > tiny) {
                weights = mu;
                x = combine(&pts, &corral, &weights);
                break;
            }
            let theta = weights
                .iter()
                .zip(&mu)
                .filter(|(_, &m)| m <= tiny)
                .map(|(&w, &m)| w / (w - m))
                .fold(T::one(), T::min);
            for (w, &m) in weights.iter_mut().zip(&mu) {
                *w = (T::one() - theta) * *w + theta * m;
            }
            let keep: Vec<bool> = weights.iter().map(|&w| w > tiny).collect();
            let mut idx = 0;
            corral.retain(|_| {
                idx += 1;
                keep[idx - 1]
            });
            weights.retain(|&w| w > tiny);
            let total: T = weights.iter().copied().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            x = combine(&pts, &corral, &weights);
            if corral.len() == 1 {
                weights = vec![T::one()];
                x = pts[corral[0]].clone();
                break;
            }
        }
    }
    let gap = dot(&x, &x) - oracle(&x).1;
    if gap <= accept {
        return Ok(finish(x, max_iter));
    }
    Err(Error::NoConvergence { iterations: max_iter, gap: gap.to_f64_lossy() })
}

fn combine<T: Scalar>(pts: &[Vec<T>], idx: &[usize], w: &[T]) -> Vec<T> {
    let mut x = vec![T::zero(); pts[0].len()];
    for (&i, &wi) in idx.iter().zip(w) {
        x.iter_mut().zip(&pts[i]).for_each(|(a, &b)| *a += wi * b);
    }
    x
}

/// Weights `μ` (summing to one) of the minimum-norm point of the affine hull
/// of the corral.
fn affine_minimizer<T: Scalar>(pts: &[Vec<T>], idx: &[usize]) -> Option<Vec<T>> {
    let n = idx.len();
    if n == 1 {
        return Some(vec![T::one()]);
    }
    let base = &pts[idx[0]];
    let diffs: Vec<Vec<T>> = idx[1..]
        .iter()
        .map(|&i| pts[i].iter().zip(base).map(|(&a, &b)| a - b).collect())
        .collect();
    let mut g = Matrix::zeros(n - 1, n - 1);
    let mut rhs = vec![T::zero(); n - 1];
    for a in 0..n - 1 {
        for b in 0..n - 1 {
            g[(a, b)] = dot(&diffs[a], &diffs[b]);
        }
        rhs[a] = -dot(&diffs[a], base);
    }
    let tol = g.max_abs().max(T::min_positive_value()) * T::epsilon() * T::lit(1e3);
    let lu = Lu::factor(&g, tol).ok()?;
    let coef = lu.solve(&rhs);
    let mut mu = Vec::with_capacity(n);
    mu.push(T::one() - coef.iter().copied().sum::<T>());
    mu.extend(coef);
    mu.iter().all(|m| m.is_finite()).then_some(mu)
}

/// Hausdorff distance between the convex hulls, from vertex-to-hull distances.
pub fn hausdorff<T: Scalar>(p1: &Polytope<T>, p2: &Polytope<T>, wolfe_tol: T) -> Result<T> {
    check_dim(p1, p2.dim())?;
    check_dim(p2, p1.dim())?;
    let one_way = |a: &Polytope<T>, b: &Polytope<T>| -> Result<T> {
        a.vertices().iter().try_fold(T::zero(), |acc, v| {
            Ok(acc.max(min_norm_point(b, v, wolfe_tol)?.distance))
        })
    };
    Ok(one_way(p1, p2)?.max(one_way(p2, p1)?))
}

/// `max_α |h_{P1}(α) − h_{P2}(α)|` over the grid, a lower bound on the
/// Hausdorff distance.
pub fn grid_hausdorff<T: Scalar>(p1: &Polytope<T>, p2: &Polytope<T>, grid: &SphereGrid<T>) -> Result<T> {
    grid.directions().iter().try_fold(T::zero(), |acc, a| {
        Ok(acc.max((support_function(p1, a)? - support_function(p2, a)?).abs()))
    })
}
