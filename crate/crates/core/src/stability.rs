//! Explicit perturbation radii and Lipschitz constants for the feasible and
//! optimal bases of a program, plus empirical checks of the corresponding
//! inclusion and Lipschitz properties.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::hausdorff;
use crate::linalg::{spectral_norm, Matrix};
use crate::lp_core::{enumerate_invertible, optimal_vertices, Basis, StandardLp};
use crate::scalar::{dist2, norm2, Scalar};
use crate::simplex::solve;

const NORM_TOL: f64 = 1e-10;
const NORM_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    /// Radius within which no infeasible basis becomes feasible; `+∞` when
    /// no invertible basis has a negative coordinate.
    pub delta_b0: T,
    /// Radius within which the Slater point can be shifted to stay strictly feasible.
    pub delta_b1: T,
    /// `max_{I ∈ 𝓘(b)} min_{i ∈ S(x(I;b))} x(I;b)_i`.
    pub tau: T,
    /// `min_{I ∈ 𝓘(b)} min_{i ∈ S(x(I;b))} x(I;b)_i`, the margin the radius actually uses.
    pub tau_min: T,
    /// `max ‖A_I⁻¹‖₂` over invertible bases.
    pub c1: T,
    /// Largest norm of a vertex of `{λ : Aᵀλ ≤ c}`.
    pub c2: T,
    /// `tau_min / c1`.
    pub delta_prime: T,
    /// `min(delta_b0, delta_b1, delta_prime)`.
    pub delta_star: T,
    pub feasible_bases: usize,
    pub invertible_bases: usize,
    pub dual_vertices: usize,
}

/// Computes every stability constant by enumerating the invertible bases.
pub fn stability_report<T: Scalar>(lp: &StandardLp<T>, slater_point: &[T]) -> Result<StabilityReport<T>> {
    check_slater(lp, slater_point)?;
    let feas = lp.tol().feas;
    let bases = enumerate_invertible(lp)?;

    let mut delta_b0 = T::infinity();
    let mut tau = T::neg_infinity();
    let mut tau_min = T::infinity();
    let mut c1 = T::zero();
    let mut c2 = T::zero();
    let mut first_feasible_norm: Option<T> = None;
    let (mut feasible_bases, mut dual_vertices) = (0, 0);

    let c_scale = lp.kkt_tol();
    for (basis, lu) in &bases {
        let inv_norm = spectral_norm(&lu.inverse(), T::lit(NORM_TOL), NORM_MAX_ITER);
        c1 = c1.max(inv_norm);
        let xb = lu.solve(lp.b());
        for &v in xb.iter().filter(|&&v| v < -feas) {
            delta_b0 = delta_b0.min(v.abs() / inv_norm);
        }
        if xb.iter().all(|&v| v >= -feas) {
            feasible_bases += 1;
            first_feasible_norm.get_or_insert(inv_norm);
            if let Some(smallest) = xb.iter().filter(|&&v| v > feas).copied().reduce(T::min) {
                tau = tau.max(smallest);
                tau_min = tau_min.min(smallest);
            }
        }

        let cb: Vec<T> = basis.indices().iter().map(|&j| lp.c()[j]).collect();
        let lambda = lu.solve_transpose(&cb);
        let aty = lp.a().tr_mul_vec(&lambda);
        if aty.iter().zip(lp.c()).all(|(&u, &c)| u <= c + c_scale) {
            dual_vertices += 1;
            c2 = c2.max(norm2(&lambda));
        }
    }
    let first_norm = first_feasible_norm.ok_or(Error::Infeasible)?;
    if tau_min == T::infinity() {
        // b = 0: every feasible basic solution is the origin.
        tau = T::infinity();
        tau_min = T::infinity();
    }
    let s_min = slater_point.iter().copied().fold(T::infinity(), T::min);
    let delta_b1 = s_min / first_norm;
    let delta_prime = tau_min / c1;
    let delta_star = delta_b0.min(delta_b1).min(delta_prime);
    Ok(StabilityReport {
        delta_b0,
        delta_b1,
        tau,
        tau_min,
        c1,
        c2,
        delta_prime,
        delta_star,
        feasible_bases,
        invertible_bases: bases.len(),
        dual_vertices,
    })
}

fn check_slater<T: Scalar>(lp: &StandardLp<T>, x0: &[T]) -> Result<()> {
    if x0.len() != lp.m() {
        return Err(Error::Dimension(format!("Slater point has length {} but expected {}", x0.len(), lp.m())));
    }
    if let Some(i) = x0.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::NotSlater(format!("coordinate {i} is not strictly positive")));
    }
    let ax = lp.a().mul_vec(x0);
    let resid = ax.iter().zip(lp.b()).map(|(&u, &v)| (u - v).abs()).fold(T::zero(), T::max);
    if resid > lp.kkt_tol() {
        return Err(Error::NotSlater(format!("residual ‖Ax₀ − b‖∞ = {resid}")));
    }
    Ok(())
}

/// A strictly positive feasible point, from `max t s.t. A(x' + t·1) = b, 0 ≤ t ≤ 1, x' ≥ 0`.
pub fn find_slater_point<T: Scalar>(lp: &StandardLp<T>) -> Result<Vec<T>> {
    let (k, m) = (lp.k(), lp.m());
    let ones = lp.a().mul_vec(&vec![T::one(); m]);
    // Columns: x' (m), t, s.
    let mut a = Matrix::zeros(k + 1, m + 2);
    for i in 0..k {
        for j in 0..m {
            a[(i, j)] = lp.a()[(i, j)];
        }
        a[(i, m)] = ones[i];
    }
    a[(k, m)] = T::one();
    a[(k, m + 1)] = T::one();
    let mut b = lp.b().to_vec();
    b.push(T::one());
    let mut c = vec![T::zero(); m + 2];
    c[m] = -T::one();
    let aux = StandardLp::with_tolerances(a, b, c, *lp.tol())?;
    let r = solve(&aux)?;
    let t = r.x_hat[m];
    if !(t > lp.tol().feas) {
        return Err(Error::NotSlater("no strictly positive feasible point exists".into()));
    }
    Ok(r.x_hat[..m].iter().map(|&v| v.max(T::zero()) + t).collect())
}

/// Whether every optimal basis at `b'` is optimal at `b`.
pub fn check_basis_inclusion<T: Scalar>(lp: &StandardLp<T>, b_prime: &[T]) -> Result<bool> {
    let here = optimal_vertices(lp)?;
    let there = optimal_vertices(&lp.with_rhs(b_prime.to_vec())?)?;
    Ok(there.bases.iter().all(|b| here.contains_basis(b)))
}

/// `ρ_H(x*(b₁), x*(b₂)) / ‖b₁ − b₂‖`.
pub fn check_hausdorff_lipschitz<T: Scalar>(lp: &StandardLp<T>, b1: &[T], b2: &[T]) -> Result<T> {
    let denom = dist2(b1, b2);
    if !(denom > T::zero()) {
        return Err(Error::DegenerateDenominator);
    }
    let p1 = optimal_vertices(&lp.with_rhs(b1.to_vec())?)?;
    let p2 = optimal_vertices(&lp.with_rhs(b2.to_vec())?)?;
    Ok(hausdorff(&p1.polytope, &p2.polytope, lp.tol().wolfe)? / denom)
}

/// Feasible-basis inclusion `𝓘(b') ⊆ 𝓘(b)`.
pub fn check_feasible_inclusion<T: Scalar>(lp: &StandardLp<T>, b_prime: &[T]) -> Result<bool> {
    let here = crate::lp_core::enumerate_feasible_bases(lp)?;
    let there = crate::lp_core::enumerate_feasible_bases(&lp.with_rhs(b_prime.to_vec())?)?;
    Ok(there.iter().all(|b| here.binary_search(b).is_ok()))
}

/// Largest `‖x(I;b') − x(I;b)‖ / ‖b' − b‖` over `I ∈ 𝓘(b')`.
pub fn basic_solution_ratio<T: Scalar>(lp: &StandardLp<T>, b_prime: &[T]) -> Result<T> {
    let denom = dist2(lp.b(), b_prime);
    if !(denom > T::zero()) {
        return Err(Error::DegenerateDenominator);
    }
    let moved = lp.with_rhs(b_prime.to_vec())?;
    let bases: Vec<Basis> = crate::lp_core::enumerate_feasible_bases(&moved)?;
    bases.iter().try_fold(T::zero(), |acc, basis| {
        let x1 = lp.basic_vector(basis, lp.b())?;
        let x2 = lp.basic_vector(basis, b_prime)?;
        Ok(acc.max(dist2(&x1, &x2) / denom))
    })
}

/// JSON-friendly view; infinite radii are reported as `"unconstrained"`.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityJson {
    pub delta_b0: serde_json::Value,
    pub delta_b1: serde_json::Value,
    pub tau: serde_json::Value,
    pub tau_min: serde_json::Value,
    pub c1: serde_json::Value,
    pub c2: serde_json::Value,
    pub delta_prime: serde_json::Value,
    pub delta_star: serde_json::Value,
    pub feasible_bases: usize,
    pub invertible_bases: usize,
    pub dual_vertices: usize,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn to_json(&self) -> StabilityJson {
        let v = |x: T| {
            let f = x.to_f64_lossy();
            if f.is_finite() {
                serde_json::json!(f)
            } else {
                serde_json::json!("unconstrained")
            }
        };
        StabilityJson {
            delta_b0: v(self.delta_b0),
            delta_b1: v(self.delta_b1),
            tau: v(self.tau),
            tau_min: v(self.tau_min),
            c1: v(self.c1),
            c2: v(self.c2),
            delta_prime: v(self.delta_prime),
            delta_star: v(self.delta_star),
            feasible_bases: self.feasible_bases,
            invertible_bases: self.invertible_bases,
            dual_vertices: self.dual_vertices,
        }
    }
}
