//! Two-phase revised simplex with Bland's pivoting rule.
//!
//! The basis matrix is refactorized on every pivot. Entering and leaving
//! variables are always the smallest eligible indices, so the solver
//! terminates on degenerate programs and its output is a deterministic
//! function of the input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::lp_core::{basic_solution, Basis, StandardLp};
use crate::scalar::{dot, norm_inf, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Optimal vertex, its basis, and the vertex dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub x_hat: Vec<T>,
    pub basis: Basis,
    pub objective: T,
    /// `λ*` solving `A_Iᵀ λ = c_I`.
    pub dual: Vec<T>,
    /// Reduced costs `s = c − Aᵀλ*`.
    pub slack: Vec<T>,
}

struct Tableau<T> {
    /// `[diag(σ)·A | I]` with `σ_i = sign(b_i)`.
    a: Matrix<T>,
    rhs: Vec<T>,
    m: usize,
    basic: Vec<usize>,
    pivot_tol: T,
    opt_tol: T,
    max_iter: usize,
}

impl<T: Scalar> Tableau<T> {
    fn new(lp: &StandardLp<T>) -> Self {
        let (k, m) = (lp.k(), lp.m());
        let mut a = Matrix::zeros(k, m + k);
        let mut rhs = Vec::with_capacity(k);
        for i in 0..k {
            let sign = if lp.b()[i] < T::zero() { -T::one() } else { T::one() };
            for j in 0..m {
                a[(i, j)] = sign * lp.a()[(i, j)];
            }
            a[(i, m + i)] = T::one();
            rhs.push(sign * lp.b()[i]);
        }
        let scale = lp.a().max_abs().max(T::one());
        Self {
            a,
            rhs,
            m,
            basic: (m..m + k).collect(),
            pivot_tol: T::lit(1e-9) * scale,
            opt_tol: T::lit(1e-9) * (T::one() + norm_inf(lp.c())),
            max_iter: 10_000 + 200 * (m + k),
        }
    }

    fn factor(&self) -> Result<Lu<T>> {
        Lu::factor(&self.a.select_columns(&self.basic), T::epsilon() * T::lit(16.0))
    }

    /// Runs primal simplex on `cost` over columns `0..ncols` from the current basis.
    fn run(&mut self, cost: &[T], ncols: usize) -> Result<()> {
        for _ in 0..self.max_iter {
            let lu = self.factor()?;
            let xb = lu.solve(&self.rhs);
            let cb: Vec<T> = self.basic.iter().map(|&j| cost[j]).collect();
            let y = lu.solve_transpose(&cb);

            let entering = (0..ncols).find(|&j| {
                !self.basic.contains(&j) && cost[j] - dot(&y, &self.a.column(j)) < -self.opt_tol
            });
            let Some(j) = entering else { return Ok(()) };

            let dir = lu.solve(&self.a.column(j));
            let mut leave: Option<(usize, T)> = None;
            for (pos, &d) in dir.iter().enumerate() {
                if d <= self.pivot_tol {
                    continue;
                }
                let ratio = xb[pos].max(T::zero()) / d;
                leave = match leave {
                    None => Some((pos, ratio)),
                    Some((best, r)) => {
                        let tie = (ratio - r).abs() <= T::epsilon() * T::lit(64.0) * (T::one() + r);
                        if (tie && self.basic[pos] < self.basic[best]) || (!tie && ratio < r) {
                            Some((pos, ratio))
                        } else {
                            Some((best, r))
                        }
                    }
                };
            }
            let Some((pos, _)) = leave else { return Err(Error::Unbounded) };
            self.basic[pos] = j;
        }
        Err(Error::IterationLimit(self.max_iter))
    }

    /// Pivots basic artificials out of the basis so the final basis only
    /// contains columns of `A`.
    fn drive_out_artificials(&mut self) -> Result<()> {
        while let Some(pos) = self.basic.iter().position(|&j| j >= self.m) {
            let lu = self.factor()?;
            let mut e = vec![T::zero(); self.basic.len()];
            e[pos] = T::one();
            let row = lu.solve_transpose(&e);
            let candidate = (0..self.m)
                .filter(|j| !self.basic.contains(j))
                .map(|j| (j, dot(&row, &self.a.column(j)).abs()))
                .fold(None, |best: Option<(usize, T)>, (j, v)| match best {
                    Some((_, bv)) if bv >= v => best,
                    _ => Some((j, v)),
                });
            match candidate {
                Some((j, v)) if v > self.pivot_tol => self.basic[pos] = j,
                // Full row rank guarantees a replacement column exists.
                _ => return Err(Error::SingularBasis),
            }
        }
        Ok(())
    }
}

/// Solves the program, returning an optimal vertex with its basis and duals.
pub fn solve<T: Scalar>(lp: &StandardLp<T>) -> Result<SolveResult<T>> {
    let (k, m) = (lp.k(), lp.m());
    let mut tab = Tableau::new(lp);

    let phase1: Vec<T> = (0..m + k).map(|j| if j < m { T::zero() } else { T::one() }).collect();
    tab.run(&phase1, m)?;
    let xb = tab.factor()?.solve(&tab.rhs);
    let infeasibility: T = tab
        .basic
        .iter()
        .zip(&xb)
        .filter(|(&j, _)| j >= m)
        .map(|(_, &v)| v.abs())
        .sum();
    if infeasibility > lp.tol().feas * (T::one() + norm_inf(lp.b())) {
        return Err(Error::Infeasible);
    }
    tab.drive_out_artificials()?;

    let mut phase2 = lp.c().to_vec();
    phase2.extend(std::iter::repeat(T::zero()).take(k));
    tab.run(&phase2, m)?;

    let basis = Basis::new(tab.basic.clone(), m)?;
    let sol = basic_solution(lp, &basis)?;
    let lu = lp.factor_basis(&basis)?;
    let cb: Vec<T> = basis.indices().iter().map(|&j| lp.c()[j]).collect();
    let dual = lu.solve_transpose(&cb);
    let aty = lp.a().tr_mul_vec(&dual);
    let slack: Vec<T> = lp.c().iter().zip(&aty).map(|(&c, &v)| c - v).collect();
    Ok(SolveResult { objective: lp.objective(&sol.x), x_hat: sol.x, basis, dual, slack })
}

/// Outcome class of [`solve`].
pub fn solve_status<T: Scalar>(lp: &StandardLp<T>) -> Result<LpStatus> {
    match solve(lp) {
        Ok(_) => Ok(LpStatus::Optimal),
        Err(e) => e.lp_status().ok_or(e),
    }
}

/// Checks the five optimality conditions: dual feasibility with slack,
/// primal feasibility, nonnegativity of `x` and `s`, and complementary slackness.
pub fn verify_kkt<T: Scalar>(lp: &StandardLp<T>, r: &SolveResult<T>) -> bool {
    let (k, m) = (lp.k(), lp.m());
    if r.x_hat.len() != m || r.slack.len() != m || r.dual.len() != k {
        return false;
    }
    let tol = lp.kkt_tol();
    let feas = lp.tol().feas;
    let aty = lp.a().tr_mul_vec(&r.dual);
    let stationarity = (0..m).all(|i| (aty[i] + r.slack[i] - lp.c()[i]).abs() <= tol);
    let ax = lp.a().mul_vec(&r.x_hat);
    let primal = ax.iter().zip(lp.b()).all(|(&u, &v)| (u - v).abs() <= tol);
    let x_nonneg = r.x_hat.iter().all(|&v| v >= -feas);
    let s_nonneg = r.slack.iter().all(|&v| v >= -feas);
    let complementary = dot(&r.x_hat, &r.slack).abs() <= tol;
    stationarity && primal && x_nonneg && s_nonneg && complementary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_core::optimal_vertices;
    use crate::lp_core::tests::ot2x2;
    use approx::assert_relative_eq;

    #[test]
    fn perturbed_marginals() {
        let lp = ot2x2([0.55, 0.45, 0.5]);
        let r = solve(&lp).unwrap();
        let expect = [0.5, 0.05, 0.0, 0.45];
        for (a, b) in r.x_hat.iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        assert_relative_eq!(r.objective, 0.05, epsilon = 1e-12);
        assert!(verify_kkt(&lp, &r));
    }

    #[test]
    fn identity_program() {
        let c = vec![3.0, -1.0, 2.0];
        let lp = StandardLp::new(Matrix::identity(3), vec![1.0, 2.0, 0.5], c.clone()).unwrap();
        let r = solve(&lp).unwrap();
        assert_eq!(r.x_hat, vec![1.0, 2.0, 0.5]);
        assert_eq!(r.dual, c);
        assert_relative_eq!(r.objective, 3.0 - 2.0 + 1.0);
    }

    #[test]
    fn truth_marginals_hit_an_optimal_basis() {
        let lp = ot2x2([0.5; 3]);
        let r = solve(&lp).unwrap();
        let opt = optimal_vertices(&lp).unwrap();
        assert_eq!(r.objective, 0.0);
        assert_eq!(r.x_hat, vec![0.5, 0.0, 0.0, 0.5]);
        assert!(opt.contains_basis(&r.basis));
        assert!(verify_kkt(&lp, &r));
    }

    #[test]
    fn kkt_rejects_perturbed_point() {
        let lp = ot2x2([0.55, 0.45, 0.5]);
        let mut r = solve(&lp).unwrap();
        let nonbasic = (0..4).find(|&i| !r.basis.contains(i)).unwrap();
        r.x_hat[nonbasic] += 1e-3;
        assert!(!verify_kkt(&lp, &r));
    }

    #[test]
    fn kkt_accepts_hand_built_pair() {
        let c = vec![1.0, 2.0];
        let lp = StandardLp::new(Matrix::identity(2), vec![1.0, 1.0], c.clone()).unwrap();
        let r = SolveResult {
            x_hat: vec![1.0, 1.0],
            basis: lp.basis(&[0, 1]).unwrap(),
            objective: 3.0,
            dual: c,
            slack: vec![0.0, 0.0],
        };
        assert!(verify_kkt(&lp, &r));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = StandardLp::new(Matrix::identity(2), vec![1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(solve(&lp).unwrap_err(), Error::Infeasible);
        assert_eq!(solve_status(&lp).unwrap(), LpStatus::Infeasible);
        // x₀ − x₁ = 1 with cost −x₀ runs off to infinity.
        let lp = StandardLp::from_rows(&[vec![1.0, -1.0]], &[1.0], &[-1.0, 0.0]).unwrap();
        assert_eq!(solve(&lp).unwrap_err(), Error::Unbounded);
    }

    #[test]
    fn negative_rhs_rows_are_sign_corrected() {
        // −x₀ − x₁ = −2, x₀ − x₂ = 0.5; min x₁ ⇒ x₀ = 2, x₂ = 1.5.
        let lp = StandardLp::from_rows(
            &[vec![-1.0, -1.0, 0.0], vec![1.0, 0.0, -1.0]],
            &[-2.0, 0.5],
            &[0.0, 1.0, 0.0],
        )
        .unwrap();
        let r = solve(&lp).unwrap();
        assert_relative_eq!(r.objective, 0.0);
        assert_relative_eq!(r.x_hat[0], 2.0, epsilon = 1e-12);
        assert!(verify_kkt(&lp, &r));
    }

    #[test]
    fn deterministic_output() {
        let lp = ot2x2([0.3, 0.7, 0.5]);
        assert_eq!(solve(&lp).unwrap(), solve(&lp).unwrap());
    }
}
