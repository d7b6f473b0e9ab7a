//! Auxiliary limit programs and samplers for the set-valued limit laws of
//! the optimal set.
//!
//! An auxiliary program has the form `min ⟨c,p⟩ s.t. Ap = g` with
//! nonnegativity imposed only off a fixed set of free coordinates. Its
//! vertices are the basic solutions whose basis contains every free index,
//! so for a fixed free set the factorizations are computed once
//! ([`AuxFamily`]) and reused across right-hand sides.

use itertools::Itertools;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{argmax_vertex, min_norm_point, support_function, Direction, SphereGrid};
use crate::linalg::{psd_factor, Lu, Matrix};
use crate::lp_core::{binomial, optimal_vertices, support, Polytope, StandardLp, Tolerances};
use crate::rng::stream;
use crate::scalar::{dot, norm_inf, Scalar};
use crate::simplex::solve;

/// `min ⟨c,p⟩ s.t. Ap = rhs, p_i ≥ 0 for i ∉ free`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSignLp<T> {
    a: Matrix<T>,
    rhs: Vec<T>,
    c: Vec<T>,
    free: Vec<usize>,
    tol: Tolerances<T>,
}

impl<T: Scalar> MixedSignLp<T> {
    pub fn new(a: Matrix<T>, rhs: Vec<T>, c: Vec<T>, mut free: Vec<usize>, tol: Tolerances<T>) -> Result<Self> {
        if rhs.len() != a.nrows() || c.len() != a.ncols() {
            return Err(Error::Dimension(format!(
                "A is {}×{}, rhs has {}, c has {}",
                a.nrows(),
                a.ncols(),
                rhs.len(),
                c.len()
            )));
        }
        free.sort_unstable();
        free.dedup();
        if free.last().is_some_and(|&i| i >= a.ncols()) {
            return Err(Error::InvalidInput("free index out of range".into()));
        }
        Ok(Self { a, rhs, c, free, tol })
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    /// Standard form with each free coordinate `p_i = u_i − w_i`; the `w`
    /// columns are appended in the order of `free_indices`.
    pub fn split(&self) -> Result<StandardLp<T>> {
        let (k, m) = (self.a.nrows(), self.a.ncols());
        let mut a = Matrix::zeros(k, m + self.free.len());
        for i in 0..k {
            for j in 0..m {
                a[(i, j)] = self.a[(i, j)];
            }
            for (s, &j) in self.free.iter().enumerate() {
                a[(i, m + s)] = -self.a[(i, j)];
            }
        }
        let mut c = self.c.clone();
        c.extend(self.free.iter().map(|&j| -self.c[j]));
        StandardLp::with_tolerances(a, self.rhs.clone(), c, self.tol)
    }

    /// One optimal point and the optimal value, by the simplex method on the split program.
    pub fn solve(&self) -> Result<(Vec<T>, T)> {
        let r = solve(&self.split()?)?;
        let m = self.a.ncols();
        let mut p = r.x_hat[..m].to_vec();
        for (s, &j) in self.free.iter().enumerate() {
            p[j] -= r.x_hat[m + s];
        }
        Ok((p, r.objective))
    }

    /// All optimal vertices, by enumeration over bases containing the free set.
    pub fn optimal_vertices(&self) -> Result<(Polytope<T>, T)> {
        AuxFamily::new(self.a.clone(), self.c.clone(), self.free.clone(), self.tol)?.solve_at(&self.rhs)
    }
}

/// Factorized bases `J ⊇ free` of an auxiliary program, shared across right-hand sides.
#[derive(Debug, Clone)]
pub struct AuxFamily<T> {
    a: Matrix<T>,
    c: Vec<T>,
    free: Vec<usize>,
    tol: Tolerances<T>,
    bases: Vec<(Vec<usize>, Lu<T>)>,
}

impl<T: Scalar> AuxFamily<T> {
    /// Fails with `Unbounded` when the program has no finite optimum for any right-hand side.
    pub fn new(a: Matrix<T>, c: Vec<T>, free: Vec<usize>, tol: Tolerances<T>) -> Result<Self> {
        let (k, m) = (a.nrows(), a.ncols());
        let probe = MixedSignLp::new(a, vec![T::zero(); k], c, free, tol)?;
        let MixedSignLp { a, c, free, .. } = probe.clone();
        if free.len() > k {
            return Err(Error::InvalidInput(format!("{} free coordinates exceed {k} rows", free.len())));
        }
        let rest: Vec<usize> = (0..m).filter(|i| free.binary_search(i).is_err()).collect();
        let count = binomial(rest.len() as u128, (k - free.len()) as u128);
        if count > tol.enum_cap {
            return Err(Error::InstanceTooLarge { count, cap: tol.enum_cap });
        }
        let pivot_tol = tol.rank_rel * a.norm_inf().max(T::one());
        let bases: Vec<(Vec<usize>, Lu<T>)> = rest
            .iter()
            .copied()
            .combinations(k - free.len())
            .filter_map(|extra| {
                let mut j: Vec<usize> = free.iter().copied().chain(extra).collect();
                j.sort_unstable();
                let lu = Lu::factor(&a.select_columns(&j), pivot_tol).ok()?;
                Some((j, lu))
            })
            .collect();
        if bases.is_empty() {
            return Err(Error::InvalidInput("free columns are linearly dependent".into()));
        }
        // Boundedness does not depend on the right-hand side once feasible.
        probe.solve()?;
        Ok(Self { a, c, free, tol, bases })
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn basis_count(&self) -> usize {
        self.bases.len()
    }

    pub fn program(&self, g: &[T]) -> Result<MixedSignLp<T>> {
        MixedSignLp::new(self.a.clone(), g.to_vec(), self.c.clone(), self.free.clone(), self.tol)
    }

    /// Optimal vertex set and optimal value at right-hand side `g`.
    pub fn solve_at(&self, g: &[T]) -> Result<(Polytope<T>, T)> {
        if g.len() != self.a.nrows() {
            return Err(Error::Dimension(format!("g has length {} but A has {} rows", g.len(), self.a.nrows())));
        }
        let scale = T::one() + norm_inf(g);
        let feas = self.tol.feas * scale;
        let m = self.a.ncols();
        let candidates: Vec<(Vec<T>, T)> = self
            .bases
            .iter()
            .filter_map(|(j, lu)| {
                let pj = lu.solve(g);
                let ok = j
                    .iter()
                    .zip(&pj)
                    .all(|(i, &v)| v >= -feas || self.free.binary_search(i).is_ok());
                ok.then(|| {
                    let mut p = vec![T::zero(); m];
                    for (&i, &v) in j.iter().zip(&pj) {
                        p[i] = v;
                    }
                    let f = dot(&self.c, &p);
                    (p, f)
                })
            })
            .collect();
        let best = candidates.iter().map(|(_, f)| *f).reduce(T::min).ok_or(Error::Infeasible)?;
        let cut = best + self.tol.obj_rel * (T::one() + best.abs()) * scale;
        let points = candidates.into_iter().filter(|(_, f)| *f <= cut).map(|(p, _)| p).collect();
        Ok((Polytope::new(points, self.tol.dedup * scale)?, best))
    }

    /// `max Σ_{i∉free} d_i` over the recession cone of the optimal set,
    /// capped at 1. Zero exactly when the optimal sets are bounded.
    pub fn recession_value(&self) -> Result<T> {
        let (k, m) = (self.a.nrows(), self.a.ncols());
        let nf = self.free.len();
        // Columns: d⁺ (m), d⁻ on free (nf), slack of ⟨c,d⟩ ≤ 0, slack of Σ ≤ 1.
        let cols = m + nf + 2;
        let mut a = Matrix::zeros(k + 2, cols);
        for i in 0..k {
            for j in 0..m {
                a[(i, j)] = self.a[(i, j)];
            }
            for (s, &j) in self.free.iter().enumerate() {
                a[(i, m + s)] = -self.a[(i, j)];
            }
        }
        for j in 0..m {
            a[(k, j)] = self.c[j];
        }
        for (s, &j) in self.free.iter().enumerate() {
            a[(k, m + s)] = -self.c[j];
        }
        a[(k, m + nf)] = T::one();
        let mut cost = vec![T::zero(); cols];
        for j in (0..m).filter(|j| self.free.binary_search(j).is_err()) {
            a[(k + 1, j)] = T::one();
            cost[j] = -T::one();
        }
        a[(k + 1, m + nf + 1)] = T::one();
        let mut b = vec![T::zero(); k + 2];
        b[k + 1] = T::one();
        let lp = StandardLp::with_tolerances(a, b, cost, self.tol)?;
        Ok(-solve(&lp)?.objective)
    }
}

/// `min ⟨c,p⟩ s.t. Ap = g, p_i ≥ 0 off the support of `x_star``. With
/// `check_unique` the target is first confirmed to be the only optimal vertex.
pub fn aux_lp_unique<T: Scalar>(lp: &StandardLp<T>, x_star: &[T], g: &[T], check_unique: bool) -> Result<MixedSignLp<T>> {
    if check_unique {
        let opt = optimal_vertices(lp)?;
        if opt.polytope.len() > 1 {
            return Err(Error::NotUnique { vertices: opt.polytope.len() });
        }
    }
    aux_lp_directional(lp, x_star, g)
}

/// The auxiliary program attached to an optimal vertex `v`.
pub fn aux_lp_directional<T: Scalar>(lp: &StandardLp<T>, v: &[T], g: &[T]) -> Result<MixedSignLp<T>> {
    if v.len() != lp.m() {
        return Err(Error::Dimension(format!("vertex has length {} but expected {}", v.len(), lp.m())));
    }
    let free = support(v, lp.tol().feas);
    MixedSignLp::new(lp.a().clone(), g.to_vec(), lp.c().to_vec(), free, *lp.tol())
}

fn family_for<T: Scalar>(lp: &StandardLp<T>, v: &[T]) -> Result<AuxFamily<T>> {
    AuxFamily::new(lp.a().clone(), lp.c().to_vec(), support(v, lp.tol().feas), *lp.tol())
}

#[derive(Debug, Clone, PartialEq)]
pub enum GKind<T> {
    /// `N(0, Σ)`, stored as a factor `L` with `LLᵀ = Σ`.
    Gaussian { factor: Matrix<T> },
    /// Limit of `√n(r̂ − p)` for multinomial frequencies, zero-padded to `pad_to` coordinates.
    MultinomialClt { p: Vec<T>, pad_to: usize, factor: Matrix<T> },
    /// Uniform choice among fixed vectors.
    Empirical(Vec<Vec<T>>),
}

/// Seeded sampler for the limit `𝔾` of `rₙ(bₙ − b)`. Draw `i` depends only
/// on the seed and `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GSampler<T> {
    pub kind: GKind<T>,
    pub seed: u64,
}

impl<T: Scalar> GSampler<T> {
    pub fn gaussian(cov: &Matrix<T>, seed: u64) -> Result<Self> {
        let factor = psd_factor(cov, T::lit(1e-12).max(T::epsilon() * T::lit(100.0)) * cov.max_abs().max(T::one()))?;
        Ok(Self { kind: GKind::Gaussian { factor }, seed })
    }

    pub fn multinomial_clt(p: Vec<T>, pad_to: usize, seed: u64) -> Result<Self> {
        let total: T = p.iter().copied().sum();
        if p.iter().any(|&v| v < T::zero()) || (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(100.0)) {
            return Err(Error::InvalidInput("multinomial probabilities must be nonnegative and sum to 1".into()));
        }
        if pad_to < p.len() {
            return Err(Error::Dimension(format!("cannot pad {} coordinates to {pad_to}", p.len())));
        }
        let d = p.len();
        let mut cov = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] = if i == j { p[i] - p[i] * p[i] } else { -p[i] * p[j] };
            }
        }
        let factor = psd_factor(&cov, T::lit(1e-12).max(T::epsilon() * T::lit(100.0)))?;
        Ok(Self { kind: GKind::MultinomialClt { p, pad_to, factor }, seed })
    }

    pub fn empirical(values: Vec<Vec<T>>, seed: u64) -> Result<Self> {
        let d = values.first().ok_or_else(|| Error::InvalidInput("empirical sampler needs values".into()))?.len();
        if values.iter().any(|v| v.len() != d) {
            return Err(Error::Dimension("empirical values differ in length".into()));
        }
        Ok(Self { kind: GKind::Empirical(values), seed })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            GKind::Gaussian { factor } => factor.nrows(),
            GKind::MultinomialClt { pad_to, .. } => *pad_to,
            GKind::Empirical(v) => v[0].len(),
        }
    }

    pub fn draw(&self, index: u64) -> Vec<T> {
        let mut rng = stream(self.seed, &[index]);
        let mut normal = |factor: &Matrix<T>| {
            let z: Vec<T> = (0..factor.ncols()).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
            factor.mul_vec(&z)
        };
        match &self.kind {
            GKind::Gaussian { factor } => normal(factor),
            GKind::MultinomialClt { pad_to, factor, .. } => {
                let mut g = normal(factor);
                g.resize(*pad_to, T::zero());
                g
            }
            GKind::Empirical(values) => values[rng.random_range(0..values.len())].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSample<T> {
    pub g: Vec<T>,
    pub optimal_set: Polytope<T>,
    pub objective: T,
}

/// Draws `𝔾` and the optimal vertex set of the unique-target auxiliary
/// program for each draw index `0..n_draws`.
pub fn sample_unique_limit<T: Scalar>(
    lp: &StandardLp<T>,
    x_star: &[T],
    sampler: &GSampler<T>,
    n_draws: usize,
) -> Result<Vec<LimitSample<T>>> {
    if sampler.dim() != lp.k() {
        return Err(Error::Dimension(format!("sampler has dimension {} but the program has {} rows", sampler.dim(), lp.k())));
    }
    let family = family_for(lp, x_star)?;
    (0..n_draws as u64)
        .into_par_iter()
        .map(|i| {
            let g = sampler.draw(i);
            let (optimal_set, objective) = family.solve_at(&g)?;
            Ok(LimitSample { g, optimal_set, objective })
        })
        .collect()
}

/// Distance from the origin to the sample's optimal set.
pub fn distance_statistic<T: Scalar>(sample: &LimitSample<T>) -> Result<T> {
    let zero = vec![T::zero(); sample.optimal_set.dim()];
    Ok(min_norm_point(&sample.optimal_set, &zero, Tolerances::<T>::default().wolfe)?.distance)
}

/// Precomputed pieces of the directional limit `Ĥ_g` on a fixed grid: the
/// optimal vertices `V*(b)`, the maximizing vertex of each grid direction,
/// and one auxiliary family per vertex that is used.
#[derive(Debug, Clone)]
pub struct DirectionalLimit<T> {
    grid: SphereGrid<T>,
    targets: Polytope<T>,
    /// Vertex index per grid direction; `None` when the maximizer is tied.
    assignment: Vec<Option<usize>>,
    families: Vec<Option<AuxFamily<T>>>,
}

impl<T: Scalar> DirectionalLimit<T> {
    pub fn new(lp: &StandardLp<T>, grid: SphereGrid<T>) -> Result<Self> {
        let targets = optimal_vertices(lp)?.polytope;
        Self::with_targets(lp, targets, grid)
    }

    pub fn with_targets(lp: &StandardLp<T>, targets: Polytope<T>, grid: SphereGrid<T>) -> Result<Self> {
        if grid.directions().first().is_some_and(|d| d.dim() != lp.m()) {
            return Err(Error::Dimension(format!("grid lives in dimension {} but the program has {} variables", grid.directions()[0].dim(), lp.m())));
        }
        let tie = lp.tol().tie;
        let assignment = grid
            .directions()
            .iter()
            .map(|alpha| {
                let (v, unique) = argmax_vertex(&targets, alpha, tie)?;
                Ok(unique.then(|| targets.vertices().iter().position(|w| *w == v).expect("argmax is a vertex")))
            })
            .collect::<Result<Vec<_>>>()?;
        let families = (0..targets.len())
            .map(|i| {
                assignment
                    .contains(&Some(i))
                    .then(|| family_for(lp, &targets.vertices()[i]))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, targets, assignment, families })
    }

    pub fn grid(&self) -> &SphereGrid<T> {
        &self.grid
    }

    pub fn targets(&self) -> &Polytope<T> {
        &self.targets
    }

    pub fn excluded_fraction(&self) -> f64 {
        let n = self.assignment.iter().filter(|a| a.is_none()).count();
        n as f64 / self.assignment.len().max(1) as f64
    }

    /// `Ĥ_g(α)` per grid direction, `None` on excluded directions.
    pub fn evaluate(&self, g: &[T]) -> Result<Vec<Option<T>>> {
        let sets = self
            .families
            .iter()
            .map(|f| f.as_ref().map(|f| f.solve_at(g).map(|(p, _)| p)).transpose())
            .collect::<Result<Vec<Option<Polytope<T>>>>>()?;
        self.grid
            .directions()
            .iter()
            .zip(&self.assignment)
            .map(|(alpha, a)| match a {
                Some(i) => support_function(sets[*i].as_ref().expect("family built for assigned vertex"), alpha).map(Some),
                None => Ok(None),
            })
            .collect()
    }
}

/// `(α, Ĥ_g(α))` for every non-excluded grid direction, and the excluded fraction.
pub fn limit_support_function<T: Scalar>(
    lp: &StandardLp<T>,
    g: &[T],
    grid: &SphereGrid<T>,
) -> Result<(Vec<(Direction<T>, T)>, f64)> {
    let dl = DirectionalLimit::new(lp, grid.clone())?;
    let values = dl.evaluate(g)?;
    let out = grid
        .directions()
        .iter()
        .zip(values)
        .filter_map(|(a, v)| v.map(|v| (a.clone(), v)))
        .collect();
    Ok((out, dl.excluded_fraction()))
}

/// Outcome of [`hadamard_quotient_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct HadamardCheck<T> {
    /// `(t, sup_α |(h_{b+tξ}(α) − h_b(α))/t − Ĥ_ξ(α)|)` per step.
    pub errors: Vec<(T, T)>,
    /// The error at the smallest step.
    pub max_error: T,
    pub excluded_fraction: f64,
}

/// Difference quotients of the support function of the optimal set against
/// the directional limit, over the non-excluded grid directions.
pub fn hadamard_quotient_check<T: Scalar>(
    lp: &StandardLp<T>,
    xi: &[T],
    t_list: &[T],
    grid: &SphereGrid<T>,
) -> Result<HadamardCheck<T>> {
    if xi.len() != lp.k() {
        return Err(Error::Dimension(format!("ξ has length {} but expected {}", xi.len(), lp.k())));
    }
    if t_list.is_empty() || t_list.iter().any(|&t| !(t > T::zero())) {
        return Err(Error::InvalidInput("steps must be positive".into()));
    }
    let base = optimal_vertices(lp)?.polytope;
    let dl = DirectionalLimit::with_targets(lp, base.clone(), grid.clone())?;
    let limit = dl.evaluate(xi)?;
    let h0: Vec<T> = grid.directions().iter().map(|a| support_function(&base, a)).collect::<Result<_>>()?;
    let errors = t_list
        .iter()
        .map(|&t| {
            let b: Vec<T> = lp.b().iter().zip(xi).map(|(&b, &x)| b + t * x).collect();
            let moved = optimal_vertices(&lp.with_rhs(b)?)?.polytope;
            let err = grid
                .directions()
                .iter()
                .zip(&h0)
                .zip(&limit)
                .filter_map(|((a, &h), l)| l.map(|l| (a, h, l)))
                .try_fold(T::zero(), |acc, (a, h, l)| {
                    Ok::<T, Error>(acc.max(((support_function(&moved, a)? - h) / t - l).abs()))
                })?;
            Ok((t, err))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_error = errors
        .iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite steps"))
        .map(|e| e.1)
        .expect("nonempty steps");
    Ok(HadamardCheck { errors, max_error, excluded_fraction: dl.excluded_fraction() })
}
