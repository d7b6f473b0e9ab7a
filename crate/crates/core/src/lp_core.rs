//! Standard-form linear programs `min ⟨c,x⟩ s.t. Ax = b, x ≥ 0`, bases,
//! basic solutions, and exhaustive enumeration for small instances.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::scalar::{dot, norm_inf, Scalar};

/// Numerical tolerances shared by the solver, the enumeration oracles and
/// the geometry routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Relative pivot threshold; the absolute value is `rank_rel · ‖A‖∞`.
    pub rank_rel: T,
    /// Feasibility tolerance on basic coordinates.
    pub feas: T,
    /// Relative objective tolerance; the absolute value is `obj_rel · (1 + |f|)`.
    pub obj_rel: T,
    /// Vertices closer than this (max-norm) are merged.
    pub dedup: T,
    /// Relative tolerance for the KKT residuals; scaled by `1 + ‖c‖∞ + ‖b‖∞`.
    pub kkt_rel: T,
    /// Support-function ties below this are treated as non-differentiable directions.
    pub tie: T,
    /// Duality-gap target of the min-norm-point iteration.
    pub wolfe: T,
    /// Maximum number of subsets any enumeration may visit.
    pub enum_cap: u128,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        // Never tighter than a small multiple of machine epsilon, so f32 stays usable.
        let floor = |v: f64, mult: f64| T::lit(v).max(T::epsilon() * T::lit(mult));
        Self {
            rank_rel: floor(1e-10, 10.0),
            feas: floor(1e-9, 1e3),
            obj_rel: floor(1e-8, 1e4),
            dedup: floor(1e-8, 1e4),
            kkt_rel: floor(1e-7, 1e5),
            tie: floor(1e-9, 1e3),
            wolfe: floor(1e-9, 1e3),
            enum_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardLp<T> {
    a: Matrix<T>,
    b: Vec<T>,
    c: Vec<T>,
    tol: Tolerances<T>,
}

impl<T: Scalar> StandardLp<T> {
    pub fn new(a: Matrix<T>, b: Vec<T>, c: Vec<T>) -> Result<Self> {
        Self::with_tolerances(a, b, c, Tolerances::default())
    }

    pub fn with_tolerances(a: Matrix<T>, b: Vec<T>, c: Vec<T>, tol: Tolerances<T>) -> Result<Self> {
        let (k, m) = (a.nrows(), a.ncols());
        if b.len() != k {
            return Err(Error::Dimension(format!("b has length {} but A has {k} rows", b.len())));
        }
        if c.len() != m {
            return Err(Error::Dimension(format!("c has length {} but A has {m} columns", c.len())));
        }
        if k == 0 {
            return Err(Error::Dimension("A has no rows".into()));
        }
        if k > m {
            return Err(Error::TooManyRows { rows: k, cols: m });
        }
        if a.max_abs().is_nan() || b.iter().chain(&c).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in problem data".into()));
        }
        let lp = Self { a, b, c, tol };
        let rank = lp.a.rank(lp.rank_tol());
        if rank < k {
            return Err(Error::RankDeficient { rank, rows: k });
        }
        Ok(lp)
    }

    pub fn from_rows(a: &[Vec<T>], b: &[T], c: &[T]) -> Result<Self> {
        Self::new(Matrix::from_rows(a)?, b.to_vec(), c.to_vec())
    }

    /// Removes rows that are (numerically) linear combinations of earlier
    /// rows, then builds the program. Returns the indices of dropped rows.
    /// A dropped row whose right-hand side is inconsistent makes the program
    /// infeasible.
    pub fn drop_redundant_rows(a: &Matrix<T>, b: &[T], c: &[T]) -> Result<(Self, Vec<usize>)> {
        Self::drop_redundant_rows_with(a, b, c, Tolerances::default())
    }

    pub fn drop_redundant_rows_with(
        a: &Matrix<T>,
        b: &[T],
        c: &[T],
        tol: Tolerances<T>,
    ) -> Result<(Self, Vec<usize>)> {
        if b.len() != a.nrows() {
            return Err(Error::Dimension("b length does not match rows of A".into()));
        }
        let pivot_tol = tol.rank_rel * a.norm_inf().max(T::one());
        let m = a.ncols();
        // Reduced copies of kept rows (augmented with b) and their pivot columns.
        let mut reduced: Vec<(Vec<T>, usize)> = Vec::new();
        let (mut kept, mut dropped) = (Vec::new(), Vec::new());
        for i in 0..a.nrows() {
            let mut row: Vec<T> = a.row(i).to_vec();
            row.push(b[i]);
            for (r, p) in &reduced {
                let f = row[*p] / r[*p];
                if f != T::zero() {
                    row.iter_mut().zip(r).for_each(|(x, &y)| *x -= f * y);
                }
            }
            let (pcol, pmax) = row[..m]
                .iter()
                .enumerate()
                .fold((0, T::zero()), |best, (j, &v)| if v.abs() > best.1 { (j, v.abs()) } else { best });
            if pmax > pivot_tol {
                reduced.push((row, pcol));
                kept.push(i);
            } else {
                if row[m].abs() > tol.feas * (T::one() + norm_inf(b)) {
                    return Err(Error::Infeasible);
                }
                dropped.push(i);
            }
        }
        let lp = Self::with_tolerances(a.select_rows(&kept), kept.iter().map(|&i| b[i]).collect(), c.to_vec(), tol)?;
        Ok((lp, dropped))
    }

    /// Same constraint matrix and cost with a new right-hand side.
    pub fn with_rhs(&self, b: Vec<T>) -> Result<Self> {
        if b.len() != self.k() {
            return Err(Error::Dimension(format!("rhs has length {} but expected {}", b.len(), self.k())));
        }
        Ok(Self { a: self.a.clone(), b, c: self.c.clone(), tol: self.tol })
    }

    /// Same data with a new cost vector.
    pub fn with_cost(&self, c: Vec<T>) -> Result<Self> {
        if c.len() != self.m() {
            return Err(Error::Dimension(format!("cost has length {} but expected {}", c.len(), self.m())));
        }
        Ok(Self { a: self.a.clone(), b: self.b.clone(), c, tol: self.tol })
    }

    pub fn set_tolerances(&mut self, tol: Tolerances<T>) {
        self.tol = tol;
    }

    /// Number of constraints.
    pub fn k(&self) -> usize {
        self.a.nrows()
    }

    /// Number of variables.
    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }

    pub fn tol(&self) -> &Tolerances<T> {
        &self.tol
    }

    pub fn rank_tol(&self) -> T {
        self.tol.rank_rel * self.a.norm_inf().max(T::one())
    }

    /// Absolute objective tolerance around the value `f`.
    pub fn obj_tol(&self, f: T) -> T {
        self.tol.obj_rel * (T::one() + f.abs())
    }

    pub fn kkt_tol(&self) -> T {
        self.tol.kkt_rel * (T::one() + norm_inf(&self.c) + norm_inf(&self.b))
    }

    pub fn objective(&self, x: &[T]) -> T {
        dot(&self.c, x)
    }

    /// Validates `indices` as a basis of this program.
    pub fn basis(&self, indices: &[usize]) -> Result<Basis> {
        let basis = Basis::new(indices.to_vec(), self.m())?;
        if basis.len() != self.k() {
            return Err(Error::InvalidBasis(format!("expected {} indices, got {}", self.k(), basis.len())));
        }
        self.factor_basis(&basis)?;
        Ok(basis)
    }

    /// LU factors of `A_I`.
    pub fn factor_basis(&self, basis: &Basis) -> Result<Lu<T>> {
        if basis.len() != self.k() || basis.indices().iter().any(|&i| i >= self.m()) {
            return Err(Error::InvalidBasis(format!("{:?} is not a size-{} subset of 0..{}", basis.indices(), self.k(), self.m())));
        }
        Lu::factor(&self.a.select_columns(basis.indices()), self.rank_tol())
    }

    /// `x(I; rhs)` for an arbitrary right-hand side (no feasibility flags).
    pub fn basic_vector(&self, basis: &Basis, rhs: &[T]) -> Result<Vec<T>> {
        let lu = self.factor_basis(basis)?;
        Ok(scatter(basis, &lu.solve(rhs), self.m()))
    }

    /// Number of size-k column subsets.
    pub fn subset_count(&self) -> u128 {
        binomial(self.m() as u128, self.k() as u128)
    }

    fn check_cap(&self, count: u128) -> Result<()> {
        if count > self.tol.enum_cap {
            return Err(Error::InstanceTooLarge { count, cap: self.tol.enum_cap });
        }
        Ok(())
    }
}

/// Sorted set of `k` distinct column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Basis {
    indices: Vec<usize>,
}

impl Basis {
    /// Sorts the indices and checks they are distinct and below `m`.
    pub fn new(mut indices: Vec<usize>, m: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidBasis(format!("repeated index in {indices:?}")));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= m) {
            return Err(Error::InvalidBasis(format!("index {bad} out of range 0..{m}")));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicSolution<T> {
    pub basis: Basis,
    pub x: Vec<T>,
    pub feasible: bool,
    pub degenerate: bool,
}

/// `x(I; b)`: solves `A_I x_I = b` and sets the remaining coordinates to zero.
pub fn basic_solution<T: Scalar>(lp: &StandardLp<T>, basis: &Basis) -> Result<BasicSolution<T>> {
    let lu = lp.factor_basis(basis)?;
    let xb = lu.solve(lp.b());
    Ok(classify(lp, basis, xb))
}

fn classify<T: Scalar>(lp: &StandardLp<T>, basis: &Basis, xb: Vec<T>) -> BasicSolution<T> {
    let feas = lp.tol().feas;
    let feasible = xb.iter().all(|&v| v >= -feas);
    let degenerate = feasible && xb.iter().any(|&v| v.abs() <= feas);
    BasicSolution { x: scatter(basis, &xb, lp.m()), basis: basis.clone(), feasible, degenerate }
}

pub(crate) fn scatter<T: Scalar>(basis: &Basis, xb: &[T], m: usize) -> Vec<T> {
    let mut x = vec![T::zero(); m];
    for (&i, &v) in basis.indices().iter().zip(xb) {
        x[i] = v;
    }
    x
}

/// Indices with `|x_i| > tol`.
pub fn support<T: Scalar>(x: &[T], tol: T) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, v)| v.abs() > tol).map(|(i, _)| i).collect()
}

/// All feasible bases, in lexicographic order of their index sets.
pub fn enumerate_feasible_bases<T: Scalar>(lp: &StandardLp<T>) -> Result<Vec<Basis>> {
    Ok(enumerate_basic_feasible(lp)?.into_iter().map(|s| s.basis).collect())
}

pub(crate) fn enumerate_basic_feasible<T: Scalar>(lp: &StandardLp<T>) -> Result<Vec<BasicSolution<T>>> {
    lp.check_cap(lp.subset_count())?;
    let subsets: Vec<Vec<usize>> = (0..lp.m()).combinations(lp.k()).collect();
    Ok(subsets
        .into_par_iter()
        .filter_map(|idx| {
            let basis = Basis { indices: idx };
            let lu = lp.factor_basis(&basis).ok()?;
            let sol = classify(lp, &basis, lu.solve(lp.b()));
            sol.feasible.then_some(sol)
        })
        .collect())
}

/// All invertible bases (feasible or not) with their inverse factorizations.
pub(crate) fn enumerate_invertible<T: Scalar>(lp: &StandardLp<T>) -> Result<Vec<(Basis, Lu<T>)>> {
    lp.check_cap(lp.subset_count())?;
    let subsets: Vec<Vec<usize>> = (0..lp.m()).combinations(lp.k()).collect();
    Ok(subsets
        .into_par_iter()
        .filter_map(|idx| {
            let basis = Basis { indices: idx };
            let lu = lp.factor_basis(&basis).ok()?;
            Some((basis, lu))
        })
        .collect())
}

/// Vertex-list polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope<T> {
    vertices: Vec<Vec<T>>,
    dim: usize,
}

impl<T: Scalar> Polytope<T> {
    /// Builds the polytope, merging points within `dedup_tol` in max-norm.
    pub fn new(points: Vec<Vec<T>>, dedup_tol: T) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyPolytope)?.len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension("polytope vertices differ in dimension".into()));
        }
        let mut vertices: Vec<Vec<T>> = Vec::with_capacity(points.len());
        for p in points {
            let dup = vertices
                .iter()
                .any(|v| v.iter().zip(&p).all(|(&a, &b)| (a - b).abs() <= dedup_tol));
            if !dup {
                vertices.push(p);
            }
        }
        Ok(Self { vertices, dim })
    }

    pub fn singleton(point: Vec<T>) -> Self {
        Self { dim: point.len(), vertices: vec![point] }
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Image under `x ↦ s·(x − shift)`.
    pub fn affine(&self, shift: &[T], s: T) -> Self {
        Self {
            dim: self.dim,
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().zip(shift).map(|(&a, &b)| s * (a - b)).collect())
                .collect(),
        }
    }
}

/// Optimal vertices of a program together with every optimal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSet<T> {
    pub polytope: Polytope<T>,
    pub bases: Vec<Basis>,
    pub objective: T,
}

impl<T> OptimalSet<T> {
    pub fn contains_basis(&self, basis: &Basis) -> bool {
        self.bases.binary_search(basis).is_ok()
    }
}

/// `V*(b)` and `𝓘*(b)` by exhaustive enumeration.
pub fn optimal_vertices<T: Scalar>(lp: &StandardLp<T>) -> Result<OptimalSet<T>> {
    let feasible = enumerate_basic_feasible(lp)?;
    let best = feasible
        .iter()
        .map(|s| lp.objective(&s.x))
        .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.min(v))))
        .ok_or(Error::Infeasible)?;
    let tol = lp.obj_tol(best);
    let optimal: Vec<BasicSolution<T>> = feasible
        .into_iter()
        .filter(|s| lp.objective(&s.x) <= best + tol)
        .collect();
    let bases = optimal.iter().map(|s| s.basis.clone()).collect();
    let polytope = Polytope::new(optimal.into_iter().map(|s| s.x).collect(), lp.tol().dedup)?;
    Ok(OptimalSet { polytope, bases, objective: best })
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// On-disk problem format: `{"A": [[...]], "b": [...], "c": [...]}` with row-major `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl LpJson {
    pub fn to_lp<T: Scalar>(&self) -> Result<StandardLp<T>> {
        let conv = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let rows: Vec<Vec<T>> = self.a.iter().map(|r| conv(r)).collect();
        if let Some(r) = rows.iter().find(|r| r.len() != self.c.len()) {
            return Err(Error::Dimension(format!("row of A has length {} but c has {}", r.len(), self.c.len())));
        }
        StandardLp::new(Matrix::from_rows(&rows)?, conv(&self.b), conv(&self.c))
    }

    pub fn from_lp<T: Scalar>(lp: &StandardLp<T>) -> Self {
        let conv = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
        Self {
            a: lp.a().to_rows().iter().map(|r| conv(r)).collect(),
            b: conv(lp.b()),
            c: conv(lp.c()),
        }
    }
}

impl StandardLp<f64> {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LpJson = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        raw.to_lp()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&LpJson::from_lp(self)).expect("problem data serializes")
    }
}
