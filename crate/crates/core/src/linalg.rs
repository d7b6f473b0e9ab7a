//! Small dense linear algebra: row-major matrices, LU with partial pivoting,
//! numerical rank, and the spectral norm.

use crate::error::{Error, Result};
use crate::scalar::{dot, norm2, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols: ncols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Submatrix formed by the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (jj, &j) in cols.iter().enumerate() {
                out[(i, jj)] = self[(i, j)];
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: rows.len(), cols: self.cols, data }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ y`.
    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Numerical rank by Gaussian elimination with full pivoting.
    pub fn rank(&self, tol: T) -> usize {
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let mut rank = 0;
        for col in 0..n.min(m) {
            let _ = col;
            let mut best = (rank, rank, T::zero());
            for i in rank..m {
                for j in rank..n {
                    let v = a[(i, j)].abs();
                    if v > best.2 {
                        best = (i, j, v);
                    }
                }
            }
            if best.2 <= tol {
                break;
            }
            a.swap_rows(rank, best.0);
            a.swap_cols(rank, best.1);
            let p = a[(rank, rank)];
            for i in rank + 1..m {
                let f = a[(i, rank)] / p;
                if f != T::zero() {
                    for j in rank..n {
                        let v = a[(rank, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            for c in 0..self.cols {
                self.data.swap(i * self.cols + c, j * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i != j {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + i, r * self.cols + j);
            }
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization `P A = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    n: usize,
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Fails with `SingularBasis` when a pivot falls to `pivot_tol` or below.
    pub fn factor(a: &Matrix<T>, pivot_tol: T) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > pivot_tol) {
                return Err(Error::SingularBasis);
            }
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solves `Aᵀ y = c`.
    pub fn solve_transpose(&self, c: &[T]) -> Vec<T> {
        let n = self.n;
        // Uᵀ z = c
        let mut z = c.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * z[j];
            }
            z[i] = s / self.lu[(i, i)];
        }
        // Lᵀ w = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)] * z[j];
            }
            z[i] = s;
        }
        let mut y = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            y[p] = z[k];
        }
        y
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            e[j] = T::zero();
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Largest singular value by power iteration on `BᵀB`.
pub fn spectral_norm<T: Scalar>(b: &Matrix<T>, tol: T, max_iter: usize) -> T {
    let n = b.ncols();
    if n == 0 || b.nrows() == 0 {
        return T::zero();
    }
    // Deterministic start with all components nonzero.
    let mut v: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.1) * T::from_usize_lossy(i % 7))
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut sigma = T::zero();
    for _ in 0..max_iter {
        let bv = b.mul_vec(&v);
        let w = b.tr_mul_vec(&bv);
        let nw = norm2(&w);
        if nw == T::zero() {
            return T::zero();
        }
        let next = nw.sqrt();
        v = w.into_iter().map(|x| x / nw).collect();
        let done = (next - sigma).abs() <= tol * next.max(T::one());
        sigma = next;
        if done {
            break;
        }
    }
    // Rayleigh quotient at the final iterate is a lower bound; take the larger.
    sigma.max(norm2(&b.mul_vec(&v)))
}

/// Lower-triangular `L` with `L Lᵀ = S` for a positive semidefinite `S`.
/// Pivots at or below `tol` are treated as zero, which handles singular
/// covariances such as the degenerate marginal limit.
pub fn psd_factor<T: Scalar>(s: &Matrix<T>, tol: T) -> Result<Matrix<T>> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::Dimension("covariance must be square".into()));
    }
    let scale = s.max_abs().max(T::one());
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol * scale {
            return Err(Error::InvalidInput("covariance is not positive semidefinite".into()));
        }
        if d <= tol * scale {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

pub fn is_symmetric<T: Scalar>(s: &Matrix<T>, tol: T) -> bool {
    s.nrows() == s.ncols()
        && (0..s.nrows()).all(|i| (0..i).all(|j| (s[(i, j)] - s[(j, i)]).abs() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lu_solves_and_transposes() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]])
            .unwrap();
        let lu = Lu::factor(&a, 1e-12).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*u, v, epsilon = 1e-12);
        }
        let y = lu.solve_transpose(&[1.0, -1.0, 0.5]);
        let aty = a.tr_mul_vec(&y);
        for (u, v) in aty.iter().zip([1.0, -1.0, 0.5]) {
            assert_relative_eq!(*u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(Lu::factor(&a, 1e-12).unwrap_err(), Error::SingularBasis);
        assert_eq!(a.rank(1e-12), 1);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = Matrix::from_diagonal(&[1.0, -3.0, 2.0]);
        assert_relative_eq!(spectral_norm(&a, 1e-12, 10_000), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn psd_factor_handles_rank_one() {
        let s = Matrix::from_rows(&[vec![0.25, -0.25], vec![-0.25, 0.25]]).unwrap();
        let l = psd_factor(&s, 1e-12).unwrap();
        let back = l.matmul(&l.transpose());
        assert_relative_eq!(back[(0, 1)], -0.25, epsilon = 1e-15);
        assert_eq!(l[(1, 1)], 0.0);
    }
}
