//! Confidence sets built from one solved basis.
//!
//! A region `G_α` for the limit of `rₙ(bₙ − b)` is pulled back through the
//! basis `Iₙ` returned by the solver: `x(Iₙ; G) = A_{Iₙ}⁻¹ G` on the basis
//! coordinates and zero elsewhere. The confidence set is
//! `Cₙ = {x̂ₙ − rₙ⁻¹ y : y ∈ x(Iₙ; G_α)}`. Membership is decided in `G`
//! space, so it is exact for every region kind.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::min_norm_point;
use crate::linalg::{is_symmetric, Lu, Matrix};
use crate::lp_core::{optimal_vertices, Basis, Polytope, StandardLp};
use crate::scalar::{dot, norm_inf, Scalar};
use crate::simplex::SolveResult;
use crate::stats::chi_square_quantile;

#[derive(Debug, Clone, PartialEq)]
pub enum RegionKind<T> {
    /// `{G : G_R ᵀ Σ⁻¹ G_R < q, G_i = 0 for i ∉ R}` where `R` is `rows`
    /// (all coordinates when `None`).
    Ellipsoid { sigma: Matrix<T>, sigma_inv: Matrix<T>, q: T, rows: Option<Vec<usize>> },
    /// Closed box; bounds may be infinite.
    Box { lower: Vec<T>, upper: Vec<T> },
    /// `{s·d : |s| ≤ half_width}` for the direction `d` as given.
    Segment { direction: Vec<T>, half_width: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion<T> {
    pub kind: RegionKind<T>,
    pub coverage_target: T,
    dim: usize,
}

impl<T: Scalar> ConfidenceRegion<T> {
    /// Gaussian ellipsoid over all `k` coordinates with `q` the `level`
    /// quantile of `χ²_k`.
    pub fn ellipsoid(sigma: Matrix<T>, level: f64) -> Result<Self> {
        let k = sigma.nrows();
        Self::ellipsoid_on_rows(sigma, level, (0..k).collect(), k)
    }

    /// Ellipsoid on the coordinates `rows` of a `dim`-vector whose other
    /// coordinates are pinned to zero.
    pub fn ellipsoid_on_rows(sigma: Matrix<T>, level: f64, rows: Vec<usize>, dim: usize) -> Result<Self> {
        let d = sigma.nrows();
        if sigma.ncols() != d || rows.len() != d {
            return Err(Error::Dimension(format!("Σ is {}×{} for {} rows", d, sigma.ncols(), rows.len())));
        }
        if rows.iter().any(|&r| r >= dim) || rows.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidRegion("ellipsoid rows must be increasing and in range".into()));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidRegion(format!("level {level} is not in (0, 1)")));
        }
        let scale = sigma.max_abs().max(T::min_positive_value());
        if !is_symmetric(&sigma, T::epsilon() * T::lit(100.0) * scale) {
            return Err(Error::InvalidRegion("Σ is not symmetric".into()));
        }
        let lu = Lu::factor(&sigma, T::epsilon() * T::lit(1e3) * scale).map_err(|_| Error::SingularCovariance)?;
        let sigma_inv = lu.inverse();
        let q = T::lit(chi_square_quantile(d, level)?);
        let rows = (d != dim).then_some(rows);
        Ok(Self { kind: RegionKind::Ellipsoid { sigma, sigma_inv, q, rows }, coverage_target: T::lit(level), dim })
    }

    pub fn boxed(lower: Vec<T>, upper: Vec<T>, coverage_target: T) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension("box bounds differ in length".into()));
        }
        if lower.iter().zip(&upper).any(|(&l, &u)| !(l <= T::zero() && T::zero() <= u)) {
            return Err(Error::InvalidRegion("box must contain the origin".into()));
        }
        Ok(Self { dim: lower.len(), kind: RegionKind::Box { lower, upper }, coverage_target })
    }

    pub fn segment(direction: Vec<T>, half_width: T, coverage_target: T) -> Result<Self> {
        if !(half_width >= T::zero()) {
            return Err(Error::InvalidRegion("segment half-width must be nonnegative".into()));
        }
        if direction.iter().all(|v| v.is_zero()) {
            return Err(Error::InvalidRegion("segment direction is zero".into()));
        }
        Ok(Self { dim: direction.len(), kind: RegionKind::Segment { direction, half_width }, coverage_target })
    }

    /// Dimension `k` of the vectors `G` the region lives in.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `G ∈ G_α`, with `tol` absorbing roundoff on pinned coordinates and
    /// closed boundaries.
    pub fn contains(&self, g: &[T], tol: T) -> bool {
        if g.len() != self.dim {
            return false;
        }
        match &self.kind {
            RegionKind::Ellipsoid { sigma_inv, q, rows, .. } => {
                let h: Vec<T> = match rows {
                    None => g.to_vec(),
                    Some(rows) => {
                        let pinned = (0..self.dim).filter(|i| rows.binary_search(i).is_err());
                        if pinned.into_iter().any(|i| g[i].abs() > tol) {
                            return false;
                        }
                        rows.iter().map(|&r| g[r]).collect()
                    }
                };
                dot(&h, &sigma_inv.mul_vec(&h)) < *q
            }
            RegionKind::Box { lower, upper } => {
                g.iter().zip(lower.iter().zip(upper)).all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
            }
            RegionKind::Segment { direction, half_width } => {
                let dd = dot(direction, direction);
                let s = dot(g, direction) / dd;
                let resid = g.iter().zip(direction).map(|(&v, &d)| (v - s * d).abs()).fold(T::zero(), T::max);
                resid <= tol && s.abs() <= *half_width + tol / dd.sqrt()
            }
        }
    }

    /// Range of `⟨a, G⟩` over the closure of the region.
    fn linear_range(&self, a: &[T]) -> (T, T) {
        match &self.kind {
            RegionKind::Ellipsoid { sigma, q, rows, .. } => {
                let ar: Vec<T> = match rows {
                    None => a.to_vec(),
                    Some(rows) => rows.iter().map(|&r| a[r]).collect(),
                };
                let r = (*q * dot(&ar, &sigma.mul_vec(&ar))).max(T::zero()).sqrt();
                (-r, r)
            }
            RegionKind::Box { lower, upper } => a.iter().zip(lower.iter().zip(upper)).filter(|(ai, _)| !ai.is_zero()).fold(
                (T::zero(), T::zero()),
                |(lo, hi), (&ai, (&l, &u))| {
                    let (x, y) = (ai * l, ai * u);
                    (lo + x.min(y), hi + x.max(y))
                },
            ),
            RegionKind::Segment { direction, half_width } => {
                let r = *half_width * dot(a, direction).abs();
                (-r, r)
            }
        }
    }
}

/// Image of a region under `G ↦ x(I; G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedSet<T> {
    pub basis: Basis,
    /// `A_I`.
    pub a_basis: Matrix<T>,
    /// `A_I⁻¹`.
    pub a_inv: Matrix<T>,
    pub region: ConfidenceRegion<T>,
    m: usize,
    tol: T,
}

impl<T: Scalar> MappedSet<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    /// `M = A_Iᵀ Σ⁻¹ A_I / q` (with `Σ⁻¹` zero-extended over pinned rows) for
    /// ellipsoids; the mapped set is `{y_I : y_Iᵀ M y_I < 1}` intersected
    /// with the pinned-row constraints.
    pub fn quadratic_form(&self) -> Option<Matrix<T>> {
        let RegionKind::Ellipsoid { sigma_inv, q, rows, .. } = &self.region.kind else { return None };
        let k = self.a_basis.nrows();
        let mut full = Matrix::zeros(k, k);
        let rows: Vec<usize> = rows.clone().unwrap_or_else(|| (0..k).collect());
        for (a, &ra) in rows.iter().enumerate() {
            for (b, &rb) in rows.iter().enumerate() {
                full[(ra, rb)] = sigma_inv[(a, b)];
            }
        }
        Some(self.a_basis.transpose().matmul(&full).matmul(&self.a_basis).scale(T::one() / *q))
    }

    /// `y ∈ x(I; G_α)` for a full-length vector `y`.
    pub fn contains(&self, y: &[T]) -> bool {
        if y.len() != self.m {
            return false;
        }
        let scale = T::one() + norm_inf(y);
        let off_basis_zero = (0..self.m).filter(|&i| !self.basis.contains(i)).all(|i| y[i].abs() <= self.tol * scale);
        if !off_basis_zero {
            return false;
        }
        let yb: Vec<T> = self.basis.indices().iter().map(|&i| y[i]).collect();
        self.region.contains(&self.a_basis.mul_vec(&yb), self.tol * scale)
    }
}

/// Pulls `region` back through the basis `I` of `lp`.
pub fn map_region<T: Scalar>(lp: &StandardLp<T>, basis: &Basis, region: &ConfidenceRegion<T>) -> Result<MappedSet<T>> {
    if region.dim() != lp.k() {
        return Err(Error::Dimension(format!("region has dimension {} but the program has {} rows", region.dim(), lp.k())));
    }
    let lu = lp.factor_basis(basis)?;
    Ok(MappedSet {
        basis: basis.clone(),
        a_basis: lp.a().select_columns(basis.indices()),
        a_inv: lu.inverse(),
        region: region.clone(),
        m: lp.m(),
        tol: lp.tol().feas,
    })
}

/// `Cₙ = {x̂ₙ − rₙ⁻¹ y : y ∈ mapped}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet<T> {
    pub center: Vec<T>,
    pub rate: T,
    pub mapped: MappedSet<T>,
}

pub fn confidence_set<T: Scalar>(result: &SolveResult<T>, rate: T, mapped: MappedSet<T>) -> Result<ConfidenceSet<T>> {
    if !(rate > T::zero()) || !rate.is_finite() {
        return Err(Error::InvalidInput(format!("rate {rate} must be positive and finite")));
    }
    if result.basis != mapped.basis {
        return Err(Error::InvalidBasis("solver basis differs from the mapped basis".into()));
    }
    if result.x_hat.len() != mapped.m() {
        return Err(Error::Dimension("center length differs from the mapped set".into()));
    }
    Ok(ConfidenceSet { center: result.x_hat.clone(), rate, mapped })
}

impl<T: Scalar> ConfidenceSet<T> {
    pub fn contains(&self, x: &[T]) -> bool {
        if x.len() != self.center.len() {
            return false;
        }
        let y: Vec<T> = self.center.iter().zip(x).map(|(&c, &v)| self.rate * (c - v)).collect();
        self.mapped.contains(&y)
    }

    /// Projection of `Cₙ` onto coordinate `i` (closed).
    pub fn coordinate_interval(&self, i: usize) -> (T, T) {
        let c = self.center[i];
        let Some(pos) = self.mapped.basis.indices().iter().position(|&j| j == i) else { return (c, c) };
        let (lo, hi) = self.mapped.region.linear_range(self.mapped.a_inv.row(pos));
        (c - hi / self.rate, c - lo / self.rate)
    }

    pub fn intervals(&self) -> Vec<(T, T)> {
        (0..self.center.len()).map(|i| self.coordinate_interval(i)).collect()
    }
}

/// Closest point of `x*(b)` to `x(I; b)`.
pub fn project_to_optimal<T: Scalar>(lp: &StandardLp<T>, basis: &Basis) -> Result<Vec<T>> {
    project_onto(&optimal_vertices(lp)?.polytope, lp, basis)
}

/// As [`project_to_optimal`] with the optimal polytope supplied.
pub fn project_onto<T: Scalar>(optimal: &Polytope<T>, lp: &StandardLp<T>, basis: &Basis) -> Result<Vec<T>> {
    let z = lp.basic_vector(basis, lp.b())?;
    Ok(min_norm_point(optimal, &z, lp.tol().wolfe)?.point)
}

/// Region description as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionJson {
    Ellipsoid {
        sigma: Vec<Vec<f64>>,
        level: f64,
        /// Coordinates `Σ` refers to; the rest are pinned to zero.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
        coverage_target: f64,
    },
    Segment {
        direction: Vec<f64>,
        half_width: f64,
        coverage_target: f64,
    },
}

impl RegionJson {
    pub fn to_region(&self) -> Result<ConfidenceRegion<f64>> {
        match self {
            RegionJson::Ellipsoid { sigma, level, rows, dim } => {
                let s = Matrix::from_rows(sigma)?;
                match rows {
                    Some(rows) => ConfidenceRegion::ellipsoid_on_rows(s, *level, rows.clone(), dim.unwrap_or(sigma.len())),
                    None => ConfidenceRegion::ellipsoid(s, *level),
                }
            }
            RegionJson::Box { lower, upper, coverage_target } => {
                ConfidenceRegion::boxed(lower.clone(), upper.clone(), *coverage_target)
            }
            RegionJson::Segment { direction, half_width, coverage_target } => {
                ConfidenceRegion::segment(direction.clone(), *half_width, *coverage_target)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_core::tests::ot2x2;
    use crate::simplex::solve;
    use crate::stats::normal_two_sided_quantile;
    use approx::assert_relative_eq;

    fn ot_region() -> ConfidenceRegion<f64> {
        let z = normal_two_sided_quantile(0.95).unwrap();
        ConfidenceRegion::segment(vec![1.0, -1.0, 0.0], z / 2.0, 0.95).unwrap()
    }

    fn reported_run() -> ConfidenceSet<f64> {
        let lp = ot2x2([0.55, 0.45, 0.5]);
        let r = solve(&lp).unwrap();
        let mapped = map_region(&lp, &r.basis, &ot_region()).unwrap();
        confidence_set(&r, 20f64.sqrt(), mapped).unwrap()
    }

    #[test]
    fn identity_ellipsoid_form() {
        let lp = StandardLp::new(Matrix::identity(2), vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let mut region = ConfidenceRegion::ellipsoid(Matrix::identity(2), 0.5).unwrap();
        if let RegionKind::Ellipsoid { q, .. } = &mut region.kind {
            *q = 1.0;
        }
        let mapped = map_region(&lp, &lp.basis(&[0, 1]).unwrap(), &region).unwrap();
        assert_eq!(mapped.quadratic_form().unwrap(), Matrix::identity(2));
        let r = solve(&lp).unwrap();
        let cs = confidence_set(&r, 1.0, mapped).unwrap();
        let (lo, hi) = cs.coordinate_interval(0);
        assert_relative_eq!(lo, 0.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn reported_intervals() {
        let cs = reported_run();
        assert_eq!(cs.mapped.basis.indices(), &[0, 1, 3]);
        let iv = cs.intervals();
        assert_eq!(iv[0], (0.5, 0.5));
        assert_eq!(iv[2], (0.0, 0.0));
        assert!((iv[1].0 + 0.169).abs() < 1e-3 && (iv[1].1 - 0.269).abs() < 1e-3, "{iv:?}");
        assert!((iv[3].0 - 0.231).abs() < 1e-3 && (iv[3].1 - 0.669).abs() < 1e-3, "{iv:?}");
        assert!(cs.contains(&[0.5, 0.0, 0.0, 0.5]));
        assert!(cs.contains(&cs.center.clone()));
        assert!(!cs.contains(&[0.5, 0.0, 0.01, 0.49]));
    }

    #[test]
    fn segment_image_and_zero_width() {
        let lp = ot2x2([0.5; 3]);
        let basis = lp.basis(&[0, 1, 3]).unwrap();
        let w = 0.3;
        let region = ConfidenceRegion::segment(vec![1.0, -1.0, 0.0], w, 0.95).unwrap();
        let mapped = map_region(&lp, &basis, &region).unwrap();
        assert!(mapped.contains(&[0.0, w, 0.0, -w]));
        assert!(!mapped.contains(&[0.0, w + 1e-6, 0.0, -w - 1e-6]));
        assert!(!mapped.contains(&[0.0, 0.1, 0.1, -0.1]));
        let zero = ConfidenceRegion::segment(vec![1.0, -1.0, 0.0], 0.0, 0.95).unwrap();
        let mapped = map_region(&lp, &basis, &zero).unwrap();
        assert!(mapped.contains(&[0.0; 4]));
        assert!(!mapped.contains(&[0.0, 1e-3, 0.0, -1e-3]));
    }

    #[test]
    fn region_must_contain_origin() {
        assert!(ConfidenceRegion::boxed(vec![0.1], vec![1.0], 0.9).is_err());
        assert!(ConfidenceRegion::segment(vec![0.0, 0.0], 1.0, 0.9).is_err());
        let singular = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(ConfidenceRegion::ellipsoid(singular, 0.9).unwrap_err(), Error::SingularCovariance);
    }

    #[test]
    fn rate_shrinks_intervals() {
        let lp = ot2x2([0.55, 0.45, 0.5]);
        let r = solve(&lp).unwrap();
        let mapped = map_region(&lp, &r.basis, &ot_region()).unwrap();
        let w = |rate: f64| {
            let cs = confidence_set(&r, rate, mapped.clone()).unwrap();
            let (lo, hi) = cs.coordinate_interval(1);
            hi - lo
        };
        assert_relative_eq!(w(100.0) * 100.0, w(1.0), epsilon = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let lp = ot2x2([0.5; 3]);
        let optimal = lp.basis(&[0, 1, 3]).unwrap();
        assert_eq!(project_to_optimal(&lp, &optimal).unwrap(), vec![0.5, 0.0, 0.0, 0.5]);
        let suboptimal = lp.basis(&[0, 1, 2]).unwrap();
        let p = project_to_optimal(&lp, &suboptimal).unwrap();
        for (a, b) in p.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert_relative_eq!(*a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn region_json() {
        let r: RegionJson = serde_json::from_str(r#"{"kind":"ellipsoid","sigma":[[1,0],[0,1]],"level":0.95}"#).unwrap();
        let region = r.to_region().unwrap();
        let RegionKind::Ellipsoid { q, .. } = region.kind else { panic!() };
        assert_relative_eq!(q, 5.991464547107979, epsilon = 1e-9);
        assert!(serde_json::from_str::<RegionJson>(r#"{"kind":"ball"}"#).is_err());
    }
}
