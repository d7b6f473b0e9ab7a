//! Distribution quantiles and two-sample statistics used by the confidence
//! regions and the limit-law comparisons.

use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};

/// `P(χ²_dof ≤ x)` via the regularized lower incomplete gamma function.
pub fn chi_square_cdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(dof as f64 / 2.0, x / 2.0)
}

/// Quantile of the chi-square distribution by bisection, to absolute
/// tolerance `1e-12` in `x`.
pub fn chi_square_quantile(dof: usize, p: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidInput("chi-square needs at least one degree of freedom".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("probability {p} outside (0, 1)")));
    }
    let mut hi = dof as f64 + 10.0 * (2.0 * dof as f64).sqrt() + 10.0;
    while chi_square_cdf(dof, hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if chi_square_cdf(dof, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `z` with `P(|Z| ≤ z) = level` for a standard normal `Z`; obtained as the
/// square root of the one-degree chi-square quantile.
pub fn normal_two_sided_quantile(level: f64) -> Result<f64> {
    Ok(chi_square_quantile(1, level)?.sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_t |F_a(t) − F_b(t)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("KS statistic needs two nonempty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("NaN in KS sample".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn known_quantiles() {
        assert_abs_diff_eq!(normal_two_sided_quantile(0.95).unwrap(), 1.959963984540054, epsilon = 1e-9);
        assert_abs_diff_eq!(chi_square_quantile(4, 0.95).unwrap(), 9.487729036781154, epsilon = 1e-9);
        assert_abs_diff_eq!(chi_square_quantile(2, 0.5).unwrap(), 2.0 * 2f64.ln(), epsilon = 1e-10);
        assert!(chi_square_quantile(3, 1.0).is_err());
    }

    #[test]
    fn ks_examples() {
        let a = [0.1, 0.4, 0.2, 0.9];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[2.0]).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    }
}
