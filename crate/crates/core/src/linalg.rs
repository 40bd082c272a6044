//! Dense linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::{Error, Real, Result};

/// Largest singular value `‖A‖₂`, computed from a full SVD.
pub fn spectral_norm<T: Real>(a: &DMatrix<T>) -> Result<T> {
    if a.iter().any(|v| !v.is_finite_val()) {
        return Err(Error::NonFinite("matrix"));
    }
    if a.is_empty() {
        return Ok(T::zero());
    }
    let svd = a.clone().svd(false, false);
    Ok(svd.singular_values.iter().copied().fold(T::zero(), |m, s| if s > m { s } else { m }))
}

/// Numerical rank from singular values with the usual `max(m,n)·eps·σ_max` cutoff.
fn rank_cutoff<T: Real>(rows: usize, cols: usize, smax: T) -> T {
    T::lit(rows.max(cols) as f64) * T::default_epsilon() * smax
}

/// Ridge regression: returns `W` (outputs × features) minimizing
/// `Σ‖W x_i − y_i‖² + λ‖W‖²_F` where rows of `x` are samples and rows of `y` targets.
///
/// With `lambda = 0` a rank-deficient design is an error.
pub fn ridge_solve<T: Real>(x: &DMatrix<T>, y: &DMatrix<T>, lambda: T) -> Result<DMatrix<T>> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.nrows() });
    }
    if lambda < T::zero() || !lambda.is_finite_val() {
        return Err(Error::InvalidParameter("ridge penalty must be finite and >= 0".into()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite_val()) {
        return Err(Error::NonFinite("regression data"));
    }
    let cols = x.ncols();
    if x.nrows() == 0 {
        return if lambda > T::zero() {
            Ok(DMatrix::zeros(y.ncols(), cols))
        } else {
            Err(Error::RankDeficient { rank: 0, cols })
        };
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(T::zero(), |m, v| if v > m { v } else { m });
    let cut = rank_cutoff(x.nrows(), cols, smax);
    let rank = s.iter().filter(|&&v| v > cut).count();
    if lambda == T::zero() && rank < cols {
        return Err(Error::RankDeficient { rank, cols });
    }
    let uty = u.transpose() * y;
    let mut scaled = uty;
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        let si = s[i];
        let f = if lambda == T::zero() {
            T::one() / si
        } else {
            si / (si * si + lambda)
        };
        row *= f;
    }
    let b = vt.transpose() * scaled;
    Ok(b.transpose())
}

/// Minimum-norm least squares via the pseudo-inverse; never fails on rank deficiency.
pub fn lstsq_pinv<T: Real>(x: &DMatrix<T>, y: &DMatrix<T>) -> Result<DMatrix<T>> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: y.nrows() });
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(T::zero(), |m, v| if v > m { v } else { m });
    let cut = rank_cutoff(x.nrows(), x.ncols(), smax);
    let mut scaled = u.transpose() * y;
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        let f = if s[i] > cut { T::one() / s[i] } else { T::zero() };
        row *= f;
    }
    Ok((vt.transpose() * scaled).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&DMatrix::<f64>::zeros(3, 3)).unwrap(), 0.0);
        assert_relative_eq!(spectral_norm(&DMatrix::<f64>::identity(4, 4)).unwrap(), 1.0, max_relative = 1e-12);
        let d = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, -0.7]);
        assert_relative_eq!(spectral_norm(&d).unwrap(), 0.7, max_relative = 1e-12);
        // λ_max(AᵀA) = (0.34 + sqrt(0.0832)) / 2
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.4, 0.0, 0.3]);
        let oracle = ((0.34 + 0.0832f64.sqrt()) / 2.0).sqrt();
        assert_relative_eq!(spectral_norm(&a).unwrap(), oracle, max_relative = 1e-10);
        assert_relative_eq!(oracle, 0.56057, epsilon = 1e-4);
    }

    #[test]
    fn spectral_norm_rejects_nan() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(spectral_norm(&a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn ridge_identity_and_scalar() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let w = ridge_solve(&x, &x, 0.0).unwrap();
        assert_relative_eq!(w, DMatrix::identity(2, 2), epsilon = 1e-12);

        let xs = DMatrix::from_column_slice(4, 1, &[0.1, -0.5, 0.3, 0.9]);
        let ys = &xs * 3.0;
        let w = ridge_solve(&xs, &ys, 0.0).unwrap();
        assert_relative_eq!(w[(0, 0)], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ridge_matches_normal_equations() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, 0.5, 0.3, 0.3, 2.0, -1.0]);
        let y = DMatrix::from_row_slice(4, 1, &[1.0, 0.0, 2.0, -1.0]);
        let lambda = 0.7;
        let w = ridge_solve(&x, &y, lambda).unwrap();
        let a = x.transpose() * &x + DMatrix::identity(2, 2) * lambda;
        let b = a.try_inverse().unwrap() * x.transpose() * &y;
        assert_relative_eq!(w, b.transpose(), epsilon = 1e-12);
    }

    #[test]
    fn ridge_rank_deficient_needs_penalty() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let y = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(matches!(ridge_solve(&x, &y, 0.0), Err(Error::RankDeficient { .. })));
        assert!(ridge_solve(&x, &y, 1e-3).is_ok());
    }

    #[test]
    fn ridge_large_penalty_shrinks_to_zero() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0f64, 2.0, 3.0]);
        let y = &x * 2.0;
        let w = ridge_solve(&x, &y, 1e12).unwrap();
        assert!(w[(0, 0)].abs() < 1e-9);
    }
}
