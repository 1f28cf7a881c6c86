//! Dense least squares via the SVD.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff for minimum-norm solutions.
pub const RCOND: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    pub residual: DVector<f64>,
    pub rank: usize,
}

/// Minimum-norm least-squares solution of `a x ≈ b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> LstsqSolution {
    if a.ncols() == 0 {
        return LstsqSolution {
            x: DVector::zeros(0),
            residual: b.clone(),
            rank: 0,
        };
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = smax * RCOND * (a.nrows().max(a.ncols()) as f64);
    let rank = svd.singular_values.iter().filter(|s| **s > cut).count();
    let x = svd
        .solve(b, cut.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let residual = a * &x - b;
    LstsqSolution { x, residual, rank }
}

/// Condition number of the Gram matrix aᵀa, i.e. (σ_max/σ_min)².
pub fn gram_condition(a: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return 1.0;
    }
    let s = a.clone().singular_values();
    let (mx, mn) = (s.max(), s.min());
    if mn <= 0.0 {
        f64::INFINITY
    } else {
        (mx / mn).powi(2)
    }
}

pub fn rms(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        (v.norm_squared() / v.len() as f64).sqrt()
    }
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_overdetermined_system() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s = lstsq(&a, &b);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        assert!(max_abs(&s.residual) < 1e-12);
        assert_eq!(s.rank, 2);
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, 2.0]);
        let s = lstsq(&a, &b);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        assert_eq!(s.rank, 1);
        assert!(gram_condition(&a).is_infinite() || gram_condition(&a) > 1e20);
    }
}
