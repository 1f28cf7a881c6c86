//! Least squares with a few bounded integer unknowns.
//!
//! Solves min ‖A c − E m − b‖ over real c and integer m with |m_j| ≤ M,
//! where E has a single 1 per row in the column of that row's integer
//! unknown (rows without one are purely real).

use nalgebra::{DMatrix, DVector};

use crate::linalg::{lstsq, RCOND};

#[derive(Debug, Clone, PartialEq)]
pub struct MixedSolution {
    pub c: Vec<f64>,
    pub m: Vec<i64>,
    /// A c − E m − b.
    pub residual: DVector<f64>,
}

fn shifted_rhs(b: &DVector<f64>, groups: &[Option<usize>], m: &[i64]) -> DVector<f64> {
    let mut r = b.clone();
    for (i, g) in groups.iter().enumerate() {
        if let Some(j) = g {
            r[i] += m[*j] as f64;
        }
    }
    r
}

/// Orthonormal basis of range(A), by SVD with the library cutoff.
fn range_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.max();
    let cut = smax * RCOND * (a.nrows().max(a.ncols()) as f64);
    let cols: Vec<_> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > cut)
        .map(|(k, _)| u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn project_out(u: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    if u.ncols() == 0 {
        return v.clone();
    }
    v - u * (u.transpose() * v)
}

pub fn solve_mixed(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    groups: &[Option<usize>],
    q: usize,
    max_integer: i64,
) -> MixedSolution {
    let m = if q == 0 {
        Vec::new()
    } else {
        integer_part(a, b, groups, q, max_integer)
    };
    let rhs = shifted_rhs(b, groups, &m);
    let sol = lstsq(a, &rhs);
    MixedSolution {
        c: sol.x.iter().copied().collect(),
        m,
        residual: sol.residual,
    }
}

/// Minimizes ‖P(b + E m)‖ over integers, P the projector onto range(A)^⊥.
fn integer_part(a: &DMatrix<f64>, b: &DVector<f64>, groups: &[Option<usize>], q: usize, max_integer: i64) -> Vec<i64> {
    let u = range_basis(a);
    let r0 = project_out(&u, b);
    let mut f = DMatrix::zeros(b.len(), q);
    for (i, g) in groups.iter().enumerate() {
        if let Some(j) = g {
            f[(i, *j)] = 1.0;
        }
    }
    let cols: Vec<DVector<f64>> = (0..q).map(|j| project_out(&u, &f.column(j).into_owned())).collect();
    let f = DMatrix::from_columns(&cols);
    let norms: Vec<f64> = cols.iter().map(|c| c.norm_squared()).collect();
    // an integer unknown whose column lies in range(A) is absorbed by c
    let scale = norms.iter().cloned().fold(0.0, f64::max).max(1.0);
    let active: Vec<bool> = norms.iter().map(|n| *n > 1e-18 * scale).collect();
    let relax = lstsq(&f, &(-&r0));
    let clamp = |v: f64| (v.round() as i64).clamp(-max_integer, max_integer);
    let mut m: Vec<i64> = (0..q)
        .map(|j| if active[j] { clamp(relax.x[j]) } else { 0 })
        .collect();
    let mut resid = &r0 + &f * DVector::from_iterator(q, m.iter().map(|v| *v as f64));
    for _ in 0..64 {
        let mut changed = false;
        for j in 0..q {
            if !active[j] {
                continue;
            }
            let col = f.column(j);
            let without = &resid - col * m[j] as f64;
            let best = clamp(-col.dot(&without) / norms[j]);
            if best != m[j] {
                resid = without + col * best as f64;
                m[j] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    m
}
