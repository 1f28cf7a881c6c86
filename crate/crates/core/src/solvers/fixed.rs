//! Zeros of fundamental fields and the fixed-point obstruction.
//!
//! If X_N(x₀) = 0 then ι_Xβ(x₀) = 0 for every 1-form β, so a primitive with
//! ι_Xβ = −μ(X) can only exist when μ(X)(x₀) = 0. Likewise L_XΛ(x₀) = 0.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bundle::{curvature_fields, Connection, EquivariantBundle, Section};
use crate::error::Result;
use crate::geometry::{ParameterSpace, VectorField};
use crate::linalg::lstsq;
use crate::probes::halton_points;

const NEWTON_STEPS: usize = 60;
const ZERO_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointWitness {
    pub lie: String,
    pub point: Vec<f64>,
    /// μ(X) at the zero; nonzero means no primitive exists.
    pub moment: f64,
    /// |X_N| at the reported point.
    pub field_norm: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn jacobian(space: &ParameterSpace, field: &VectorField, x: &[f64]) -> Result<DMatrix<f64>> {
    let d = x.len();
    let h = space.fd_step();
    let mut j = DMatrix::zeros(d, d);
    for c in 0..d {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[c] += h;
        m[c] -= h;
        let (fp, fm) = (field.eval(&p)?, field.eval(&m)?);
        for r in 0..d {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(j)
}

/// Zeros of `field` reached by minimum-norm Newton steps from `starts`,
/// deduplicated.
pub fn find_zeros(space: &ParameterSpace, field: &VectorField, starts: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut zeros: Vec<Vec<f64>> = Vec::new();
    for s in starts {
        let mut x = s.clone();
        let mut found = false;
        for _ in 0..NEWTON_STEPS {
            let f = field.eval(&x)?;
            if norm(&f) < ZERO_TOL * (1.0 + norm(&x)) {
                found = true;
                break;
            }
            let j = jacobian(space, field, &x)?;
            let step = lstsq(&j, &DVector::from_vec(f)).x;
            if step.norm() < 1e-15 {
                break;
            }
            for (xi, si) in x.iter_mut().zip(step.iter()) {
                *xi -= si;
            }
            if x.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
                break;
            }
            space.reduce(&mut x);
        }
        if found && zeros.iter().all(|z| space.distance(z, &x) > 1e-6) {
            zeros.push(x);
        }
    }
    Ok(zeros)
}

/// The first zero of some X_N at which μ(X) does not vanish.
pub fn fixed_point_obstruction(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    starts: usize,
    seed: u64,
    tol: f64,
) -> Result<Option<FixedPointWitness>> {
    let space = &bundle.space;
    let pts = halton_points(&space.sample_bounds(), 1, starts, seed);
    let (_, curv) = curvature_fields(bundle, conn, section);
    for (k, el) in bundle.action.lie.iter().enumerate() {
        for z in find_zeros(space, &el.field, &pts)? {
            let mu = curv.moment[k].eval(&z)?;
            if mu.abs() > tol {
                return Ok(Some(FixedPointWitness {
                    lie: el.label.clone(),
                    field_norm: norm(&el.field.eval(&z)?),
                    point: z,
                    moment: mu,
                }));
            }
        }
    }
    Ok(None)
}
