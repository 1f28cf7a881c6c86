//! Curvature, moment maps, the Lie-algebra cocycle residual and descent.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{conventions, flow_derivative, Connection, EquivariantBundle, Section, FLOW_DT};
use crate::error::{Error, Result};
use crate::geometry::calculus::{
    exterior_derivative, exterior_derivative_2, gradient, lie_bracket, lie_derivative_1,
};
use crate::geometry::fields::dot;
use crate::geometry::{OneForm, ScalarField, TwoForm, VectorField};
use crate::linalg::{lstsq, max_abs};
use crate::probes::{probe_directions, rng};

/// Tolerance for the closedness checks run by [`connection_report`].
pub const CLOSEDNESS_TOL: f64 = 1e-4;

/// curv_G(Ξ)(X) = curv(Ξ) + μ(X).
#[derive(Debug, Clone)]
pub struct EquivariantCurvature {
    pub omega: TwoForm,
    pub moment: Vec<ScalarField>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ClosednessReport {
    /// max |dω| over probe triples (0 in dimension < 3).
    pub d_omega: f64,
    /// per Lie element, max |ι_X ω − dμ(X)|.
    pub contraction: Vec<f64>,
}

impl ClosednessReport {
    pub fn max(&self) -> f64 {
        self.contraction.iter().fold(self.d_omega, |m, v| m.max(*v))
    }
}

#[derive(Debug, Clone)]
pub struct ConnectionReport {
    pub rho_s: OneForm,
    pub curvature: EquivariantCurvature,
    pub closedness: ClosednessReport,
}

/// μ = −(i/2π) Ξ(X_U), with X_U obtained by differentiating the fiber action.
///
/// `sign` orients the fundamental fields: X_N = sign·field and
/// X_U = sign·d/dt φ_{t,U}. The house value is [`conventions::ANOMALY_SIGN`].
pub fn moment_by_fiber_action(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    lie: usize,
    sign: f64,
) -> ScalarField {
    let b = bundle.clone();
    let s = section.clone();
    let rho = conn.rho_in(&bundle.space, section);
    let field = bundle.action.lie[lie].field.clone();
    ScalarField::new(move |x| {
        let w = |t: f64| -> Result<Complex64> {
            let a = b.alpha_flow_in(&s, lie, t, x)?;
            Ok(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * a))
        };
        let h = FLOW_DT;
        let d1 = (w(h)? - w(-h)?) / (2.0 * h);
        let d2 = (w(h / 2.0)? - w(-h / 2.0)?) / h;
        let dw = (d2 * 4.0 - d1) / 3.0;
        let theta_xu = sign * dw / w(0.0)?;
        let xn: Vec<f64> = field.eval(x)?.into_iter().map(|v| sign * v).collect();
        let xi = theta_xu - Complex64::new(0.0, 2.0 * std::f64::consts::PI * rho.eval(x, &xn)?);
        let mu = -Complex64::i() / (2.0 * std::f64::consts::PI) * xi;
        Ok(mu.re)
    })
}

/// ω = dρ^S and μ(X) = −ρ^S(X_N) + 𝔞^S(X), without checks.
pub fn curvature_fields(bundle: &EquivariantBundle, conn: &Connection, section: &Section) -> (OneForm, EquivariantCurvature) {
    let rho_s = conn.rho_in(&bundle.space, section);
    let omega = exterior_derivative(&bundle.space, &rho_s);
    let moment = (0..bundle.action.lie.len())
        .map(|i| {
            let a = bundle.anomaly_flow(section, i);
            a.sub(&rho_s.contract(&bundle.action.lie[i].field))
        })
        .collect();
    (rho_s, EquivariantCurvature { omega, moment })
}

/// dω = 0 and ι_Xω = dμ(X) on probes.
pub fn closedness(bundle: &EquivariantBundle, curv: &EquivariantCurvature, probes: &[Vec<f64>]) -> Result<ClosednessReport> {
    let dim = bundle.dimension();
    let mut r = rng(17);
    let mut d_omega: f64 = 0.0;
    if dim >= 3 {
        for p in probes {
            let dirs = probe_directions(dim, 6, &mut r);
            for i in 0..dirs.len() {
                for j in i + 1..dirs.len() {
                    for k in j + 1..dirs.len() {
                        let v = exterior_derivative_2(&bundle.space, &curv.omega, p, &dirs[i], &dirs[j], &dirs[k])?;
                        d_omega = d_omega.max(v.abs());
                    }
                }
            }
        }
    }
    let mut contraction = Vec::new();
    for (i, mu) in curv.moment.iter().enumerate() {
        let ix = curv.omega.contract(&bundle.action.lie[i].field);
        let dmu = gradient(&bundle.space, mu);
        let mut worst: f64 = 0.0;
        for p in probes {
            let (a, b) = (ix.covector(p)?, dmu.covector(p)?);
            for (u, v) in a.iter().zip(&b) {
                worst = worst.max((u - v).abs());
            }
        }
        contraction.push(worst);
    }
    Ok(ClosednessReport {
        d_omega,
        contraction,
    })
}

/// ρ^S, curv, μ and the closedness checks; inconsistent data is an error.
pub fn connection_report(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    probes: &[Vec<f64>],
) -> Result<ConnectionReport> {
    let (rho_s, curvature) = curvature_fields(bundle, conn, section);
    let closedness = closedness(bundle, &curvature, probes)?;
    if closedness.max() > CLOSEDNESS_TOL {
        return Err(Error::Consistency(format!(
            "equivariant curvature is not closed: residual {:.3e}",
            closedness.max()
        )));
    }
    Ok(ConnectionReport {
        rho_s,
        curvature,
        closedness,
    })
}

/// Coefficients c with [X_i, X_j] = Σ c_k X_k (vector-field bracket), and the fit residual.
pub fn lie_bracket_coefficients(
    bundle: &EquivariantBundle,
    i: usize,
    j: usize,
    probes: &[Vec<f64>],
) -> Result<(Vec<f64>, f64)> {
    let lie = &bundle.action.lie;
    let br = lie_bracket(&bundle.space, &lie[i].field, &lie[j].field);
    let dim = bundle.dimension();
    let rows = probes.len() * dim;
    let mut a = DMatrix::zeros(rows, lie.len());
    let mut b = DVector::zeros(rows);
    for (pi, p) in probes.iter().enumerate() {
        let v = br.eval(p)?;
        for (k, x) in lie.iter().enumerate() {
            let f = x.field.eval(p)?;
            for d in 0..dim {
                a[(pi * dim + d, k)] = f[d];
            }
        }
        for d in 0..dim {
            b[pi * dim + d] = v[d];
        }
    }
    let sol = lstsq(&a, &b);
    Ok((sol.x.iter().copied().collect(), max_abs(&sol.residual)))
}

/// ∂𝔞(X,Y) = X_N(𝔞(Y)) − Y_N(𝔞(X)) − 𝔞([X,Y]).
///
/// The bracket is expressed in the Lie basis by a least-squares fit on
/// `probes`; a basis that does not close is a consistency error.
pub fn lie_cocycle_residual(
    bundle: &EquivariantBundle,
    section: &Section,
    i: usize,
    j: usize,
    probes: &[Vec<f64>],
) -> Result<ScalarField> {
    let (coeffs, fit) = lie_bracket_coefficients(bundle, i, j, probes)?;
    if fit > 1e-6 {
        return Err(Error::Consistency(format!(
            "the Lie basis does not close under the bracket (residual {fit:.3e})"
        )));
    }
    let ai = bundle.anomaly_flow(section, i);
    let aj = bundle.anomaly_flow(section, j);
    let x_aj = bundle.lie_derivative(i, &aj);
    let y_ai = bundle.lie_derivative(j, &ai);
    let bracket_terms: Vec<(f64, ScalarField)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > 1e-9)
        .map(|(k, c)| (*c, bundle.anomaly_flow(section, k)))
        .collect();
    let a_br = ScalarField::linear_combination(&bracket_terms);
    Ok(x_aj.sub(&y_ai).sub(&a_br))
}

/// L_X ρ^S + ε d(𝔞^S(X)) with the house sign ε = [`conventions::DESCENT_SIGN`].
pub fn descent_residual(bundle: &EquivariantBundle, conn: &Connection, section: &Section, lie: usize) -> OneForm {
    descent_residual_with_sign(bundle, conn, section, lie, conventions::DESCENT_SIGN)
}

pub(crate) fn descent_residual_with_sign(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    lie: usize,
    sign: f64,
) -> OneForm {
    let rho_s = conn.rho_in(&bundle.space, section);
    let field: &VectorField = &bundle.action.lie[lie].field;
    let lx = lie_derivative_1(&bundle.space, field, &rho_s);
    let da = gradient(&bundle.space, &bundle.anomaly_flow(section, lie));
    lx.add(&da.scale(sign))
}

/// max over probes of |ι_X β|, used by primitive and k-map preconditions.
pub fn max_contraction(beta: &OneForm, field: &VectorField, probes: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in probes {
        worst = worst.max(dot(&beta.covector(p)?, &field.eval(p)?).abs());
    }
    Ok(worst)
}

/// max over probes and directions of |f(p)(v)| for a 1-form-valued residual.
pub fn max_form(form: &OneForm, probes: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in probes {
        for v in form.covector(p)? {
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// The flow-derivative anomaly evaluated at one point (for witnesses).
pub fn anomaly_at(bundle: &EquivariantBundle, section: &Section, lie: usize, x: &[f64]) -> Result<f64> {
    flow_derivative(|t| bundle.alpha_flow_in(section, lie, t, x), x)
}
