//! House sign conventions and the calibration that fixes them.
//!
//! Two signs are ambiguous in the source conventions: the orientation of
//! fundamental vector fields relative to flows (which enters the moment
//! formula for the anomaly) and the relative sign in the descent equation
//! L_Xρ^S ± d𝔞^S(X) = 0. Both are fixed once by [`calibrate`], run on a
//! rotation bundle with a non-reference section, and frozen in the
//! constants below. `docs/conventions.md` records the outcome.

use serde::Serialize;

use super::curvature::{descent_residual_with_sign, max_form, moment_by_fiber_action};
use super::{Connection, EquivariantBundle, Section};
use crate::error::{Error, Result};

/// X_N = +d/dt φ_t and X_U = +d/dt φ_{t,U}.
pub const ANOMALY_SIGN: f64 = 1.0;

/// Descent residual L_Xρ^S + DESCENT_SIGN·d𝔞^S(X).
pub const DESCENT_SIGN: f64 = -1.0;

/// Agreement tolerance required of the winning sign.
pub const CALIBRATION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Calibration {
    pub anomaly_sign: f64,
    /// max |flow-derivative − moment-formula| for ε = +1 and ε = −1.
    pub anomaly_residuals: [f64; 2],
    pub descent_sign: f64,
    /// max |L_Xρ^S + ε d𝔞^S(X)| for ε = +1 and ε = −1.
    pub descent_residuals: [f64; 2],
}

impl Calibration {
    /// True when the calibrated signs equal the frozen constants.
    pub fn matches_constants(&self) -> bool {
        self.anomaly_sign == ANOMALY_SIGN && self.descent_sign == DESCENT_SIGN
    }
}

fn pick(res: [f64; 2], what: &str) -> Result<f64> {
    let (best, other) = if res[0] <= res[1] { (1.0, res[1]) } else { (-1.0, res[0]) };
    let r = res[0].min(res[1]);
    if r > CALIBRATION_TOL || other <= CALIBRATION_TOL {
        return Err(Error::Consistency(format!(
            "{what} calibration is not decisive: residuals {:.3e} (+1), {:.3e} (−1)",
            res[0], res[1]
        )));
    }
    Ok(best)
}

/// Compares both candidate signs on the first Lie element of `bundle`.
///
/// The scenario must have a nonzero anomaly and a connection whose
/// descent terms do not vanish separately, otherwise neither sign wins.
pub fn calibrate(
    bundle: &EquivariantBundle,
    conn: &Connection,
    section: &Section,
    probes: &[Vec<f64>],
) -> Result<Calibration> {
    if bundle.action.lie.is_empty() {
        return Err(Error::Precondition("calibration needs a Lie element".into()));
    }
    let flow = bundle.anomaly_flow(section, 0);
    let rho_x = conn.rho_in(&bundle.space, section).contract(&bundle.action.lie[0].field);
    let mut anomaly_residuals = [0.0; 2];
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let mu = moment_by_fiber_action(bundle, conn, section, 0, sign);
        let formula = mu.add(&rho_x.scale(sign));
        let mut worst: f64 = 0.0;
        for p in probes {
            worst = worst.max((flow.eval(p)? - formula.eval(p)?).abs());
        }
        anomaly_residuals[k] = worst;
    }
    let mut descent_residuals = [0.0; 2];
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let r = descent_residual_with_sign(bundle, conn, section, 0, sign);
        descent_residuals[k] = max_form(&r, probes)?;
    }
    Ok(Calibration {
        anomaly_sign: pick(anomaly_residuals, "anomaly")?,
        anomaly_residuals,
        descent_sign: pick(descent_residuals, "descent")?,
        descent_residuals,
    })
}
