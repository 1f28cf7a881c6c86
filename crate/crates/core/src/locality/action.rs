//! Projectable group actions on lattice fields.

use super::density::{LocalDensity, LocalFunctional, SiteDensity};
use super::lattice::LatticeBase;
use crate::dsl::{Env, Expr};
use crate::error::{Error, Result};
use crate::geometry::{GroupElement, LieElement, VectorField};

/// A discrete generator acting on fields.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldGenerator {
    /// s ↦ scale·s + χ(x).
    FiberAffine { scale: f64, chi: Expr },
    /// (T_k s)_i = s_{i−k}.
    Shift { sites: i64 },
}

/// A Lie generator acting on fields.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldLie {
    /// Flow s ↦ s + tχ.
    FiberTranslation { chi: Expr },
    /// Flow of the field −Ds, the infinitesimal translation of the base.
    Shift,
}

fn chi_values(lattice: &LatticeBase, chi: &Expr) -> Vec<f64> {
    lattice.sample(|x| chi.eval(&Env::jet(x, &[])))
}

impl FieldGenerator {
    pub fn to_group_element(&self, label: &str, lattice: LatticeBase, identity_component: bool) -> GroupElement {
        match self {
            FieldGenerator::FiberAffine { scale, chi } => {
                let c = chi_values(&lattice, chi);
                let c2 = c.clone();
                let a = *scale;
                GroupElement::new(
                    label,
                    move |s| s.iter().zip(&c).map(|(v, w)| a * v + w).collect(),
                    move |s| s.iter().zip(&c2).map(|(v, w)| (v - w) / a).collect(),
                    identity_component,
                )
            }
            FieldGenerator::Shift { sites } => {
                let k = *sites;
                GroupElement::new(
                    label,
                    move |s| lattice.shift(s, k),
                    move |s| lattice.shift(s, -k),
                    identity_component,
                )
            }
        }
    }
}

impl FieldLie {
    pub fn vector_field(&self, lattice: LatticeBase) -> VectorField {
        match self {
            FieldLie::FiberTranslation { chi } => VectorField::constant(chi_values(&lattice, chi)),
            FieldLie::Shift => VectorField::new(move |s| Ok(lattice.diff(s).into_iter().map(|v| -v).collect())),
        }
    }

    pub fn to_lie_element(&self, label: &str, lattice: LatticeBase) -> LieElement {
        let field = self.vector_field(lattice);
        match self {
            FieldLie::FiberTranslation { chi } => {
                let c = chi_values(&lattice, chi);
                LieElement::with_flow(label, field, move |t, s| {
                    Ok(s.iter().zip(&c).map(|(v, w)| v + t * w).collect())
                })
            }
            FieldLie::Shift => LieElement::from_field(label, field),
        }
    }

    /// L_XΛ as a density, by the chain rule on jets.
    ///
    /// Fiber translation: Σ_k ∂f/∂u_k · (D^kχ)(x). Shift: −Σ_k ∂f/∂u_k · u_{k+1}.
    pub fn lie_derivative_density(&self, functional: &LocalFunctional) -> SiteDensity {
        let lattice = functional.lattice;
        let r = functional.density.order();
        let partials: Vec<LocalDensity> = (0..=r).map(|k| functional.density.partial(k)).collect();
        match self {
            FieldLie::FiberTranslation { chi } => {
                let c = chi_values(&lattice, chi);
                let dchi: Vec<Vec<f64>> = (0..=r).map(|k| lattice.diff_pow(&c, k)).collect();
                SiteDensity::new(r, move |i, jet| {
                    let x = lattice.x(i);
                    partials.iter().enumerate().map(|(k, p)| p.eval(x, jet) * dchi[k][i]).sum()
                })
            }
            FieldLie::Shift => SiteDensity::new(r + 1, move |i, jet| {
                let x = lattice.x(i);
                -partials.iter().enumerate().map(|(k, p)| p.eval(x, jet) * jet[k + 1]).sum::<f64>()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalLieDerivative {
    /// d/dt Λ(φ_t s) at 0 by Richardson differences of the flow.
    pub by_flow: f64,
    /// ℑ of the chain-rule density.
    pub by_density: f64,
}

/// L_XΛ(s) two ways; disagreement beyond `tol` is a consistency error.
pub fn lie_derivative_local(
    functional: &LocalFunctional,
    lie: &FieldLie,
    s: &[f64],
    tol: f64,
) -> Result<LocalLieDerivative> {
    let x = lie.to_lie_element("X", functional.lattice);
    let h = 1e-3;
    let f = |t: f64| -> Result<f64> { functional.value(&x.flow(t, s)?) };
    let d1 = (f(h)? - f(-h)?) / (2.0 * h);
    let d2 = (f(h / 2.0)? - f(-h / 2.0)?) / h;
    let by_flow = (4.0 * d2 - d1) / 3.0;
    let by_density = lie.lie_derivative_density(functional).integrate(&functional.lattice, s)?;
    let scale = 1.0 + by_density.abs();
    if (by_flow - by_density).abs() > tol * scale {
        return Err(Error::Consistency(format!(
            "Lie derivative by flow ({by_flow:.9e}) and by density ({by_density:.9e}) disagree"
        )));
    }
    Ok(LocalLieDerivative { by_flow, by_density })
}
