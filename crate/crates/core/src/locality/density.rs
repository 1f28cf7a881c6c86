//! Jet densities, the integration map ℑ, local functionals and local forms.
//!
//! A density only ever sees one site's jet, so everything built from it is
//! local by construction.

use std::fmt;
use std::sync::Arc;

use super::lattice::LatticeBase;
use crate::dsl::{Env, Expr, Var};
use crate::error::{Error, Result};
use crate::geometry::{OneForm, ScalarField, TwoForm};

/// A function of (x, u, u1, …, u_r) at a single site.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDensity {
    pub expr: Expr,
}

impl LocalDensity {
    pub fn new(expr: Expr) -> Self {
        LocalDensity { expr }
    }

    pub fn constant(c: f64) -> Self {
        LocalDensity::new(Expr::num(c))
    }

    /// Highest jet order the density reads (0 when it reads only u or nothing).
    pub fn order(&self) -> usize {
        self.expr.max_jet_order().unwrap_or(0)
    }

    pub fn eval(&self, x: f64, jet: &[f64]) -> f64 {
        self.expr.eval(&Env::jet(x, jet))
    }

    /// ∂f/∂u_k.
    pub fn partial(&self, k: usize) -> LocalDensity {
        LocalDensity::new(self.expr.derivative(Var::Jet(k)))
    }
}

impl fmt::Display for LocalDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

fn site_error(s: &[f64], site: usize, v: f64) -> Error {
    Error::Evaluation {
        point: s.to_vec(),
        message: format!("density is {v} at site {site}"),
    }
}

fn check_len(lattice: &LatticeBase, s: &[f64]) -> Result<()> {
    if s.len() != lattice.sites() {
        return Err(Error::InvalidInput(format!(
            "field has {} values for {} sites",
            s.len(),
            lattice.sites()
        )));
    }
    Ok(())
}

/// ℑ[f](s) = Σ_i f(j_i s)·h.
pub fn integrate_local(lattice: &LatticeBase, density: &LocalDensity, s: &[f64]) -> Result<f64> {
    check_len(lattice, s)?;
    let jets = lattice.jets(s, density.order());
    let mut acc = 0.0;
    for (i, j) in jets.iter().enumerate() {
        let v = density.eval(lattice.x(i), j);
        if !v.is_finite() {
            return Err(site_error(s, i, v));
        }
        acc += v;
    }
    Ok(acc * lattice.spacing())
}

/// Site-wise values of a density.
fn site_values(lattice: &LatticeBase, density: &LocalDensity, jets: &[Vec<f64>], s: &[f64]) -> Result<Vec<f64>> {
    jets.iter()
        .enumerate()
        .map(|(i, j)| {
            let v = density.eval(lattice.x(i), j);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(site_error(s, i, v))
            }
        })
        .collect()
}

/// h Σ_k (−D)^k c_k, the covector of a form with coefficient densities c_k.
fn covector_of(lattice: &LatticeBase, coeffs: &[LocalDensity], s: &[f64]) -> Result<Vec<f64>> {
    check_len(lattice, s)?;
    let order = coeffs.iter().map(|c| c.order()).max().unwrap_or(0);
    let jets = lattice.jets(s, order);
    let h = lattice.spacing();
    let mut out = vec![0.0; lattice.sites()];
    for (k, c) in coeffs.iter().enumerate() {
        if c.expr.is_zero() {
            continue;
        }
        let vals = site_values(lattice, c, &jets, s)?;
        for (o, v) in out.iter_mut().zip(lattice.adjoint_pow(&vals, k)) {
            *o += h * v;
        }
    }
    Ok(out)
}

/// Λ(s) = ℑ[f](s).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFunctional {
    pub lattice: LatticeBase,
    pub density: LocalDensity,
}

impl LocalFunctional {
    pub fn new(lattice: LatticeBase, density: LocalDensity) -> Self {
        LocalFunctional { lattice, density }
    }

    pub fn value(&self, s: &[f64]) -> Result<f64> {
        integrate_local(&self.lattice, &self.density, s)
    }

    /// dΛ as a local 1-form with coefficient densities ∂f/∂u_k.
    pub fn differential(&self) -> LocalOneForm {
        let coeffs = (0..=self.density.order()).map(|k| self.density.partial(k)).collect();
        LocalOneForm::new(self.lattice, coeffs)
    }

    /// The functional as a field-space 0-form carrying its exact differential.
    pub fn to_scalar_field(&self) -> ScalarField {
        let me = self.clone();
        ScalarField::new(move |s| me.value(s)).with_gradient(self.differential().to_one_form())
    }
}

/// β(s)(δs) = Σ_i Σ_k c_k(j_i s)·(D^k δs)_i·h.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOneForm {
    pub lattice: LatticeBase,
    pub coeffs: Vec<LocalDensity>,
}

impl LocalOneForm {
    pub fn new(lattice: LatticeBase, coeffs: Vec<LocalDensity>) -> Self {
        LocalOneForm { lattice, coeffs }
    }

    pub fn zero(lattice: LatticeBase) -> Self {
        LocalOneForm::new(lattice, vec![LocalDensity::constant(0.0)])
    }

    pub fn covector(&self, s: &[f64]) -> Result<Vec<f64>> {
        covector_of(&self.lattice, &self.coeffs, s)
    }

    /// Site-by-site evaluation from the variation's jets.
    pub fn eval(&self, s: &[f64], v: &[f64]) -> Result<f64> {
        check_len(&self.lattice, s)?;
        let order = self.coeffs.iter().map(|c| c.order()).max().unwrap_or(0);
        let jets = self.lattice.jets(s, order);
        let vj = self.lattice.jets(v, self.coeffs.len().saturating_sub(1));
        let mut acc = 0.0;
        for (i, (j, w)) in jets.iter().zip(&vj).enumerate() {
            for (k, c) in self.coeffs.iter().enumerate() {
                acc += c.eval(self.lattice.x(i), j) * w[k];
            }
        }
        Ok(acc * self.lattice.spacing())
    }

    pub fn to_one_form(&self) -> OneForm {
        let me = self.clone();
        OneForm::new(move |s| me.covector(s))
    }

    /// dβ from the symbolic jet derivatives of the coefficients:
    /// dβ(u,v) = h Σ_i Σ_{k,l} ∂c_k/∂u_l · ((D^l u)(D^k v) − (D^l v)(D^k u))_i.
    pub fn exterior_derivative(&self) -> TwoForm {
        let lattice = self.lattice;
        let order = self.coeffs.iter().map(|c| c.order()).max().unwrap_or(0);
        let partials: Vec<Vec<LocalDensity>> = self
            .coeffs
            .iter()
            .map(|c| (0..=order).map(|l| c.partial(l)).collect())
            .collect();
        let top = order.max(self.coeffs.len().saturating_sub(1));
        TwoForm::new(move |s, u, v| {
            let js = lattice.jets(s, order);
            let ju = lattice.jets(u, top);
            let jv = lattice.jets(v, top);
            let mut acc = 0.0;
            for i in 0..lattice.sites() {
                let x = lattice.x(i);
                for (k, row) in partials.iter().enumerate() {
                    for (l, p) in row.iter().enumerate() {
                        if p.expr.is_zero() {
                            continue;
                        }
                        let w = p.eval(x, &js[i]);
                        acc += w * (ju[i][l] * jv[i][k] - jv[i][l] * ju[i][k]);
                    }
                }
            }
            Ok(acc * lattice.spacing())
        })
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.expr.is_zero())
            .map(|(k, c)| {
                let d = if k == 0 { "du".to_string() } else { format!("du{k}") };
                format!("({c})*{d}")
            })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// A derived density that may depend on x through lattice differences of
/// a fixed function; still a function of one site's jet.
#[derive(Clone)]
pub struct SiteDensity {
    pub order: usize,
    f: Arc<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for SiteDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SiteDensity(order {})", self.order)
    }
}

impl SiteDensity {
    pub fn new(order: usize, f: impl Fn(usize, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        SiteDensity { order, f: Arc::new(f) }
    }

    pub fn integrate(&self, lattice: &LatticeBase, s: &[f64]) -> Result<f64> {
        check_len(lattice, s)?;
        let jets = lattice.jets(s, self.order);
        let mut acc = 0.0;
        for (i, j) in jets.iter().enumerate() {
            let v = (self.f)(i, j);
            if !v.is_finite() {
                return Err(site_error(s, i, v));
            }
            acc += v;
        }
        Ok(acc * lattice.spacing())
    }
}
