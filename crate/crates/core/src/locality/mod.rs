//! Lattice realization of field space: Γ(E) ≅ ℝ^m for E = M × ℝ with M a
//! lattice circle, jet coordinates by periodic central differences, the
//! integration map ℑ, and local versions of the certificate searches.

mod action;
mod density;
mod lattice;
mod search;

pub use action::{lie_derivative_local, FieldGenerator, FieldLie, LocalLieDerivative};
pub use density::{integrate_local, LocalDensity, LocalFunctional, LocalOneForm, SiteDensity};
pub use lattice::LatticeBase;
pub use search::{
    local_connection_check, local_global_search, local_section_search_lie, verdict_local,
    LocalConnectionReport, LOCAL_MATCH_TOL,
};

use crate::bundle::{Cocycle, Connection, EquivariantBundle, FlowCocycle};
use crate::dsl::{Expr, Var};
use crate::error::Result;
use crate::geometry::{GroupAction, ParameterSpace, Word};
use crate::probes::{rng, ProbeSet};

/// Fourier modes used for probe fields.
pub const PROBE_MODES: usize = 3;

#[derive(Debug, Clone)]
pub struct FieldGeneratorSpec {
    pub label: String,
    pub generator: FieldGenerator,
    pub identity_component: bool,
    /// α_g(s) = ℑ[cocycle](s).
    pub cocycle: LocalDensity,
}

#[derive(Debug, Clone)]
pub struct FieldLieSpec {
    pub label: String,
    pub lie: FieldLie,
    /// α_{φ_t}(s) = ℑ[potential](φ_t s) − ℑ[potential](s).
    pub potential: LocalDensity,
}

/// A field-space bundle described by local data.
#[derive(Debug, Clone)]
pub struct FieldModel {
    pub lattice: LatticeBase,
    pub jet_order: usize,
    pub generators: Vec<FieldGeneratorSpec>,
    pub relations: Vec<Word>,
    pub lie: Vec<FieldLieSpec>,
    pub rho: LocalOneForm,
    pub density_ansatz: Vec<LocalDensity>,
    pub oneform_ansatz: Vec<LocalOneForm>,
    /// Whether the ansatz lists were generated (and may be pruned).
    pub default_density_ansatz: bool,
    pub default_oneform_ansatz: bool,
}

impl FieldModel {
    /// ℝ^m with probe box [−2, 2]^m.
    pub fn space(&self) -> ParameterSpace {
        ParameterSpace::euclidean(self.lattice.sites(), 2.0)
    }

    pub fn action(&self) -> GroupAction {
        GroupAction {
            generators: self
                .generators
                .iter()
                .map(|g| g.generator.to_group_element(&g.label, self.lattice, g.identity_component))
                .collect(),
            relations: self.relations.clone(),
            lie: self.lie.iter().map(|x| x.lie.to_lie_element(&x.label, self.lattice)).collect(),
        }
    }

    pub fn cocycle(&self) -> Cocycle {
        let generators = self
            .generators
            .iter()
            .map(|g| LocalFunctional::new(self.lattice, g.cocycle.clone()).to_scalar_field())
            .collect();
        let action = self.action();
        let lie = self
            .lie
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = LocalFunctional::new(self.lattice, x.potential.clone());
                let el = action.lie[i].clone();
                FlowCocycle::new(move |t, s| Ok(f.value(&el.flow(t, s)?)? - f.value(s)?))
            })
            .collect();
        Cocycle { generators, lie }
    }

    pub fn bundle(&self) -> Result<EquivariantBundle> {
        EquivariantBundle::new(self.space(), self.action(), self.cocycle())
    }

    pub fn bundle_unchecked(&self) -> Result<EquivariantBundle> {
        EquivariantBundle::new_unchecked(self.space(), self.action(), self.cocycle())
    }

    pub fn connection(&self) -> Connection {
        Connection::new(self.rho.to_one_form())
    }

    /// Smooth seeded probe fields, disjoint streams for fit and held-out.
    pub fn probe_set(&self, n_fit: usize, n_holdout: usize, seed: u64) -> ProbeSet {
        let mut r = rng(seed ^ 0x5eed_f1e1d);
        let fit = (0..n_fit).map(|_| self.lattice.random_field(PROBE_MODES, &mut r)).collect();
        let holdout = (0..n_holdout).map(|_| self.lattice.random_field(PROBE_MODES, &mut r)).collect();
        ProbeSet { fit, holdout }
    }
}

fn jet_symbol(k: usize) -> Expr {
    Expr::var(Var::Jet(k))
}

/// Monomials in u, u1, …, u_order of total degree 1..=degree.
pub fn default_density_ansatz(order: usize, degree: usize) -> Vec<LocalDensity> {
    let vars = order + 1;
    let mut out = Vec::new();
    for d in 1..=degree {
        for exps in crate::solvers::multi_indices(vars, d) {
            let mut e: Option<Expr> = None;
            for (k, p) in exps.iter().enumerate() {
                if *p == 0 {
                    continue;
                }
                let f = if *p == 1 { jet_symbol(k) } else { Expr::Pow(Box::new(jet_symbol(k)), *p as u32) };
                e = Some(match e {
                    None => f,
                    Some(g) => Expr::mul(g, f),
                });
            }
            out.push(LocalDensity::new(e.unwrap()));
        }
    }
    out
}

/// Coefficients {1, u, u1, …, u_order} on each variation jet δu_k.
pub fn default_oneform_ansatz(lattice: LatticeBase, order: usize) -> Vec<LocalOneForm> {
    let mut scalars = vec![Expr::num(1.0)];
    scalars.extend((0..=order).map(jet_symbol));
    let mut out = Vec::new();
    for k in 0..=order {
        for s in &scalars {
            let mut coeffs = vec![LocalDensity::constant(0.0); k + 1];
            coeffs[k] = LocalDensity::new(s.clone());
            out.push(LocalOneForm::new(lattice, coeffs));
        }
    }
    out
}

#[cfg(test)]
mod tests;
