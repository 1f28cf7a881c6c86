//! Equivariant U(1)-bundles stored in a reference trivialization.
//!
//! A bundle is a parameter space, a group action and a cocycle α given by
//! real lifts on generators (and on the flows of Lie elements). Values on
//! words follow from the cocycle law α_{φ′φ}(x) = α_φ(x) + α_{φ′}(φx).

pub mod conventions;
mod curvature;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::calculus::{gradient, lie_derivative_scalar};
use crate::geometry::circle::wrap_half;
use crate::geometry::{CircleValue, GroupAction, OneForm, ParameterSpace, ScalarField, Word};
use crate::probes::{halton_points, rng, ProbeSet};

pub use curvature::{
    anomaly_at, closedness, connection_report, curvature_fields, descent_residual,
    lie_bracket_coefficients, lie_cocycle_residual, max_contraction, max_form,
    moment_by_fiber_action, ClosednessReport, ConnectionReport, EquivariantCurvature,
    CLOSEDNESS_TOL,
};

/// Time step of the flow derivative; Richardson uses `FLOW_DT` and `FLOW_DT/2`.
pub const FLOW_DT: f64 = 1e-4;

/// Tolerance for construction-time checks.
pub const CONSTRUCTION_TOL: f64 = 1e-8;

/// Number of probe points used by construction-time checks.
pub const CONSTRUCTION_PROBES: usize = 32;

type FlowCocycleFn = dyn Fn(f64, &[f64]) -> Result<f64> + Send + Sync;

/// Real lift of t ↦ α_{exp(tX)}(x).
#[derive(Clone)]
pub struct FlowCocycle(Arc<FlowCocycleFn>);

impl fmt::Debug for FlowCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FlowCocycle")
    }
}

impl FlowCocycle {
    pub fn new(f: impl Fn(f64, &[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        FlowCocycle(Arc::new(f))
    }

    pub fn zero() -> Self {
        FlowCocycle::new(|_, _| Ok(0.0))
    }

    pub fn eval(&self, t: f64, p: &[f64]) -> Result<f64> {
        (self.0)(t, p)
    }
}

/// Real lifts of α on generators and on Lie flows.
#[derive(Debug, Clone)]
pub struct Cocycle {
    pub generators: Vec<ScalarField>,
    pub lie: Vec<FlowCocycle>,
}

/// S = S₀·exp(2πiΛ).
#[derive(Debug, Clone)]
pub struct Section {
    pub label: String,
    pub lambda: ScalarField,
    pub is_reference: bool,
}

impl Section {
    pub fn reference() -> Self {
        Section {
            label: "reference".into(),
            lambda: ScalarField::zero(),
            is_reference: true,
        }
    }

    pub fn new(label: impl Into<String>, lambda: ScalarField) -> Self {
        Section {
            label: label.into(),
            lambda,
            is_reference: false,
        }
    }

    /// S·exp(2πiθ).
    pub fn shifted(&self, label: impl Into<String>, theta: &ScalarField) -> Section {
        Section::new(label, self.lambda.add(theta))
    }
}

/// ρ relative to the reference section: Ξ = ϑ − 2πi ρ.
#[derive(Debug, Clone)]
pub struct Connection {
    pub rho_ref: OneForm,
}

impl Connection {
    pub fn new(rho_ref: OneForm) -> Self {
        Connection { rho_ref }
    }

    pub fn flat_trivial() -> Self {
        Connection::new(OneForm::zero())
    }

    /// ρ^S = ρ_ref − dΛ.
    pub fn rho_in(&self, space: &ParameterSpace, section: &Section) -> OneForm {
        if section.is_reference {
            return self.rho_ref.clone();
        }
        self.rho_ref.sub(&gradient(space, &section.lambda))
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CocycleWitness {
    pub check: String,
    pub word: String,
    pub point: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CocycleReport {
    pub max_residual: f64,
    pub checks: usize,
    pub witness: Option<CocycleWitness>,
}

impl CocycleReport {
    fn record(&mut self, check: &str, word: String, point: &[f64], residual: f64) {
        self.checks += 1;
        let r = if residual.is_nan() { f64::INFINITY } else { residual };
        if r > self.max_residual {
            self.max_residual = r;
            self.witness = Some(CocycleWitness {
                check: check.into(),
                word,
                point: point.to_vec(),
                residual: r,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyMethod {
    FlowDerivative,
    MomentFormula,
}

#[derive(Debug, Clone)]
pub struct EquivariantBundle {
    pub space: ParameterSpace,
    pub action: GroupAction,
    pub cocycle: Cocycle,
}

/// Richardson-extrapolated derivative at 0 of a real lift f, with unwrap checks.
pub fn flow_derivative<F>(f: F, point: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let f0 = f(0.0)?;
    let step = |t: f64| -> Result<f64> {
        let d = wrap_half(f(t)? - f0);
        if d.abs() >= crate::geometry::calculus::UNWRAP_LIMIT {
            return Err(Error::Resolution {
                point: point.to_vec(),
                message: format!("cocycle jumps by {:.3} within one flow step", d.abs()),
            });
        }
        Ok(d)
    };
    let h = FLOW_DT;
    let d1 = (step(h)? - step(-h)?) / (2.0 * h);
    let d2 = (step(h / 2.0)? - step(-h / 2.0)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

impl EquivariantBundle {
    /// Validates inverses, relations, flows and the cocycle law on probes.
    pub fn new(space: ParameterSpace, action: GroupAction, cocycle: Cocycle) -> Result<Self> {
        let b = EquivariantBundle::new_unchecked(space, action, cocycle)?;
        let probes = halton_points(&b.space.sample_bounds(), 1, CONSTRUCTION_PROBES, 0);
        for g in &b.action.generators {
            let r = g.inverse_residual(&b.space, &probes);
            if r > CONSTRUCTION_TOL {
                return Err(Error::InvalidInput(format!(
                    "generator `{}`: inverse does not invert forward map (residual {r:.3e})",
                    g.label
                )));
            }
        }
        let r = b.action.relation_residual(&b.space, &probes);
        if r > CONSTRUCTION_TOL {
            return Err(Error::InvalidInput(format!(
                "group relations fail on probe points (residual {r:.3e})"
            )));
        }
        for x in &b.action.lie {
            let (d, i) = x.flow_residual(&probes, FLOW_DT)?;
            if d > 1e-6 || i > CONSTRUCTION_TOL {
                return Err(Error::InvalidInput(format!(
                    "Lie element `{}`: flow does not integrate its field (residual {:.3e})",
                    x.label,
                    d.max(i)
                )));
            }
        }
        let report = b.check_cocycle(2, CONSTRUCTION_PROBES, 0)?;
        if report.max_residual > CONSTRUCTION_TOL {
            let w = report.witness.unwrap();
            return Err(Error::CocycleViolation {
                residual: w.residual,
                point: w.point,
                detail: format!("{} on {}", w.check, w.word),
            });
        }
        Ok(b)
    }

    /// Structural checks only (counts); used to inspect corrupted data.
    pub fn new_unchecked(space: ParameterSpace, action: GroupAction, cocycle: Cocycle) -> Result<Self> {
        if cocycle.generators.len() != action.generators.len() {
            return Err(Error::InvalidInput(format!(
                "{} generators but {} cocycle entries",
                action.generators.len(),
                cocycle.generators.len()
            )));
        }
        if cocycle.lie.len() != action.lie.len() {
            return Err(Error::InvalidInput(format!(
                "{} Lie elements but {} flow cocycles",
                action.lie.len(),
                cocycle.lie.len()
            )));
        }
        Ok(EquivariantBundle {
            space,
            action,
            cocycle,
        })
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    /// Real lift of α_φ(x) in the reference trivialization.
    pub fn alpha_lift(&self, word: &Word, x: &[f64]) -> Result<f64> {
        let mut y = x.to_vec();
        let mut acc = 0.0;
        for (g, s) in word.steps() {
            if s > 0 {
                acc += self.cocycle.generators[g].eval(&y)?;
                y = self.action.generators[g].apply(&y);
            } else {
                let z = self.action.generators[g].apply_inverse(&y);
                acc -= self.cocycle.generators[g].eval(&z)?;
                y = z;
            }
        }
        Ok(acc)
    }

    /// α^S_φ(x) = α_φ(x) + Λ(x) − Λ(φx), as a real lift.
    pub fn alpha_lift_in(&self, section: &Section, word: &Word, x: &[f64]) -> Result<f64> {
        let a = self.alpha_lift(word, x)?;
        if section.is_reference {
            return Ok(a);
        }
        let l = &section.lambda;
        Ok(a + l.eval(x)? - l.eval(&self.action.apply(word, x))?)
    }

    pub fn alpha(&self, section: &Section, word: &Word, x: &[f64]) -> Result<CircleValue> {
        Ok(CircleValue::new(self.alpha_lift_in(section, word, x)?))
    }

    /// α^S_{exp(tX)}(x) as a real lift.
    pub fn alpha_flow_in(&self, section: &Section, lie: usize, t: f64, x: &[f64]) -> Result<f64> {
        let a = self.cocycle.lie[lie].eval(t, x)?;
        if section.is_reference {
            return Ok(a);
        }
        let l = &section.lambda;
        let y = self.action.lie[lie].flow(t, x)?;
        Ok(a + l.eval(x)? - l.eval(&y)?)
    }

    /// The circle-valued field x ↦ α^S_φ(x).
    pub fn section_cocycle(&self, section: &Section, word: &Word) -> impl Fn(&[f64]) -> Result<CircleValue> + Send + Sync + 'static {
        let (b, s, w) = (self.clone(), section.clone(), word.clone());
        move |x| b.alpha(&s, &w, x)
    }

    /// 𝔞^S(X) by Richardson differentiation of t ↦ α^S_{exp(tX)}.
    pub fn anomaly_flow(&self, section: &Section, lie: usize) -> ScalarField {
        let (b, s) = (self.clone(), section.clone());
        ScalarField::new(move |x| flow_derivative(|t| b.alpha_flow_in(&s, lie, t, x), x))
    }

    pub fn infinitesimal_anomaly(
        &self,
        section: &Section,
        lie: usize,
        method: AnomalyMethod,
        connection: Option<&Connection>,
    ) -> Result<ScalarField> {
        if lie >= self.action.lie.len() {
            return Err(Error::InvalidInput(format!(
                "no Lie element with index {lie}; the group has {} (a discrete group has none)",
                self.action.lie.len()
            )));
        }
        match method {
            AnomalyMethod::FlowDerivative => Ok(self.anomaly_flow(section, lie)),
            AnomalyMethod::MomentFormula => {
                let conn = connection.ok_or_else(|| {
                    Error::Precondition("the moment formula needs a connection".into())
                })?;
                let mu = moment_by_fiber_action(self, conn, section, lie, conventions::ANOMALY_SIGN);
                let rho_x = conn
                    .rho_in(&self.space, section)
                    .contract(&self.action.lie[lie].field);
                Ok(mu.add(&rho_x))
            }
        }
    }

    /// Residual of the cocycle law and its consequences on probe points.
    ///
    /// Checks: relations and their conjugates by words up to `word_length`
    /// (α must vanish), the one-parameter law of every flow cocycle, and the
    /// pairwise law α_{φ′φ}(x) = α_φ(x) + α_{φ′}(φx) on reduced products.
    pub fn check_cocycle(&self, word_length: usize, probes: usize, seed: u64) -> Result<CocycleReport> {
        if word_length < 2 {
            return Err(Error::InvalidInput("word_length must be at least 2".into()));
        }
        let pts = ProbeSet::new(&self.space, probes, 0, seed).fit;
        let reference = Section::reference();
        let mut rep = CocycleReport {
            max_residual: 0.0,
            checks: 0,
            witness: None,
        };
        let conj_words: Vec<Word> = std::iter::once(Word::identity())
            .chain(self.action.words_up_to(word_length.saturating_sub(1).min(2)))
            .collect();
        for r in &self.action.relations {
            for w in &conj_words {
                let c = w.mul(r).mul(&w.inverse());
                for p in &pts {
                    let v = self.alpha(&reference, &c, p)?;
                    rep.record("relation", self.action.display_word(&c), p, v.distance(CircleValue::ZERO));
                }
            }
        }
        let mut r = rng(seed);
        for (i, x) in self.action.lie.iter().enumerate() {
            for p in &pts {
                let s = rand::Rng::random_range(&mut r, -1.0..1.0);
                let t = rand::Rng::random_range(&mut r, -1.0..1.0);
                let lhs = self.cocycle.lie[i].eval(s + t, p)?;
                let rhs = self.cocycle.lie[i].eval(t, p)? + self.cocycle.lie[i].eval(s, &x.flow(t, p)?)?;
                let zero = self.cocycle.lie[i].eval(0.0, p)?;
                let res = CircleValue::new(lhs - rhs)
                    .distance(CircleValue::ZERO)
                    .max(CircleValue::new(zero).distance(CircleValue::ZERO));
                rep.record("one-parameter", format!("exp(t {})", x.label), p, res);
            }
        }
        let words = self.action.words_up_to(word_length / 2);
        let pair_probes = &pts[..pts.len().min(8)];
        for a in &words {
            for b in &words {
                let ab = a.mul(b);
                for p in pair_probes {
                    let lhs = self.alpha_lift(&ab, p)?;
                    let rhs = self.alpha_lift(b, p)? + self.alpha_lift(a, &self.action.apply(b, p))?;
                    let res = CircleValue::new(lhs - rhs).distance(CircleValue::ZERO);
                    rep.record(
                        "product",
                        format!("({})({})", self.action.display_word(a), self.action.display_word(b)),
                        p,
                        res,
                    );
                }
            }
        }
        Ok(rep)
    }

    /// X(f) for the fundamental field of a Lie element.
    pub fn lie_derivative(&self, lie: usize, f: &ScalarField) -> ScalarField {
        lie_derivative_scalar(&self.space, &self.action.lie[lie].field, f)
    }
}

#[cfg(test)]
mod tests;
