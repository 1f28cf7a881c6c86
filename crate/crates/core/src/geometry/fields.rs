//! Evaluable fields on a parameter space.
//!
//! Every evaluator is a pure, fallible closure. Expression-built fields
//! report non-finite values as evaluation errors carrying the point.

use std::fmt;
use std::sync::Arc;

use crate::dsl::{Env, Expr, Var};
use crate::error::{Error, Result};

pub type Point = Vec<f64>;

type ScalarFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
type BilinearFn = dyn Fn(&[f64], &[f64], &[f64]) -> Result<f64> + Send + Sync;

pub(crate) fn finite(p: &[f64], v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            point: p.to_vec(),
            message: format!("non-finite value {v}"),
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn eval_exprs(exprs: &[Expr], p: &[f64]) -> Result<Vec<f64>> {
    let env = Env::coords(p);
    exprs.iter().map(|e| finite(p, e.eval(&env))).collect()
}

/// A 0-form. Fields built from expressions carry an exact gradient.
#[derive(Clone)]
pub struct ScalarField {
    f: Arc<ScalarFn>,
    grad: Option<OneForm>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("exact_gradient", &self.grad.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        ScalarField {
            f: Arc::new(f),
            grad: None,
        }
    }

    /// Wraps an infallible closure; non-finite outputs become errors.
    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::new(move |p| finite(p, f(p)))
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::from_fn(move |_| c).with_gradient(OneForm::new(|p| Ok(vec![0.0; p.len()])))
    }

    pub fn zero() -> Self {
        ScalarField::constant(0.0)
    }

    /// Field from an expression over `x1..xd`, with symbolic gradient.
    pub fn from_expr(e: Expr, dimension: usize) -> Self {
        let grad: Vec<Expr> = (0..dimension)
            .map(|i| e.derivative(Var::Coord(i)))
            .collect();
        let f = e;
        ScalarField::new(move |p| finite(p, f.eval(&Env::coords(p))))
            .with_gradient(OneForm::from_exprs(grad))
    }

    pub fn with_gradient(mut self, grad: OneForm) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        (self.f)(p)
    }

    pub fn exact_gradient(&self) -> Option<&OneForm> {
        self.grad.as_ref()
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        let grad = match (&self.grad, &other.grad) {
            (Some(x), Some(y)) => Some(x.add(y)),
            _ => None,
        };
        ScalarField {
            f: Arc::new(move |p| Ok(a.eval(p)? + b.eval(p)?)),
            grad,
        }
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        let a = self.clone();
        ScalarField {
            f: Arc::new(move |p| Ok(c * a.eval(p)?)),
            grad: self.grad.as_ref().map(|g| g.scale(c)),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.add(&other.scale(-1.0))
    }

    /// x ↦ f(g(x)) for a point map g.
    pub fn compose(&self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> ScalarField {
        let a = self.clone();
        ScalarField::new(move |p| a.eval(&g(p)))
    }

    /// Σ c_i f_i, keeping exact gradients when all terms have them.
    pub fn linear_combination(terms: &[(f64, ScalarField)]) -> ScalarField {
        terms
            .iter()
            .fold(ScalarField::zero(), |acc, (c, f)| acc.add(&f.scale(*c)))
    }
}

/// A 1-form, given by its covector at each point.
#[derive(Clone)]
pub struct OneForm(Arc<VectorFn>);

impl fmt::Debug for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("OneForm")
    }
}

impl OneForm {
    pub fn new(f: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        OneForm(Arc::new(f))
    }

    /// Σ_i e_i dx_i with coefficient expressions over `x1..xd`.
    pub fn from_exprs(coeffs: Vec<Expr>) -> Self {
        OneForm::new(move |p| eval_exprs(&coeffs, p))
    }

    pub fn zero() -> Self {
        OneForm::new(|p| Ok(vec![0.0; p.len()]))
    }

    pub fn constant(c: Vec<f64>) -> Self {
        OneForm::new(move |_| Ok(c.clone()))
    }

    pub fn covector(&self, p: &[f64]) -> Result<Vec<f64>> {
        (self.0)(p)
    }

    pub fn eval(&self, p: &[f64], v: &[f64]) -> Result<f64> {
        Ok(dot(&self.covector(p)?, v))
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        let (a, b) = (self.clone(), other.clone());
        OneForm::new(move |p| {
            let (x, y) = (a.covector(p)?, b.covector(p)?);
            Ok(x.iter().zip(&y).map(|(u, v)| u + v).collect())
        })
    }

    pub fn scale(&self, c: f64) -> OneForm {
        let a = self.clone();
        OneForm::new(move |p| Ok(a.covector(p)?.into_iter().map(|v| c * v).collect()))
    }

    pub fn sub(&self, other: &OneForm) -> OneForm {
        self.add(&other.scale(-1.0))
    }

    pub fn linear_combination(terms: &[(f64, OneForm)]) -> OneForm {
        let terms: Vec<(f64, OneForm)> = terms.to_vec();
        OneForm::new(move |p| {
            let mut acc = vec![0.0; p.len()];
            for (c, f) in &terms {
                if *c != 0.0 {
                    for (a, v) in acc.iter_mut().zip(f.covector(p)?) {
                        *a += c * v;
                    }
                }
            }
            Ok(acc)
        })
    }

    /// x ↦ ρ_x(X(x)).
    pub fn contract(&self, x: &VectorField) -> ScalarField {
        let (a, x) = (self.clone(), x.clone());
        ScalarField::new(move |p| Ok(dot(&a.covector(p)?, &x.eval(p)?)))
    }
}

/// An antisymmetric bilinear form at each point.
#[derive(Clone)]
pub struct TwoForm(Arc<BilinearFn>);

impl fmt::Debug for TwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TwoForm")
    }
}

impl TwoForm {
    pub fn new(f: impl Fn(&[f64], &[f64], &[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        TwoForm(Arc::new(f))
    }

    pub fn zero() -> Self {
        TwoForm::new(|_, _, _| Ok(0.0))
    }

    /// Constant form Σ_{i<j} c_ij dx_i∧dx_j from an antisymmetric matrix.
    pub fn constant(matrix: Vec<Vec<f64>>) -> Self {
        TwoForm::new(move |_, u, v| {
            let mut s = 0.0;
            for (i, row) in matrix.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    s += c * u[i] * v[j];
                }
            }
            Ok(s)
        })
    }

    pub fn eval(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        (self.0)(p, u, v)
    }

    pub fn sub(&self, other: &TwoForm) -> TwoForm {
        let (a, b) = (self.clone(), other.clone());
        TwoForm::new(move |p, u, v| Ok(a.eval(p, u, v)? - b.eval(p, u, v)?))
    }

    /// ι_X ω as a 1-form: v ↦ ω(X, v).
    pub fn contract(&self, x: &VectorField) -> OneForm {
        let (w, x) = (self.clone(), x.clone());
        OneForm::new(move |p| {
            let xv = x.eval(p)?;
            let mut out = vec![0.0; p.len()];
            let mut e = vec![0.0; p.len()];
            for (i, o) in out.iter_mut().enumerate() {
                e[i] = 1.0;
                *o = w.eval(p, &xv, &e)?;
                e[i] = 0.0;
            }
            Ok(out)
        })
    }
}

#[derive(Clone)]
pub struct VectorField(Arc<VectorFn>);

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorField")
    }
}

impl VectorField {
    pub fn new(f: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static) -> Self {
        VectorField(Arc::new(f))
    }

    pub fn from_exprs(components: Vec<Expr>) -> Self {
        VectorField::new(move |p| eval_exprs(&components, p))
    }

    pub fn constant(v: Vec<f64>) -> Self {
        VectorField::new(move |_| Ok(v.clone()))
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        (self.0)(p)
    }

    pub fn linear_combination(terms: &[(f64, VectorField)]) -> VectorField {
        let terms = terms.to_vec();
        VectorField::new(move |p| {
            let mut acc = vec![0.0; p.len()];
            for (c, f) in &terms {
                for (a, v) in acc.iter_mut().zip(f.eval(p)?) {
                    *a += c * v;
                }
            }
            Ok(acc)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_with, Context};

    fn ex(s: &str) -> Expr {
        parse_with(s, &Context::coords(2)).unwrap()
    }

    #[test]
    fn expression_fields_evaluate_and_differentiate() {
        let f = ScalarField::from_expr(ex("x1^2*x2"), 2);
        assert_eq!(f.eval(&[2.0, 3.0]).unwrap(), 12.0);
        let g = f.exact_gradient().unwrap().covector(&[2.0, 3.0]).unwrap();
        assert_eq!(g, vec![12.0, 4.0]);
    }

    #[test]
    fn non_finite_values_are_errors() {
        let f = ScalarField::from_expr(ex("1/x1"), 2);
        match f.eval(&[0.0, 1.0]) {
            Err(Error::Evaluation { point, .. }) => assert_eq!(point, vec![0.0, 1.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn form_algebra() {
        let a = OneForm::from_exprs(vec![ex("x2"), ex("0 - x1")]);
        let b = OneForm::constant(vec![1.0, 1.0]);
        let c = OneForm::linear_combination(&[(2.0, a.clone()), (-1.0, b.clone())]);
        assert_eq!(c.covector(&[1.0, 2.0]).unwrap(), vec![3.0, -3.0]);
        assert_eq!(a.sub(&a).eval(&[1.0, 2.0], &[1.0, 1.0]).unwrap(), 0.0);
        let x = VectorField::constant(vec![1.0, 0.0]);
        assert_eq!(a.contract(&x).eval(&[1.0, 2.0]).unwrap(), 2.0);
        let w = TwoForm::constant(vec![vec![0.0, 2.0], vec![-2.0, 0.0]]);
        assert_eq!(w.contract(&x).covector(&[0.0, 0.0]).unwrap(), vec![0.0, 2.0]);
    }
}
