//! Finite ansatz bases for 0-form and 1-form unknowns.

use nalgebra::DMatrix;

use crate::dsl::{parse_with, Context, Expr};
use crate::error::{Error, Result};
use crate::geometry::calculus::exterior_derivative;
use crate::geometry::{OneForm, ParameterSpace, ScalarField, Topology, TwoForm};
use crate::linalg::gram_condition;

/// Largest accepted condition number of the column-normalized Gram matrix.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative tolerance for dropping dependent members of a generated basis.
pub const PRUNE_TOL: f64 = 1e-6;

/// Exponent vectors of `vars` variables with total degree `degree`, in
/// graded-lex order (x1 highest first).
pub fn multi_indices(vars: usize, degree: usize) -> Vec<Vec<usize>> {
    if vars == 0 {
        return if degree == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in multi_indices(vars - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn monomial(exps: &[usize], names: &[String]) -> String {
    let parts: Vec<String> = exps
        .iter()
        .zip(names)
        .filter(|(e, _)| **e > 0)
        .map(|(e, n)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Monomials in x1..xd of total degree `min..=max`.
pub fn polynomial_labels(dim: usize, min: usize, max: usize) -> Vec<String> {
    let names: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    (min..=max)
        .flat_map(|d| multi_indices(dim, d))
        .map(|e| monomial(&e, &names))
        .collect()
}

/// Products of 1, cos(kθ_i), sin(kθ_i) with total frequency ≤ `max_freq`.
fn trigonometric_labels(periods: &[f64], max_freq: usize, with_constant: bool) -> Vec<String> {
    let mut out = Vec::new();
    for total in 0..=max_freq {
        for freqs in multi_indices(periods.len(), total) {
            let active: Vec<usize> = (0..periods.len()).filter(|i| freqs[*i] > 0).collect();
            for mask in 0..(1usize << active.len()) {
                let parts: Vec<String> = active
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| {
                        let f = if mask >> j & 1 == 1 { "sin" } else { "cos" };
                        let k = freqs[i];
                        let scale = 2.0 * k as f64 / periods[i];
                        format!("{f}({scale}*pi*x{})", i + 1)
                    })
                    .collect();
                if parts.is_empty() {
                    if with_constant {
                        out.push("1".to_string());
                    }
                } else {
                    out.push(parts.join("*"));
                }
            }
        }
    }
    out
}

fn parse_coords(src: &str, dim: usize) -> Expr {
    parse_with(src, &Context::coords(dim)).expect("generated ansatz expressions parse")
}

fn normalized(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    m
}

/// Indices of columns kept by Gram–Schmidt at relative tolerance `tol`.
fn independent_columns(m: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (j, c) in m.column_iter().enumerate() {
        let n0 = c.norm();
        if n0 == 0.0 {
            continue;
        }
        let mut v = c.into_owned();
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&v);
                v -= q * d;
            }
        }
        let n = v.norm();
        if n > tol * n0 {
            basis.push(v / n);
            keep.push(j);
        }
    }
    keep
}

#[derive(Debug, Clone)]
pub struct ScalarItem {
    pub label: String,
    pub field: ScalarField,
}

/// Basis for a 0-form unknown.
#[derive(Debug, Clone)]
pub struct ScalarAnsatz {
    pub description: String,
    pub items: Vec<ScalarItem>,
    /// Generated bases may be pruned; explicit ones are checked instead.
    pub generated: bool,
}

impl ScalarAnsatz {
    pub fn new(description: impl Into<String>, items: Vec<ScalarItem>, generated: bool) -> Self {
        ScalarAnsatz {
            description: description.into(),
            items,
            generated,
        }
    }

    /// Polynomials up to `degree` (trigonometric polynomials on a torus,
    /// frequency at most min(degree, 2)).
    pub fn library(space: &ParameterSpace, degree: usize, with_constant: bool) -> Self {
        let dim = space.dimension();
        let (labels, desc) = match space.topology() {
            Topology::Torus { periods } => {
                let f = degree.min(2);
                (
                    trigonometric_labels(periods, f, with_constant),
                    format!("trigonometric polynomials of total frequency <= {f} in {dim} angles"),
                )
            }
            _ => (
                polynomial_labels(dim, if with_constant { 0 } else { 1 }, degree),
                format!("monomials of degree <= {degree} in x1..x{dim}"),
            ),
        };
        let items = labels
            .into_iter()
            .map(|l| ScalarItem {
                field: ScalarField::from_expr(parse_coords(&l, dim), dim),
                label: l,
            })
            .collect();
        ScalarAnsatz::new(desc, items, true)
    }

    pub fn from_exprs(dim: usize, exprs: &[Expr]) -> Self {
        let items = exprs
            .iter()
            .map(|e| ScalarItem {
                label: e.to_string(),
                field: ScalarField::from_expr(e.clone(), dim),
            })
            .collect::<Vec<_>>();
        let desc = format!(
            "explicit: {}",
            items.iter().map(|i| i.label.as_str()).collect::<Vec<_>>().join(", ")
        );
        ScalarAnsatz::new(desc, items, false)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.items.iter().map(|i| i.label.clone()).collect()
    }

    pub fn combination(&self, coeffs: &[f64]) -> ScalarField {
        let terms: Vec<(f64, ScalarField)> = coeffs
            .iter()
            .zip(&self.items)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, i)| (*c, i.field.clone()))
            .collect();
        ScalarField::linear_combination(&terms)
    }

    fn values(&self, probes: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(probes.len(), self.items.len());
        for (j, it) in self.items.iter().enumerate() {
            for (i, p) in probes.iter().enumerate() {
                m[(i, j)] = it.field.eval(p)?;
            }
        }
        Ok(m)
    }

    /// Prunes a generated basis, or rejects an ill-conditioned explicit one.
    /// Returns the condition number of the retained basis.
    pub fn prepare(&mut self, probes: &[Vec<f64>]) -> Result<f64> {
        let m = self.values(probes)?;
        if self.generated {
            let keep = independent_columns(&m, PRUNE_TOL);
            if keep.len() < self.items.len() {
                let dropped = self.items.len() - keep.len();
                self.items = keep.iter().map(|&j| self.items[j].clone()).collect();
                self.description = format!("{} ({dropped} dependent members dropped)", self.description);
            }
            let cols: Vec<_> = keep.iter().map(|&j| m.column(j).into_owned()).collect();
            if cols.is_empty() {
                return Ok(1.0);
            }
            return Ok(gram_condition(&normalized(DMatrix::from_columns(&cols))));
        }
        let cond = gram_condition(&normalized(m));
        if cond > CONDITION_LIMIT {
            return Err(Error::Conditioning { condition: cond });
        }
        Ok(cond)
    }
}

#[derive(Debug, Clone)]
pub struct FormItem {
    pub label: String,
    pub form: OneForm,
    /// Exact exterior derivative when known.
    pub d: Option<TwoForm>,
}

/// Basis for a 1-form unknown.
#[derive(Debug, Clone)]
pub struct FormAnsatz {
    pub description: String,
    pub items: Vec<FormItem>,
    pub generated: bool,
}

impl FormAnsatz {
    pub fn new(description: impl Into<String>, items: Vec<FormItem>, generated: bool) -> Self {
        FormAnsatz {
            description: description.into(),
            items,
            generated,
        }
    }

    /// Library coefficients times each dx_i.
    pub fn library(space: &ParameterSpace, degree: usize) -> Self {
        let dim = space.dimension();
        let scalars = ScalarAnsatz::library(space, degree, true);
        let mut items = Vec::new();
        for axis in 0..dim {
            for s in &scalars.items {
                let mut coeffs = vec![Expr::num(0.0); dim];
                coeffs[axis] = parse_coords(&s.label, dim);
                items.push(FormItem {
                    label: format!("({})*dx{}", s.label, axis + 1),
                    form: OneForm::from_exprs(coeffs),
                    d: None,
                });
            }
        }
        FormAnsatz::new(format!("{} times dx1..dx{dim}", scalars.description), items, true)
    }

    pub fn from_exprs(forms: &[Vec<Expr>]) -> Self {
        let items: Vec<FormItem> = forms
            .iter()
            .map(|c| FormItem {
                label: form_label(c),
                form: OneForm::from_exprs(c.clone()),
                d: None,
            })
            .collect();
        let desc = format!(
            "explicit: {}",
            items.iter().map(|i| i.label.as_str()).collect::<Vec<_>>().join(", ")
        );
        FormAnsatz::new(desc, items, false)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.items.iter().map(|i| i.label.clone()).collect()
    }

    pub fn combination(&self, coeffs: &[f64]) -> OneForm {
        let terms: Vec<(f64, OneForm)> = coeffs
            .iter()
            .zip(&self.items)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, i)| (*c, i.form.clone()))
            .collect();
        OneForm::linear_combination(&terms)
    }

    /// d of each item, exact when available.
    pub fn derivatives(&self, space: &ParameterSpace) -> Vec<TwoForm> {
        self.items
            .iter()
            .map(|i| i.d.clone().unwrap_or_else(|| exterior_derivative(space, &i.form)))
            .collect()
    }

    fn values(&self, probes: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let dim = probes.first().map_or(0, |p| p.len());
        let mut m = DMatrix::zeros(probes.len() * dim, self.items.len());
        for (j, it) in self.items.iter().enumerate() {
            for (i, p) in probes.iter().enumerate() {
                for (k, v) in it.form.covector(p)?.into_iter().enumerate() {
                    m[(i * dim + k, j)] = v;
                }
            }
        }
        Ok(m)
    }

    /// Same contract as [`ScalarAnsatz::prepare`].
    pub fn prepare(&mut self, probes: &[Vec<f64>]) -> Result<f64> {
        let m = self.values(probes)?;
        if self.generated {
            let keep = independent_columns(&m, PRUNE_TOL);
            if keep.len() < self.items.len() {
                let dropped = self.items.len() - keep.len();
                self.items = keep.iter().map(|&j| self.items[j].clone()).collect();
                self.description = format!("{} ({dropped} dependent members dropped)", self.description);
            }
            let cols: Vec<_> = keep.iter().map(|&j| m.column(j).into_owned()).collect();
            if cols.is_empty() {
                return Ok(1.0);
            }
            return Ok(gram_condition(&normalized(DMatrix::from_columns(&cols))));
        }
        let cond = gram_condition(&normalized(m));
        if cond > CONDITION_LIMIT {
            return Err(Error::Conditioning { condition: cond });
        }
        Ok(cond)
    }
}

/// "(c1)*dx1 + (c2)*dx2" with zero coefficients omitted.
pub(crate) fn form_label(coeffs: &[Expr]) -> String {
    let parts: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| format!("({c})*dx{}", i + 1))
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        assert_eq!(polynomial_labels(2, 0, 2), vec!["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"]);
        assert_eq!(multi_indices(3, 2).len(), 6);
    }

    #[test]
    fn torus_library_counts() {
        let labels = trigonometric_labels(&[1.0, 1.0], 1, true);
        assert_eq!(labels.len(), 5);
        assert_eq!(trigonometric_labels(&[1.0], 2, false).len(), 4);
    }

    #[test]
    fn explicit_dependent_basis_is_rejected() {
        let space = ParameterSpace::euclidean(1, 2.0);
        let e = |s: &str| parse_with(s, &Context::coords(1)).unwrap();
        let mut a = ScalarAnsatz::from_exprs(1, &[e("x1"), e("2*x1")]);
        let probes = crate::probes::ProbeSet::new(&space, 16, 0, 1).fit;
        assert!(matches!(a.prepare(&probes), Err(Error::Conditioning { .. })));
    }

    #[test]
    fn generated_basis_is_pruned() {
        let space = ParameterSpace::euclidean(1, 2.0);
        let mut a = ScalarAnsatz::library(&space, 3, true);
        let mut extra = a.items[1].clone();
        extra.label = "copy".into();
        a.items.push(extra);
        let probes = crate::probes::ProbeSet::new(&space, 16, 0, 1).fit;
        a.prepare(&probes).unwrap();
        assert_eq!(a.len(), 4);
    }
}
