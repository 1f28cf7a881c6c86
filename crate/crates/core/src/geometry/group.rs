//! Finitely presented groups acting by diffeomorphisms, and one-parameter
//! subgroups given by flows.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::fields::VectorField;
use super::space::ParameterSpace;

type PointMap = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type FlowFn = dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync;

#[derive(Clone)]
pub struct GroupElement {
    pub label: String,
    forward: Arc<PointMap>,
    inverse: Arc<PointMap>,
    pub identity_component: bool,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupElement")
            .field("label", &self.label)
            .field("identity_component", &self.identity_component)
            .finish()
    }
}

impl GroupElement {
    pub fn new(
        label: impl Into<String>,
        forward: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        inverse: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        identity_component: bool,
    ) -> Self {
        GroupElement {
            label: label.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            identity_component,
        }
    }

    /// Translation by a fixed vector.
    pub fn translation(label: impl Into<String>, v: Vec<f64>) -> Self {
        let w = v.clone();
        GroupElement::new(
            label,
            move |p| p.iter().zip(&v).map(|(a, b)| a + b).collect(),
            move |p| p.iter().zip(&w).map(|(a, b)| a - b).collect(),
            false,
        )
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (self.forward)(p)
    }

    pub fn apply_inverse(&self, p: &[f64]) -> Vec<f64> {
        (self.inverse)(p)
    }

    /// max |g(g⁻¹(p)) − p| and |g⁻¹(g(p)) − p| over the given points.
    pub fn inverse_residual(&self, space: &ParameterSpace, probes: &[Vec<f64>]) -> f64 {
        probes
            .iter()
            .map(|p| {
                let a = space.distance(&self.apply(&self.apply_inverse(p)), p);
                let b = space.distance(&self.apply_inverse(&self.apply(p)), p);
                let r = a.max(b);
                if r.is_nan() {
                    f64::INFINITY
                } else {
                    r
                }
            })
            .fold(0.0, f64::max)
    }
}

/// A Lie algebra element: its fundamental vector field and flow.
#[derive(Clone)]
pub struct LieElement {
    pub label: String,
    pub field: VectorField,
    flow: Arc<FlowFn>,
}

impl fmt::Debug for LieElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieElement").field("label", &self.label).finish()
    }
}

/// Maximal RK4 step used when a flow is integrated from its field.
pub const RK4_STEP: f64 = 1e-2;

pub fn rk4_flow(field: &VectorField, t: f64, p: &[f64]) -> Result<Vec<f64>> {
    let n = ((t.abs() / RK4_STEP).ceil() as usize).max(1);
    let h = t / n as f64;
    let mut y = p.to_vec();
    let axpy = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    for _ in 0..n {
        let k1 = field.eval(&y)?;
        let k2 = field.eval(&axpy(&y, &k1, h / 2.0))?;
        let k3 = field.eval(&axpy(&y, &k2, h / 2.0))?;
        let k4 = field.eval(&axpy(&y, &k3, h))?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}

impl LieElement {
    /// Flow integrated by RK4 from the generator field.
    pub fn from_field(label: impl Into<String>, field: VectorField) -> Self {
        let f = field.clone();
        LieElement {
            label: label.into(),
            field,
            flow: Arc::new(move |t, p| rk4_flow(&f, t, p)),
        }
    }

    /// Flow given in closed form; `field` must be its t-derivative at 0.
    pub fn with_flow(
        label: impl Into<String>,
        field: VectorField,
        flow: impl Fn(f64, &[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        LieElement {
            label: label.into(),
            field,
            flow: Arc::new(flow),
        }
    }

    pub fn flow(&self, t: f64, p: &[f64]) -> Result<Vec<f64>> {
        (self.flow)(t, p)
    }

    /// max |d/dt flow(t,p)|₀ − X(p)| by central differences, and max |flow(0,p) − p|.
    pub fn flow_residual(&self, probes: &[Vec<f64>], dt: f64) -> Result<(f64, f64)> {
        let mut deriv: f64 = 0.0;
        let mut ident: f64 = 0.0;
        for p in probes {
            let a = self.flow(dt, p)?;
            let b = self.flow(-dt, p)?;
            let x = self.field.eval(p)?;
            for i in 0..p.len() {
                deriv = deriv.max(((a[i] - b[i]) / (2.0 * dt) - x[i]).abs());
            }
            let z = self.flow(0.0, p)?;
            for i in 0..p.len() {
                ident = ident.max((z[i] - p[i]).abs());
            }
        }
        Ok((deriv, ident))
    }
}

/// A generator or its inverse raised to a power.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub power: i32,
}

/// A group word `a₁^k₁*a₂^k₂*…`, acting with the rightmost letter first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    pub fn generator(g: usize) -> Self {
        Word::power(g, 1)
    }

    pub fn power(g: usize, power: i32) -> Self {
        let mut w = Word::identity();
        w.push(g, power);
        w
    }

    /// Appends `g^power` on the right, merging with the last letter.
    pub fn push(&mut self, g: usize, power: i32) {
        if power == 0 {
            return;
        }
        if let Some(last) = self.letters.last_mut() {
            if last.generator == g {
                last.power += power;
                if last.power == 0 {
                    self.letters.pop();
                }
                return;
            }
        }
        self.letters.push(Letter {
            generator: g,
            power,
        });
    }

    /// The product `self * other` (other acts first).
    pub fn mul(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for l in &other.letters {
            w.push(l.generator, l.power);
        }
        w
    }

    pub fn inverse(&self) -> Word {
        let mut w = Word::identity();
        for l in self.letters.iter().rev() {
            w.push(l.generator, -l.power);
        }
        w
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of unit letters (Σ|power|).
    pub fn length(&self) -> usize {
        self.letters.iter().map(|l| l.power.unsigned_abs() as usize).sum()
    }

    /// Exponent sum of generator `g`.
    pub fn exponent_sum(&self, g: usize) -> i64 {
        self.letters
            .iter()
            .filter(|l| l.generator == g)
            .map(|l| l.power as i64)
            .sum()
    }

    /// Unit steps from the rightmost letter outwards: (generator, ±1).
    pub fn steps(&self) -> impl Iterator<Item = (usize, i32)> + '_ {
        self.letters.iter().rev().flat_map(|l| {
            let s = l.power.signum();
            std::iter::repeat_n((l.generator, s), l.power.unsigned_abs() as usize)
        })
    }

    /// Parses `g^2*h^-1`; `e` or `1` is the identity.
    pub fn parse(src: &str, labels: &[String]) -> Result<Word> {
        let s = src.trim();
        if s == "e" || s == "1" || s.is_empty() {
            return Ok(Word::identity());
        }
        let mut w = Word::identity();
        for part in s.split('*') {
            let part = part.trim();
            let (name, power) = match part.split_once('^') {
                Some((n, p)) => {
                    let p: i32 = p.trim().parse().map_err(|_| {
                        Error::InvalidInput(format!("bad exponent in word letter `{part}`"))
                    })?;
                    (n.trim(), p)
                }
                None => (part, 1),
            };
            let g = labels.iter().position(|l| l == name).ok_or_else(|| {
                Error::InvalidInput(format!("unknown generator `{name}` in word `{src}`"))
            })?;
            w.push(g, power);
        }
        Ok(w)
    }

    pub fn display(&self, labels: &[String]) -> String {
        if self.letters.is_empty() {
            return "e".to_string();
        }
        self.letters
            .iter()
            .map(|l| {
                let name = labels.get(l.generator).map_or("?", |s| s.as_str());
                if l.power == 1 {
                    name.to_string()
                } else {
                    format!("{name}^{}", l.power)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// Generators, relations and Lie elements of an acting group.
#[derive(Debug, Clone, Default)]
pub struct GroupAction {
    pub generators: Vec<GroupElement>,
    pub relations: Vec<Word>,
    pub lie: Vec<LieElement>,
}

impl GroupAction {
    pub fn labels(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.label.clone()).collect()
    }

    pub fn parse_word(&self, src: &str) -> Result<Word> {
        Word::parse(src, &self.labels())
    }

    pub fn display_word(&self, w: &Word) -> String {
        w.display(&self.labels())
    }

    pub fn apply_step(&self, g: usize, sign: i32, p: &[f64]) -> Vec<f64> {
        if sign > 0 {
            self.generators[g].apply(p)
        } else {
            self.generators[g].apply_inverse(p)
        }
    }

    pub fn apply(&self, w: &Word, p: &[f64]) -> Vec<f64> {
        w.steps()
            .fold(p.to_vec(), |x, (g, s)| self.apply_step(g, s, &x))
    }

    /// True when every letter lies in the identity component.
    pub fn in_identity_component(&self, w: &Word) -> bool {
        w.letters
            .iter()
            .all(|l| self.generators[l.generator].identity_component)
    }

    /// All freely reduced words of length 1..=max_len, shortlex ordered.
    pub fn words_up_to(&self, max_len: usize) -> Vec<Word> {
        let n = self.generators.len();
        let mut out = Vec::new();
        let mut frontier = vec![Word::identity()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for g in 0..n {
                    for s in [1, -1] {
                        if let Some(last) = w.letters.last() {
                            if last.generator == g && last.power.signum() != s {
                                continue;
                            }
                        }
                        let mut v = w.clone();
                        v.push(g, s);
                        next.push(v);
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Max over probes of the distance between r(p) and p for each relation r.
    pub fn relation_residual(&self, space: &ParameterSpace, probes: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for r in &self.relations {
            for p in probes {
                let d = space.distance(&self.apply(r, p), p);
                worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
            }
        }
        worst
    }
}
