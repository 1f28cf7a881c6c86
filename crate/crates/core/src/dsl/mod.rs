//! Expression language used by scenario files.
//!
//! Grammar (normative):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := base ("^" unsigned)?
//! base   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")" | "-" base
//! ```
//!
//! Identifiers are the coordinates `x1`..`x9`, the jet symbols `x`, `u`,
//! `u1`..`u6`, the flow time `t`, and the constant `pi`. Reserved functions
//! are `sin`, `cos`, `exp` and `tanh`. Note that `-x^2` parses as `(-x)^2`.

mod diff;
mod parser;

use std::fmt;

pub use parser::{parse, parse_with, Context};

/// A resolved variable reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// Chart coordinate `x1`..`x9`, stored zero-based.
    Coord(usize),
    /// Base-manifold coordinate `x` of a jet.
    JetBase,
    /// Jet coordinate: `u` is order 0, `uk` is the k-th lattice derivative.
    Jet(usize),
    /// Flow time `t`.
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "tanh" => Some(Func::Tanh),
            _ => None,
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Tanh => v.tanh(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

/// Variable bindings for evaluation. Unbound variables evaluate to NaN.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub coords: &'a [f64],
    pub jets: &'a [f64],
    pub base: f64,
    pub time: f64,
}

impl<'a> Env<'a> {
    pub fn coords(coords: &'a [f64]) -> Self {
        Env {
            coords,
            ..Default::default()
        }
    }

    pub fn jet(base: f64, jets: &'a [f64]) -> Self {
        Env {
            jets,
            base,
            ..Default::default()
        }
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn eval(&self, env: &Env<'_>) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(Var::Coord(i)) => env.coords.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Var(Var::Jet(k)) => env.jets.get(*k).copied().unwrap_or(f64::NAN),
            Expr::Var(Var::JetBase) => env.base,
            Expr::Var(Var::Time) => env.time,
            Expr::Neg(e) => -e.eval(env),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env), b.eval(env));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Pow(b, n) => b.eval(env).powi(*n as i32),
            Expr::Call(f, a) => f.apply(a.eval(env)),
        }
    }

    /// True if the expression mentions `var`.
    pub fn mentions(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.mentions(var),
            Expr::Bin(_, a, b) => a.mentions(var) || b.mentions(var),
        }
    }

    /// Highest jet order referenced, if any.
    pub fn max_jet_order(&self) -> Option<usize> {
        match self {
            Expr::Var(Var::Jet(k)) => Some(*k),
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => None,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.max_jet_order(),
            Expr::Bin(_, a, b) => match (a.max_jet_order(), b.max_jet_order()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Highest coordinate index referenced (zero-based), if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Expr::Var(Var::Coord(k)) => Some(*k),
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => None,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.max_coord(),
            Expr::Bin(_, a, b) => match (a.max_coord(), b.max_coord()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Symbolic partial derivative with light constant folding.
    pub fn derivative(&self, var: Var) -> Expr {
        diff::derivative(self, var)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        diff::add(a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        diff::mul(a, b)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Coord(i) => write!(f, "x{}", i + 1),
            Var::JetBase => write!(f, "x"),
            Var::Jet(0) => write!(f, "u"),
            Var::Jet(k) => write!(f, "u{k}"),
            Var::Time => write!(f, "t"),
        }
    }
}

// Printing levels mirror the grammar: 0 = expr, 1 = term, 2 = factor, 3 = base.
fn level(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 0,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 1,
        Expr::Pow(..) => 2,
        _ => 3,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min_level: u8) -> fmt::Result {
    if level(e) < min_level {
        write!(f, "(")?;
        write!(f, "{e}")?;
        write!(f, ")")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "-{}", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                write_at(f, e, 3)
            }
            Expr::Bin(op, a, b) => {
                let (sym, lhs, rhs) = match op {
                    BinOp::Add => (" + ", 0, 1),
                    BinOp::Sub => (" - ", 0, 1),
                    BinOp::Mul => ("*", 1, 2),
                    BinOp::Div => ("/", 1, 2),
                };
                write_at(f, a, lhs)?;
                write!(f, "{sym}")?;
                write_at(f, b, rhs)
            }
            Expr::Pow(b, n) => {
                write_at(f, b, 3)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        Context::coords(3).with_time()
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse_with("1 + 2*3^2", &ctx()).unwrap();
        assert_eq!(e.eval(&Env::default()), 19.0);
        // "-" binds inside "^": -x^2 is (-x)^2.
        let e = parse_with("-x1^2", &ctx()).unwrap();
        assert_eq!(e.eval(&Env::coords(&[3.0])), 9.0);
        let e = parse_with("0 - x1^2", &ctx()).unwrap();
        assert_eq!(e.eval(&Env::coords(&[3.0])), -9.0);
    }

    #[test]
    fn functions_and_constants() {
        let e = parse_with("sin(pi/2) + cos(0) + exp(0) + tanh(0)", &ctx()).unwrap();
        assert!((e.eval(&Env::default()) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn unmatched_paren_points_at_open_paren() {
        let err = parse_with("sin(x1", &ctx()).unwrap_err();
        match err {
            crate::Error::Syntax { pos, .. } => assert_eq!(pos.column, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_semantic() {
        let err = parse_with("x1 + y", &ctx()).unwrap_err();
        assert!(matches!(err, crate::Error::Semantic { pos, .. } if pos.column == 6));
        let err = parse_with("x4", &ctx()).unwrap_err();
        assert!(matches!(err, crate::Error::Semantic { .. }));
        let err = parse_with("sin(x1, x2)", &ctx()).unwrap_err();
        assert!(matches!(err, crate::Error::Semantic { .. }));
    }

    #[test]
    fn jets_only_in_jet_context() {
        assert!(parse_with("u1", &ctx()).is_err());
        let e = parse_with("x*u + u2^2", &Context::jets(2)).unwrap();
        assert_eq!(e.eval(&Env::jet(2.0, &[1.0, 0.0, 3.0])), 11.0);
        assert!(parse_with("u3", &Context::jets(2)).is_err());
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for src in [
            "1 - (2 - 3)",
            "x1/(x2*x3)",
            "-(x1^2)",
            "(-x1)^2",
            "--x1",
            "(2^3)^1",
            "sin(x1 + x2)*cos(-x3)^2 - exp(1/2)",
            "(x1 - x2) - (x3 + 1)",
            "0.30000000000000004*t",
        ] {
            let e = parse_with(src, &ctx()).unwrap();
            let printed = e.to_string();
            let again = parse_with(&printed, &ctx()).unwrap();
            assert_eq!(e, again, "{src} -> {printed}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = Context::jets(2);
        let e = parse_with("u^3*u1 + sin(u)*u2 - exp(u1)/(1 + u^2) + tanh(u)", &c).unwrap();
        let jets = [0.3, -0.7, 1.1];
        for k in 0..3 {
            let d = e.derivative(Var::Jet(k));
            let h = 1e-6;
            let mut p = jets;
            let mut m = jets;
            p[k] += h;
            m[k] -= h;
            let fd = (e.eval(&Env::jet(0.0, &p)) - e.eval(&Env::jet(0.0, &m))) / (2.0 * h);
            let exact = d.eval(&Env::jet(0.0, &jets));
            assert!((fd - exact).abs() < 1e-8, "k={k}: {fd} vs {exact}");
        }
    }
}
