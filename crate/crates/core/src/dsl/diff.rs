use super::{BinOp, Expr, Func, Var};

pub(super) fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => Expr::Num(-x),
        other => Expr::Neg(Box::new(other)),
    }
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

pub(super) fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        _ if a.is_zero() || b.is_zero() => Expr::Num(0.0),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        _ => Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return Expr::Num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Bin(BinOp::Div, Box::new(a), Box::new(b))
}

fn pow(b: Expr, n: u32) -> Expr {
    match n {
        0 => Expr::Num(1.0),
        1 => b,
        _ => Expr::Pow(Box::new(b), n),
    }
}

pub(super) fn derivative(e: &Expr, var: Var) -> Expr {
    match e {
        Expr::Num(_) | Expr::Pi => Expr::Num(0.0),
        Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(derivative(a, var)),
        Expr::Bin(op, a, b) => {
            let (da, db) = (derivative(a, var), derivative(b, var));
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                BinOp::Div => {
                    // (a'b - ab') / b^2
                    let num = sub(mul(da, (**b).clone()), mul((**a).clone(), db));
                    div(num, pow((**b).clone(), 2))
                }
            }
        }
        Expr::Pow(b, n) => {
            if *n == 0 {
                return Expr::Num(0.0);
            }
            let db = derivative(b, var);
            mul(mul(Expr::Num(*n as f64), pow((**b).clone(), n - 1)), db)
        }
        Expr::Call(f, a) => {
            let da = derivative(a, var);
            if da.is_zero() {
                return Expr::Num(0.0);
            }
            let inner = (**a).clone();
            let outer = match f {
                Func::Sin => Expr::Call(Func::Cos, Box::new(inner)),
                Func::Cos => neg(Expr::Call(Func::Sin, Box::new(inner))),
                Func::Exp => Expr::Call(Func::Exp, Box::new(inner)),
                Func::Tanh => sub(
                    Expr::Num(1.0),
                    pow(Expr::Call(Func::Tanh, Box::new(inner)), 2),
                ),
            };
            mul(outer, da)
        }
    }
}
