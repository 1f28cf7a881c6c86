use super::{BinOp, Expr, Func, Var};
use crate::error::{Error, Result, SourcePos};

/// Which identifiers are legal in an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    /// Number of chart coordinates (`x1`..`xd`); zero disables them.
    pub coords: usize,
    /// Highest admissible jet order; `None` disables `x`, `u`, `uk`.
    pub jet_order: Option<usize>,
    /// Whether the flow time `t` may appear.
    pub time: bool,
}

impl Context {
    pub fn coords(dimension: usize) -> Self {
        Context {
            coords: dimension,
            jet_order: None,
            time: false,
        }
    }

    pub fn jets(order: usize) -> Self {
        Context {
            coords: 0,
            jet_order: Some(order),
            time: false,
        }
    }

    pub fn constant() -> Self {
        Context {
            coords: 0,
            jet_order: None,
            time: false,
        }
    }

    pub fn with_time(mut self) -> Self {
        self.time = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
    len: usize,
}

fn syntax(col: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        pos: SourcePos { line: 1, column: col },
        message: message.into(),
    }
}

fn semantic(col: usize, message: impl Into<String>) -> Error {
    Error::Semantic {
        pos: SourcePos { line: 1, column: col },
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, col, len: 1 });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(col, format!("malformed number `{text}`")))?;
            out.push(Token {
                tok: Tok::Num(v),
                col,
                len: i - start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Ident(text),
                col,
                len: i - start,
            });
            continue;
        }
        return Err(syntax(col, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    end_col: usize,
    ctx: &'a Context,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let col = self.col();
            match self.bump() {
                Some(Token {
                    tok: Tok::Num(v),
                    len,
                    ..
                }) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => {
                    let _ = len;
                    Ok(Expr::Pow(Box::new(base), v as u32))
                }
                _ => Err(syntax(col, "exponent must be an unsigned integer")),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr> {
        let col = self.col();
        let Some(tok) = self.bump() else {
            return Err(syntax(col, "unexpected end of expression"));
        };
        match tok.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.base()?))),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.bump();
                        Ok(inner)
                    }
                    None => Err(syntax(tok.col, "unmatched `(`")),
                    Some(_) => Err(syntax(self.col(), "expected `)`")),
                }
            }
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::LParen) {
                    let open = self.bump().map(|t| t.col).unwrap_or(col);
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    match self.peek() {
                        Some(Tok::RParen) => {
                            self.bump();
                        }
                        None => return Err(syntax(open, "unmatched `(`")),
                        Some(_) => return Err(syntax(self.col(), "expected `)` or `,`")),
                    }
                    let func = Func::from_name(&name)
                        .ok_or_else(|| semantic(tok.col, format!("unknown function `{name}`")))?;
                    if args.len() != 1 {
                        return Err(semantic(
                            tok.col,
                            format!("`{name}` takes 1 argument, got {}", args.len()),
                        ));
                    }
                    Ok(Expr::Call(func, Box::new(args.remove(0))))
                } else {
                    self.ident(&name, tok.col)
                }
            }
            _ => Err(syntax(tok.col, "expected a number, identifier or `(`")),
        }
    }

    fn ident(&self, name: &str, col: usize) -> Result<Expr> {
        if name == "pi" {
            return Ok(Expr::Pi);
        }
        if Func::from_name(name).is_some() {
            return Err(semantic(col, format!("function `{name}` used without arguments")));
        }
        if name == "t" {
            return if self.ctx.time {
                Ok(Expr::Var(Var::Time))
            } else {
                Err(semantic(col, "`t` is only allowed in flow expressions"))
            };
        }
        if name == "x" || name == "u" {
            return match self.ctx.jet_order {
                Some(_) if name == "x" => Ok(Expr::Var(Var::JetBase)),
                Some(_) => Ok(Expr::Var(Var::Jet(0))),
                None => Err(semantic(col, format!("jet symbol `{name}` outside a density"))),
            };
        }
        let (head, digits) = name.split_at(1);
        if let Ok(k) = digits.parse::<usize>() {
            if head == "x" && (1..=9).contains(&k) {
                return if k <= self.ctx.coords {
                    Ok(Expr::Var(Var::Coord(k - 1)))
                } else {
                    Err(semantic(
                        col,
                        format!("`{name}` exceeds dimension {}", self.ctx.coords),
                    ))
                };
            }
            if head == "u" && (1..=6).contains(&k) {
                return match self.ctx.jet_order {
                    Some(r) if k <= r => Ok(Expr::Var(Var::Jet(k))),
                    Some(r) => Err(semantic(col, format!("`{name}` exceeds jet order {r}"))),
                    None => Err(semantic(col, format!("jet symbol `{name}` outside a density"))),
                };
            }
        }
        Err(semantic(col, format!("unresolved name `{name}`")))
    }
}

/// Parses with coordinates, jets (order 6) and time all enabled.
pub fn parse(src: &str) -> Result<Expr> {
    parse_with(
        src,
        &Context {
            coords: 9,
            jet_order: Some(6),
            time: true,
        },
    )
}

pub fn parse_with(src: &str, ctx: &Context) -> Result<Expr> {
    let toks = lex(src)?;
    let end_col = src.chars().count() + 1;
    let mut p = Parser {
        toks,
        pos: 0,
        end_col,
        ctx,
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        let t = &p.toks[p.pos];
        let msg = if t.tok == Tok::RParen {
            "unmatched `)`".to_string()
        } else {
            "unexpected trailing input".to_string()
        };
        return Err(syntax(t.col, msg));
    }
    Ok(e)
}
