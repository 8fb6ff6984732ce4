//! Surface expressions: parser, printer, germ evaluator and realness check.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | atom ('^' INT)?
//! atom   := z1 | z2 | v | NUMBER | i | conj(expr) | re(expr) | im(expr) | (expr)
//! NUMBER := INT ('/' INT)?
//! ```
//!
//! `re` and `im` are expanded while parsing, so the tree only contains
//! [`ExprKind::Conj`] for conjugation. `#` starts a comment running to the end
//! of the line.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{EvalError, ParseError, SeriesError, Span};
use crate::scalar::{GaussRational, Scalar};
use crate::series::{Base, Context, Germ, Var};

/// Holomorphic coordinate symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sym {
    Z1,
    Z2,
    V,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Var(Sym),
    Const(GaussRational),
    Conj(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

/// Expression node. Equality ignores source spans.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    fn unspanned(kind: ExprKind) -> Self {
        Expr::new(kind, Span::default())
    }

    pub fn var(s: Sym) -> Self {
        Self::unspanned(ExprKind::Var(s))
    }

    pub fn int(n: i64) -> Self {
        Self::unspanned(ExprKind::Const(GaussRational::from_int(n)))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        let q = BigRational::new(BigInt::from(n), BigInt::from(d));
        Self::unspanned(ExprKind::Const(GaussRational::new(q, BigRational::zero())))
    }

    pub fn imag() -> Self {
        Self::unspanned(ExprKind::Const(GaussRational::imag_unit()))
    }

    pub fn conj(e: Expr) -> Self {
        Self::unspanned(ExprKind::Conj(Box::new(e)))
    }

    pub fn pow(e: Expr, n: u32) -> Self {
        Self::unspanned(ExprKind::Pow(Box::new(e), n))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Self::unspanned(ExprKind::Add(Box::new(a), Box::new(b)))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Self::unspanned(ExprKind::Sub(Box::new(a), Box::new(b)))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Self::unspanned(ExprKind::Mul(Box::new(a), Box::new(b)))
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Self::unspanned(ExprKind::Div(Box::new(a), Box::new(b)))
    }

    pub fn neg(a: Expr) -> Self {
        Self::unspanned(ExprKind::Neg(Box::new(a)))
    }

    /// `(e + conj e)/2`
    pub fn re(e: Expr) -> Self {
        let c = Expr::conj(e.clone());
        Expr::div(Expr::add(e, c), Expr::int(2))
    }

    /// `(e - conj e)/(2i)`
    pub fn im(e: Expr) -> Self {
        let c = Expr::conj(e.clone());
        Expr::div(Expr::sub(e, c), Expr::mul(Expr::int(2), Expr::imag()))
    }

    /// Replaces every occurrence of `v` by `with`.
    pub fn substitute_v(&self, with: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute_v(with));
        let kind = match &self.kind {
            ExprKind::Var(Sym::V) => return with.clone(),
            ExprKind::Var(_) | ExprKind::Const(_) => self.kind.clone(),
            ExprKind::Conj(a) => ExprKind::Conj(sub(a)),
            ExprKind::Neg(a) => ExprKind::Neg(sub(a)),
            ExprKind::Add(a, b) => ExprKind::Add(sub(a), sub(b)),
            ExprKind::Sub(a, b) => ExprKind::Sub(sub(a), sub(b)),
            ExprKind::Mul(a, b) => ExprKind::Mul(sub(a), sub(b)),
            ExprKind::Div(a, b) => ExprKind::Div(sub(a), sub(b)),
            ExprKind::Pow(a, n) => ExprKind::Pow(sub(a), *n),
        };
        Expr::new(kind, self.span)
    }

    /// Swaps `z1` and `z2`.
    pub fn swap_z(&self) -> Expr {
        let sub = |e: &Expr| Box::new(e.swap_z());
        let kind = match &self.kind {
            ExprKind::Var(Sym::Z1) => ExprKind::Var(Sym::Z2),
            ExprKind::Var(Sym::Z2) => ExprKind::Var(Sym::Z1),
            ExprKind::Var(_) | ExprKind::Const(_) => self.kind.clone(),
            ExprKind::Conj(a) => ExprKind::Conj(sub(a)),
            ExprKind::Neg(a) => ExprKind::Neg(sub(a)),
            ExprKind::Add(a, b) => ExprKind::Add(sub(a), sub(b)),
            ExprKind::Sub(a, b) => ExprKind::Sub(sub(a), sub(b)),
            ExprKind::Mul(a, b) => ExprKind::Mul(sub(a), sub(b)),
            ExprKind::Div(a, b) => ExprKind::Div(sub(a), sub(b)),
            ExprKind::Pow(a, n) => ExprKind::Pow(sub(a), *n),
        };
        Expr::new(kind, self.span)
    }
}

// Printer. Output is fully parenthesized and re-parses to an equal tree.

fn fmt_const(c: &GaussRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let ratio = |q: &BigRational| {
        if q.denom().is_one() {
            format!("{}", q.numer())
        } else {
            format!("{}/{}", q.numer(), q.denom())
        }
    };
    if c.im.is_zero() && !c.re.is_negative() {
        if c.re.denom().is_one() {
            write!(f, "{}", c.re.numer())
        } else {
            write!(f, "({})", ratio(&c.re))
        }
    } else if c.re.is_zero() && c.im.is_one() {
        f.write_str("i")
    } else {
        // Not produced by the parser; prints to an equal value.
        write!(f, "({} + ({})*i)", ratio(&c.re), ratio(&c.im))
    }
}

fn is_atomic(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Var(_) | ExprKind::Conj(_) => true,
        ExprKind::Const(c) => {
            (c.im.is_zero() && c.re.denom().is_one() && !c.re.is_negative())
                || (c.re.is_zero() && c.im.is_one())
        }
        _ => false,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Var(Sym::Z1) => f.write_str("z1"),
            ExprKind::Var(Sym::Z2) => f.write_str("z2"),
            ExprKind::Var(Sym::V) => f.write_str("v"),
            ExprKind::Const(c) => fmt_const(c, f),
            ExprKind::Conj(a) => write!(f, "conj({a})"),
            ExprKind::Neg(a) => write!(f, "(-{a})"),
            ExprKind::Add(a, b) => write!(f, "({a} + {b})"),
            ExprKind::Sub(a, b) => write!(f, "({a} - {b})"),
            ExprKind::Mul(a, b) => write!(f, "({a}*{b})"),
            // Keep `(1)/2` from re-reading as the literal `1/2`.
            ExprKind::Div(a, b) if matches!(a.kind, ExprKind::Const(_)) => {
                write!(f, "(({a})/{b})")
            }
            ExprKind::Div(a, b) => write!(f, "({a}/{b})"),
            ExprKind::Pow(a, n) if is_atomic(a) => write!(f, "{a}^{n}"),
            ExprKind::Pow(a, n) => write!(f, "({a})^{n}"),
        }
    }
}

// Lexer.

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Other(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Plus => "'+'".to_owned(),
            Tok::Minus => "'-'".to_owned(),
            Tok::Star => "'*'".to_owned(),
            Tok::Slash => "'/'".to_owned(),
            Tok::Caret => "'^'".to_owned(),
            Tok::LParen => "'('".to_owned(),
            Tok::RParen => "')'".to_owned(),
            Tok::Other(c) => format!("'{c}'"),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

struct Token {
    tok: Tok,
    span: Span,
}

fn lex(src: &str) -> Vec<Token> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = src[i..].chars().next().unwrap();
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            Tok::Int(src[start..i].parse().expect("digits"))
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_owned())
        } else {
            i += c.len_utf8();
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '^' => Tok::Caret,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                other => Tok::Other(other),
            }
        };
        out.push(Token {
            tok,
            span: Span { start, end: i },
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span {
            start: src.len(),
            end: src.len(),
        },
    });
    out
}

/// 1-based line and column of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = match before.rfind('\n') {
        Some(nl) => before[nl + 1..].chars().count() + 1,
        None => before.chars().count() + 1,
    };
    (line, col)
}

// Parser.

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    expected: BTreeSet<&'static str>,
}

const ATOM_START: [&str; 9] = ["z1", "z2", "v", "i", "conj", "re", "im", "integer", "'('"];

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    /// Consumes `tok` if present, recording it as an expectation otherwise.
    fn eat(&mut self, tok: &Tok, label: &'static str) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            self.expected.insert(label);
            false
        }
    }

    fn error(&self) -> ParseError {
        let (line, column) = line_col(self.src, self.span().start);
        ParseError {
            line,
            column,
            found: self.peek().describe(),
            expected: self.expected.iter().map(|s| (*s).to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: &Tok, label: &'static str) -> Result<(), ParseError> {
        if self.eat(tok, label) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.span().start;
        let mut lhs = self.term()?;
        loop {
            let ctor: fn(Box<Expr>, Box<Expr>) -> ExprKind = if self.eat(&Tok::Plus, "'+'") {
                ExprKind::Add
            } else if self.eat(&Tok::Minus, "'-'") {
                ExprKind::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            let span = Span {
                start,
                end: self.prev_end(),
            };
            lhs = Expr::new(ctor(Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let start = self.span().start;
        let mut lhs = self.factor()?;
        loop {
            let ctor: fn(Box<Expr>, Box<Expr>) -> ExprKind = if self.eat(&Tok::Star, "'*'") {
                ExprKind::Mul
            } else if self.eat(&Tok::Slash, "'/'") {
                ExprKind::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            let span = Span {
                start,
                end: self.prev_end(),
            };
            lhs = Expr::new(ctor(Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let start = self.span().start;
        if self.eat(&Tok::Minus, "'-'") {
            let inner = self.factor()?;
            let span = Span {
                start,
                end: self.prev_end(),
            };
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        let atom = self.atom()?;
        if self.eat(&Tok::Caret, "'^'") {
            let n = match self.peek().clone() {
                Tok::Int(n) => n,
                _ => {
                    self.expected.insert("integer");
                    return Err(self.error());
                }
            };
            let Some(n) = n.to_u32() else {
                self.expected.insert("integer exponent below 2^32");
                return Err(self.error());
            };
            self.bump();
            let span = Span {
                start,
                end: self.prev_end(),
            };
            return Ok(Expr::new(ExprKind::Pow(Box::new(atom), n), span));
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.span().start;
        let after_slash = self.pos > 0 && self.toks[self.pos - 1].tok == Tok::Slash;
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                let mut value = BigRational::from_integer(n);
                // `p/q` becomes one literal unless it would change how a
                // neighbouring operator binds (`x/1/2`, `2/3^2`).
                if !after_slash
                    && *self.peek() == Tok::Slash
                    && matches!(self.peek_at(1), Tok::Int(_))
                    && *self.peek_at(2) != Tok::Caret
                {
                    self.bump();
                    let Tok::Int(d) = self.bump() else { unreachable!() };
                    if d.is_zero() {
                        self.pos -= 1;
                        self.expected.insert("nonzero denominator");
                        return Err(self.error());
                    }
                    value /= BigRational::from_integer(d);
                }
                let span = Span {
                    start,
                    end: self.prev_end(),
                };
                Ok(Expr::new(
                    ExprKind::Const(GaussRational::new(value, BigRational::zero())),
                    span,
                ))
            }
            Tok::LParen => {
                self.bump();
                let mut inner = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                inner.span = Span {
                    start,
                    end: self.prev_end(),
                };
                Ok(inner)
            }
            Tok::Ident(name) => {
                let simple = match name.as_str() {
                    "z1" => Some(ExprKind::Var(Sym::Z1)),
                    "z2" => Some(ExprKind::Var(Sym::Z2)),
                    "v" => Some(ExprKind::Var(Sym::V)),
                    "i" => Some(ExprKind::Const(GaussRational::imag_unit())),
                    _ => None,
                };
                if let Some(kind) = simple {
                    let span = self.span();
                    self.bump();
                    return Ok(Expr::new(kind, span));
                }
                let wrap: fn(Expr) -> Expr = match name.as_str() {
                    "conj" => Expr::conj,
                    "re" => Expr::re,
                    "im" => Expr::im,
                    _ => {
                        self.expected.extend(ATOM_START);
                        self.expected.insert("'-'");
                        return Err(self.error());
                    }
                };
                self.bump();
                self.expect(&Tok::LParen, "'('")?;
                let inner = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                let mut e = wrap(inner);
                e.span = Span {
                    start,
                    end: self.prev_end(),
                };
                Ok(e)
            }
            _ => {
                self.expected.extend(ATOM_START);
                Err(self.error())
            }
        }
    }
}

/// Parses one expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text,
        toks: lex(text),
        pos: 0,
        expected: BTreeSet::new(),
    };
    let e = p.expr()?;
    p.expect(&Tok::Eof, "end of input")?;
    Ok(e)
}

/// A parsed graphing function with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSpec {
    pub name: String,
    pub expr: Expr,
    pub source_text: String,
    pub realness_checked: bool,
}

impl SurfaceSpec {
    /// Parses surface-file text: an optional `# name: ...` first line followed
    /// by the expression.
    pub fn parse(text: &str, default_name: &str) -> Result<Self, ParseError> {
        let first = text.lines().next().unwrap_or("").trim();
        let name = first
            .strip_prefix('#')
            .map(str::trim_start)
            .and_then(|s| s.strip_prefix("name:"))
            .map(|s| s.trim().to_owned())
            .unwrap_or_else(|| default_name.to_owned());
        let expr = parse(text)?;
        let body: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n");
        Ok(SurfaceSpec {
            name,
            expr,
            source_text: body.trim().to_owned(),
            realness_checked: false,
        })
    }

    pub fn from_expr(name: &str, expr: Expr) -> Self {
        SurfaceSpec {
            name: name.to_owned(),
            source_text: expr.to_string(),
            expr,
            realness_checked: false,
        }
    }
}

// Evaluation.

/// Expands `expr` as a germ of the given order at the context's base point.
pub fn eval_germ<S: Scalar>(
    expr: &Expr,
    ctx: &Arc<Context<S>>,
    order: usize,
) -> Result<Germ<S>, EvalError> {
    eval_inner(expr, ctx, order, false)
}

fn eval_inner<S: Scalar>(
    expr: &Expr,
    ctx: &Arc<Context<S>>,
    order: usize,
    conj: bool,
) -> Result<Germ<S>, EvalError> {
    let go = |e: &Expr| eval_inner(e, ctx, order, conj);
    Ok(match &expr.kind {
        ExprKind::Var(s) => {
            let var = match s {
                Sym::Z1 => Var::Z1,
                Sym::Z2 => Var::Z2,
                Sym::V => Var::V,
            };
            Germ::var(ctx, order, if conj { var.conj() } else { var })
        }
        ExprKind::Const(c) => {
            let im = if conj { -c.im.clone() } else { c.im.clone() };
            Germ::constant(ctx, order, S::from_gaussian(&c.re, &im))
        }
        ExprKind::Conj(a) => eval_inner(a, ctx, order, !conj)?,
        ExprKind::Neg(a) => -&go(a)?,
        ExprKind::Add(a, b) => go(a)?.try_add(&go(b)?)?,
        ExprKind::Sub(a, b) => go(a)?.try_sub(&go(b)?)?,
        ExprKind::Mul(a, b) => go(a)?.try_mul(&go(b)?)?,
        ExprKind::Div(a, b) => {
            let den = go(b)?;
            let inv = den.recip().map_err(|e| match e {
                SeriesError::DivisionByZeroGerm => EvalError::DivisionByZeroGerm { span: b.span },
                other => EvalError::Series(other),
            })?;
            go(a)?.try_mul(&inv)?
        }
        ExprKind::Pow(a, n) => go(a)?.powi(*n),
    })
}

/// Outcome of [`check_realness`].
#[derive(Clone, Debug, PartialEq)]
pub struct RealnessReport {
    pub real: bool,
    pub max_residual: f64,
    /// Index of the first probe where the check failed.
    pub witness: Option<usize>,
}

/// Checks `conj(F) = F` as germs at every probe. Probes where the expression
/// cannot be expanded are skipped.
pub fn check_realness<S: Scalar>(expr: &Expr, probes: &[Base<S>], order: usize) -> RealnessReport {
    let mut report = RealnessReport {
        real: true,
        max_residual: 0.0,
        witness: None,
    };
    for (idx, base) in probes.iter().enumerate() {
        let ctx = Context::new(base.clone(), order);
        let Ok(f) = eval_germ(expr, &ctx, order) else {
            continue;
        };
        let diff = &f.involute() - &f;
        let res = diff.max_abs();
        let tol = 1e-10 * (1.0 + f.max_abs());
        let bad = if S::EXACT {
            diff.coeffs().iter().any(|c| !c.is_zero())
        } else {
            res > tol
        };
        report.max_residual = report.max_residual.max(res);
        if bad && report.real {
            report.real = false;
            report.witness = Some(idx);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C64;
    use crate::series::rank;
    use proptest::prelude::*;

    const MODEL: &str =
        "(z1*conj(z1) + (1/2)*z1^2*conj(z2) + (1/2)*conj(z1)^2*z2) / (1 - z2*conj(z2))";

    fn base(z1: C64, z2: C64, v: f64) -> Base<C64> {
        Base {
            z1,
            z2,
            v: C64::new(v, 0.0),
        }
    }

    #[test]
    fn parses_product_with_conj() {
        let e = parse("z1*conj(z1)").unwrap();
        assert_eq!(e, Expr::mul(Expr::var(Sym::Z1), Expr::conj(Expr::var(Sym::Z1))));
    }

    #[test]
    fn parses_model_with_precedence() {
        let e = parse(MODEL).unwrap();
        let z1 = || Expr::var(Sym::Z1);
        let z2 = || Expr::var(Sym::Z2);
        let half = || Expr::rational(1, 2);
        let num = Expr::add(
            Expr::add(
                Expr::mul(z1(), Expr::conj(z1())),
                Expr::mul(Expr::mul(half(), Expr::pow(z1(), 2)), Expr::conj(z2())),
            ),
            Expr::mul(Expr::mul(half(), Expr::pow(Expr::conj(z1()), 2)), z2()),
        );
        let den = Expr::sub(Expr::int(1), Expr::mul(z2(), Expr::conj(z2())));
        assert_eq!(e, Expr::div(num, den));
    }

    #[test]
    fn reports_position_and_expectations() {
        let err = parse("z1 +* z2").unwrap_err();
        assert_eq!((err.line, err.column), (1, 5));
        assert_eq!(err.found, "'*'");
        assert!(err.expected.contains("z1"));
        assert!(err.expected.contains("'-'"));

        let err = parse("z1 +\n  w").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn rejects_unknown_identifiers_and_decimals() {
        for bad in ["x", "exp(z1)", "z3", "0.5*z1", "z1^-1", "z1^2^3", "1/0"] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn fraction_literals_respect_operator_binding() {
        assert_eq!(parse("1/2").unwrap(), Expr::rational(1, 2));
        // Division chains stay left-associative.
        assert_eq!(
            parse("z1/1/2").unwrap(),
            Expr::div(Expr::div(Expr::var(Sym::Z1), Expr::int(1)), Expr::int(2))
        );
        // A power binds to the denominator only.
        assert_eq!(parse("2/3^2").unwrap(), Expr::div(Expr::int(2), Expr::pow(Expr::int(3), 2)));
    }

    #[test]
    fn re_and_im_desugar() {
        assert_eq!(parse("re(z1)").unwrap(), Expr::re(Expr::var(Sym::Z1)));
        assert_eq!(parse("im(v)").unwrap(), Expr::im(Expr::var(Sym::V)));
    }

    #[test]
    fn surface_file_name_line() {
        let s = SurfaceSpec::parse("# name: demo tube\nre(z1)^2\n", "fallback").unwrap();
        assert_eq!(s.name, "demo tube");
        assert_eq!(s.source_text, "re(z1)^2");
        let s = SurfaceSpec::parse("z1*conj(z1)", "fallback").unwrap();
        assert_eq!(s.name, "fallback");
    }

    #[test]
    fn abs_squared_expansion() {
        let e = parse("z1*conj(z1)").unwrap();
        let ctx = Context::new(base(C64::new(1.0, 1.0), C64::new(0.0, 0.0), 0.0), 1);
        let g: Germ<C64> = eval_germ(&e, &ctx, 1).unwrap();
        assert_eq!(*g.value(), C64::new(2.0, 0.0));
        assert_eq!(g.coeff(&[1, 0, 0, 0, 0]), Some(&C64::new(1.0, -1.0)));
        assert_eq!(g.coeff(&[0, 0, 1, 0, 0]), Some(&C64::new(1.0, 1.0)));
    }

    #[test]
    fn model_is_flat_to_first_order_at_origin() {
        let e = parse(MODEL).unwrap();
        let ctx = Context::new(base(C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0), 3);
        let g: Germ<C64> = eval_germ(&e, &ctx, 3).unwrap();
        assert!(g.coeffs()[..6].iter().all(Scalar::is_zero));
        // Second order: only z1*zb1 survives.
        assert_eq!(g.coeff(&[1, 0, 1, 0, 0]), Some(&C64::new(1.0, 0.0)));
        assert_eq!(g.coeff(&[2, 0, 0, 0, 0]), Some(&C64::new(0.0, 0.0)));
        // Third order: (1/2) z1^2 zb2.
        assert_eq!(g.coeff(&[2, 0, 0, 1, 0]), Some(&C64::new(0.5, 0.0)));
    }

    #[test]
    fn vanishing_denominator_reports_span() {
        let text = "1/(1 - z2*conj(z2))";
        let e = parse(text).unwrap();
        let ctx = Context::new(base(C64::new(0.0, 0.0), C64::new(1.0, 0.0), 0.0), 2);
        let err = eval_germ::<C64>(&e, &ctx, 2).unwrap_err();
        let EvalError::DivisionByZeroGerm { span } = err else { panic!("{err:?}") };
        assert_eq!(&text[span.start..span.end], "(1 - z2*conj(z2))");
    }

    #[test]
    fn realness_examples() {
        let probes = [
            base(C64::new(0.1, 0.2), C64::new(-0.2, 0.1), 0.1),
            base(C64::new(0.0, -0.1), C64::new(0.25, 0.0), -0.2),
        ];
        assert!(check_realness(&parse(MODEL).unwrap(), &probes, 4).real);
        assert!(check_realness(&parse("re(z1^2*conj(z2))").unwrap(), &probes, 4).real);
        let r = check_realness(&parse("z1").unwrap(), &probes, 4);
        assert!(!r.real);
        assert_eq!(r.witness, Some(0));
    }

    #[test]
    fn exact_realness_of_model() {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let probe = Base {
            z1: GaussRational::new(q(1, 10), q(1, 5)),
            z2: GaussRational::new(q(-1, 5), q(1, 10)),
            v: GaussRational::new(q(1, 7), q(0, 1)),
        };
        assert!(check_realness(&parse(MODEL).unwrap(), &[probe], 4).real);
    }

    #[test]
    fn conj_maps_constants() {
        let e = parse("conj(i*z1)").unwrap();
        let ctx = Context::new(base(C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0), 1);
        let g: Germ<C64> = eval_germ(&e, &ctx, 1).unwrap();
        assert_eq!(g.coeffs()[rank(&[0, 0, 1, 0, 0])], C64::new(0.0, -1.0));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::var(Sym::Z1)),
            Just(Expr::var(Sym::Z2)),
            Just(Expr::var(Sym::V)),
            Just(Expr::imag()),
            (0i64..20).prop_map(Expr::int),
            (0i64..9, 2i64..9).prop_map(|(n, d)| Expr::rational(n, d)),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
                inner.clone().prop_map(Expr::neg),
                inner.clone().prop_map(Expr::conj),
                (inner, 0u32..4).prop_map(|(a, n)| Expr::pow(a, n)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn evaluation_is_a_homomorphism(a in arb_expr(), b in arb_expr(),
                                        x in -0.5f64..0.5, y in -0.5f64..0.5) {
            let ctx = Context::new(base(C64::new(x, y), C64::new(y, 0.3), x), 2);
            let (Ok(ga), Ok(gb)) = (eval_germ::<C64>(&a, &ctx, 2), eval_germ::<C64>(&b, &ctx, 2)) else {
                return Ok(());
            };
            let scale = 1e-9 * (1.0 + ga.max_abs()) * (1.0 + gb.max_abs());
            let sum = eval_germ::<C64>(&Expr::add(a.clone(), b.clone()), &ctx, 2).unwrap();
            prop_assert!(sum.approx_eq(&(&ga + &gb), scale));
            let prod = eval_germ::<C64>(&Expr::mul(a.clone(), b.clone()), &ctx, 2).unwrap();
            prop_assert!(prod.approx_eq(&(&ga * &gb), scale));
            let conj = eval_germ::<C64>(&Expr::conj(a), &ctx, 2).unwrap();
            prop_assert!(conj.approx_eq(&ga.involute(), scale));
        }
    }
}
