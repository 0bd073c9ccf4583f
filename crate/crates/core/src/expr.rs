//! Rational-polynomial expressions over the players' decision variables.
//!
//! The grammar is
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' integer)*
//! atom   := number | variable | '(' expr ')'
//! ```
//!
//! Variables are named `x<p>` for one-dimensional players and `x<p>_<i>`
//! otherwise (both 1-based). Derivatives are produced symbolically, so a
//! gradient or Hessian entry is itself an [`Expr`] that can be printed and
//! inspected. Simplification stops at constant folding and zero/one
//! elimination.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::Range;

use thiserror::Error;

use crate::numerics::DenseMatrix;

/// Denominators with magnitude at or below this value are a division by zero.
pub const DIVISION_EPS: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown variable `{name}`")]
    UnknownVariable { name: String },
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
}

/// Layout of the stacked strategy vector `x = (x^1, ..., x^N)`.
///
/// Flat indices are contiguous and grouped by player in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableTable {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    names: Vec<String>,
}

impl VariableTable {
    /// Returns `None` when there are no players or some player has no variables.
    pub fn new(dims: &[usize]) -> Option<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return None;
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut names = Vec::new();
        let mut acc = 0;
        for (p, &d) in dims.iter().enumerate() {
            offsets.push(acc);
            for i in 0..d {
                names.push(if d == 1 {
                    format!("x{}", p + 1)
                } else {
                    format!("x{}_{}", p + 1, i + 1)
                });
            }
            acc += d;
        }
        Some(Self {
            dims: dims.to_vec(),
            offsets,
            names,
        })
    }

    /// Total dimension `n`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn players(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, player: usize) -> usize {
        self.dims[player]
    }

    pub fn block(&self, player: usize) -> Range<usize> {
        self.offsets[player]..self.offsets[player] + self.dims[player]
    }

    /// Player owning a flat index.
    pub fn owner(&self, index: usize) -> usize {
        self.offsets.partition_point(|&o| o <= index) - 1
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Some(i);
        }
        // `x<p>_1` is accepted for a one-dimensional player
        let rest = name.strip_prefix('x')?;
        let (p, i) = rest.split_once('_')?;
        let (p, i): (usize, usize) = (p.parse().ok()?, i.parse().ok()?);
        if p >= 1 && p <= self.players() && i == 1 && self.dims[p - 1] == 1 {
            return Some(self.offsets[p - 1]);
        }
        None
    }
}

/// Expression tree. `Var` holds a flat index into a [`VariableTable`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn parse(text: &str, vars: &VariableTable) -> Result<Expr, ExprError> {
        Parser::new(text, vars)?.parse_all()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.evaluate(x)?,
            Expr::Add(a, b) => a.evaluate(x)? + b.evaluate(x)?,
            Expr::Sub(a, b) => a.evaluate(x)? - b.evaluate(x)?,
            Expr::Mul(a, b) => a.evaluate(x)? * b.evaluate(x)?,
            Expr::Div(a, b) => {
                let den = b.evaluate(x)?;
                if den.abs() <= DIVISION_EPS {
                    return Err(EvalError::DivisionByZero);
                }
                a.evaluate(x)? / den
            }
            Expr::Pow(a, k) => a.evaluate(x)?.powi(*k as i32),
        })
    }

    /// Symbolic partial derivative with respect to flat variable `var`.
    pub fn differentiate(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.differentiate(var)),
            Expr::Add(a, b) => add(a.differentiate(var), b.differentiate(var)),
            Expr::Sub(a, b) => sub(a.differentiate(var), b.differentiate(var)),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(var), (**b).clone()),
                mul((**a).clone(), b.differentiate(var)),
            ),
            Expr::Div(a, b) => {
                let num = sub(
                    mul(a.differentiate(var), (**b).clone()),
                    mul((**a).clone(), b.differentiate(var)),
                );
                div(num, pow((**b).clone(), 2))
            }
            Expr::Pow(a, k) => match k {
                0 => Expr::Const(0.0),
                _ => mul(
                    mul(Expr::Const(*k as f64), pow((**a).clone(), k - 1)),
                    a.differentiate(var),
                ),
            },
        }
    }

    /// Flat indices of the variables occurring in the tree.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                out.insert(*i);
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Rebuilds the tree with every numeric literal passed through `f`.
    /// Integer exponents are structural and left alone.
    pub fn map_constants(&self, f: &mut impl FnMut(f64) -> f64) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(f(*c)),
            Expr::Var(i) => Expr::Var(*i),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_constants(f))),
            Expr::Add(a, b) => {
                let a = a.map_constants(f);
                Expr::Add(Box::new(a), Box::new(b.map_constants(f)))
            }
            Expr::Sub(a, b) => {
                let a = a.map_constants(f);
                Expr::Sub(Box::new(a), Box::new(b.map_constants(f)))
            }
            Expr::Mul(a, b) => {
                let a = a.map_constants(f);
                Expr::Mul(Box::new(a), Box::new(b.map_constants(f)))
            }
            Expr::Div(a, b) => {
                let a = a.map_constants(f);
                Expr::Div(Box::new(a), Box::new(b.map_constants(f)))
            }
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.map_constants(f)), *k),
        }
    }

    /// Source text that parses back to an evaluation-equivalent tree.
    pub fn to_source(&self, vars: &VariableTable) -> String {
        let mut s = String::new();
        self.write_source(vars, 0, &mut s);
        s
    }

    // precedence: 1 = sum, 2 = product, 3 = unary, 4 = power operand
    fn write_source(&self, vars: &VariableTable, ctx: u8, out: &mut String) {
        let (prec, body) = match self {
            Expr::Const(c) => {
                if *c < 0.0 {
                    let _ = write!(out, "({c:?})");
                } else {
                    let _ = write!(out, "{c:?}");
                }
                return;
            }
            Expr::Var(i) => {
                out.push_str(vars.name(*i));
                return;
            }
            Expr::Neg(_) => (3, ()),
            Expr::Add(..) | Expr::Sub(..) => (1, ()),
            Expr::Mul(..) | Expr::Div(..) => (2, ()),
            Expr::Pow(..) => (4, ()),
        };
        let _ = body;
        let paren = prec < ctx || (prec == 4 && ctx == 4);
        if paren {
            out.push('(');
        }
        match self {
            Expr::Neg(a) => {
                out.push('-');
                a.write_source(vars, 3, out);
            }
            Expr::Add(a, b) => {
                a.write_source(vars, 1, out);
                out.push_str(" + ");
                b.write_source(vars, 2, out);
            }
            Expr::Sub(a, b) => {
                a.write_source(vars, 1, out);
                out.push_str(" - ");
                b.write_source(vars, 2, out);
            }
            Expr::Mul(a, b) => {
                a.write_source(vars, 2, out);
                out.push('*');
                b.write_source(vars, 3, out);
            }
            Expr::Div(a, b) => {
                a.write_source(vars, 2, out);
                out.push('/');
                b.write_source(vars, 3, out);
            }
            Expr::Pow(a, k) => {
                a.write_source(vars, 4, out);
                let _ = write!(out, "^{k}");
            }
            Expr::Const(_) | Expr::Var(_) => unreachable!(),
        }
        if paren {
            out.push(')');
        }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (a, b) if b.is_zero() => a,
        (a, b) if a.is_zero() => b,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (a, b) if b.is_zero() => a,
        (a, b) if a.is_zero() => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (a, b) if a.is_zero() || b.is_zero() => Expr::Const(0.0),
        (Expr::Const(c), b) if c == 1.0 => b,
        (a, Expr::Const(c)) if c == 1.0 => a,
        (Expr::Const(c), b) if c == -1.0 => neg(b),
        (a, Expr::Const(c)) if c == -1.0 => neg(a),
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if a.is_zero() => Expr::Const(0.0),
        (a, Expr::Const(c)) if c == 1.0 => a,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, k: u32) -> Expr {
    match (a, k) {
        (_, 0) => Expr::Const(1.0),
        (a, 1) => a,
        (Expr::Const(c), k) => Expr::Const(c.powi(k as i32)),
        (a, k) => Expr::Pow(Box::new(a), k),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(u32),
    Ident(String),
    Op(char),
    End,
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    vars: &'a VariableTable,
}

impl<'a> Parser<'a> {
    fn new(text: &str, vars: &'a VariableTable) -> Result<Self, ExprError> {
        let toks = tokenize(text)?;
        Ok(Self { toks, pos: 0, vars })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn at(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            position: self.at(),
            message: message.into(),
        }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::End {
            return Err(self.error("empty expression"));
        }
        let e = self.expr()?;
        match self.peek() {
            Tok::End => Ok(e),
            t => Err(self.error(format!("expected operator or end of input, found {t:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.atom()?;
        while *self.peek() == Tok::Op('^') {
            self.bump();
            match self.bump() {
                Tok::Int(k) => base = Expr::Pow(Box::new(base), k),
                _ => {
                    self.pos = self.pos.saturating_sub(1);
                    return Err(self.error("expected a nonnegative integer exponent"));
                }
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::Int(k) => {
                self.bump();
                Ok(Expr::Const(k as f64))
            }
            Tok::Ident(name) => {
                let idx = self
                    .vars
                    .lookup(&name)
                    .ok_or(ExprError::UnknownVariable { name })?;
                self.bump();
                Ok(Expr::Var(idx))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::Op(')') {
                    return Err(self.error("expected `)`"));
                }
                self.bump();
                Ok(e)
            }
            Tok::End => Err(self.error("unexpected end of input, expected number, variable or `(`")),
            t => Err(self.error(format!("expected number, variable or `(`, found {t:?}"))),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                j += 1;
            }
            if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                let mut k = j + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let lit = &text[i..j];
            let tok = if lit.bytes().all(|b| b.is_ascii_digit()) {
                match lit.parse::<u32>() {
                    Ok(k) => Tok::Int(k),
                    Err(_) => Tok::Num(lit.parse().map_err(|_| ExprError::Syntax {
                        position: start,
                        message: format!("malformed number `{lit}`"),
                    })?),
                }
            } else {
                Tok::Num(lit.parse().map_err(|_| ExprError::Syntax {
                    position: start,
                    message: format!("malformed number `{lit}`"),
                })?)
            };
            out.push((start, tok));
            i = j;
        } else if c.is_ascii_alphabetic() {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            out.push((start, Tok::Ident(text[i..j].to_string())));
            i = j;
        } else if "+-*/^()".contains(c) {
            out.push((start, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                position: start,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

/// An expression together with its symbolic gradient and Hessian.
///
/// Hessian entries are generated for `i <= j` only and mirrored, so the
/// evaluated matrix is exactly symmetric.
#[derive(Debug, Clone)]
pub struct DiffExpr {
    expr: Expr,
    gradient: Vec<Expr>,
    hessian_upper: Vec<Expr>,
    n: usize,
}

impl DiffExpr {
    pub fn new(expr: Expr, n: usize) -> Self {
        let gradient: Vec<Expr> = (0..n).map(|i| expr.differentiate(i)).collect();
        let mut hessian_upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                hessian_upper.push(gradient[i].differentiate(j));
            }
        }
        Self {
            expr,
            gradient,
            hessian_upper,
            n,
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn partial(&self, var: usize) -> &Expr {
        &self.gradient[var]
    }

    pub fn second_partial(&self, i: usize, j: usize) -> &Expr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // row-major upper triangle offset
        let k = i * self.n - i * (i + 1) / 2 + j;
        &self.hessian_upper[k]
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.expr.evaluate(x)
    }

    /// Full gradient in `R^n`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.gradient.iter().map(|g| g.evaluate(x)).collect()
    }

    /// Gradient restricted to the coordinates in `block`.
    pub fn gradient_block(&self, x: &[f64], block: Range<usize>) -> Result<Vec<f64>, EvalError> {
        self.gradient[block].iter().map(|g| g.evaluate(x)).collect()
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DenseMatrix, EvalError> {
        let mut h = DenseMatrix::zeros(self.n, self.n);
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.hessian_upper[k].evaluate(x)?;
                h[(i, j)] = v;
                h[(j, i)] = v;
                k += 1;
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table2() -> VariableTable {
        VariableTable::new(&[1, 1]).unwrap()
    }

    #[test]
    fn variable_table_layout() {
        let t = VariableTable::new(&[2, 1]).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.names(), &["x1_1", "x1_2", "x2"]);
        assert_eq!(t.block(1), 2..3);
        assert_eq!(t.owner(1), 0);
        assert_eq!(t.owner(2), 1);
        assert_eq!(t.lookup("x2_1"), Some(2));
        assert_eq!(t.lookup("x1"), None);
        assert!(VariableTable::new(&[]).is_none());
        assert!(VariableTable::new(&[1, 0]).is_none());
    }

    #[test]
    fn parses_and_evaluates() {
        let t = table2();
        let g = Expr::parse("1 - x1 - x2", &t).unwrap();
        assert_eq!(g.evaluate(&[0.5, 0.5]).unwrap(), 0.0);
        let c = Expr::parse("0", &t).unwrap();
        assert_eq!(c.evaluate(&[7.0, -3.0]).unwrap(), 0.0);
        let sq = Expr::parse("(x1 - x2)^2", &t).unwrap();
        assert_eq!(sq.evaluate(&[3.0, 1.0]).unwrap(), 4.0);
        let g2 = Expr::parse("1 - x1", &t).unwrap();
        assert_eq!(g2.evaluate(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let t = table2();
        let e = Expr::parse("-x1^2 + 2*x2/4", &t).unwrap();
        assert_eq!(e.evaluate(&[3.0, 2.0]).unwrap(), -9.0 + 1.0);
        let e = Expr::parse("2^3^2", &t).unwrap();
        assert_eq!(e.evaluate(&[0.0, 0.0]).unwrap(), 64.0);
        let e = Expr::parse("1.5e-1 * 2E1", &t).unwrap();
        assert!((e.evaluate(&[0.0, 0.0]).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let t = table2();
        assert_eq!(
            Expr::parse("x1 + * x2", &t),
            Err(ExprError::Syntax {
                position: 5,
                message: "expected number, variable or `(`, found Op('*')".into()
            })
        );
        assert!(matches!(
            Expr::parse("(x1", &t),
            Err(ExprError::Syntax { position: 3, .. })
        ));
        assert!(matches!(
            Expr::parse("x1^2.5", &t),
            Err(ExprError::Syntax { position: 3, .. })
        ));
        assert!(matches!(Expr::parse("", &t), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            Expr::parse("x1 $ 2", &t),
            Err(ExprError::Syntax { position: 3, .. })
        ));
        assert_eq!(
            Expr::parse("x3 + 1", &t),
            Err(ExprError::UnknownVariable { name: "x3".into() })
        );
    }

    #[test]
    fn division_by_zero_is_reported() {
        let t = table2();
        let e = Expr::parse("1/(x1 - x2)", &t).unwrap();
        assert_eq!(e.evaluate(&[1.0, 1.0]), Err(EvalError::DivisionByZero));
        assert_eq!(e.evaluate(&[2.0, 1.0]), Ok(1.0));
    }

    #[test]
    fn derivative_examples() {
        let t = table2();
        let sq = Expr::parse("(x1 - x2)^2", &t).unwrap();
        assert_eq!(sq.differentiate(0).evaluate(&[0.0, 0.0]).unwrap(), 0.0);
        let f2 = Expr::parse("-x2 + (1/2)*x1*x2", &t).unwrap();
        assert_eq!(f2.differentiate(1).evaluate(&[1.0, 0.0]).unwrap(), -0.5);
        let c = Expr::parse("3.25", &t).unwrap();
        assert_eq!(c.differentiate(0), Expr::Const(0.0));
        let q = Expr::parse("x1/x2", &t).unwrap();
        // d/dx2 (x1/x2) = -x1/x2^2
        assert_eq!(q.differentiate(1).evaluate(&[3.0, 2.0]).unwrap(), -0.75);
    }

    #[test]
    fn bilinear_hessian() {
        let t = table2();
        let d = DiffExpr::new(Expr::parse("x1*x2", &t).unwrap(), 2);
        let h = d.hessian(&[0.3, -1.7]).unwrap();
        assert_eq!(h.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let g = DiffExpr::new(Expr::parse("1 - x1 - x2", &t).unwrap(), 2);
        assert_eq!(g.gradient(&[2.0 / 3.0, 1.0 / 3.0]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(g.gradient_block(&[0.0, 0.0], 1..2).unwrap(), vec![-1.0]);
    }

    #[test]
    fn source_round_trip_examples() {
        let t = VariableTable::new(&[2, 1]).unwrap();
        for src in [
            "1 - (x1_1 - x2)^2 - (x1_2 - (1 - 2*x2))^2",
            "-x1_1",
            "-(x1_1 - x2)^3 / (1 + x1_2^2)",
            "x1_1 - (x1_2 - x2) - -3",
            "(-2)^2*x2",
        ] {
            let e = Expr::parse(src, &t).unwrap();
            let back = Expr::parse(&e.to_source(&t), &t).unwrap();
            for x in [[0.1, -0.7, 1.3], [1.0, 2.0, -0.5]] {
                assert_eq!(e.evaluate(&x).unwrap(), back.evaluate(&x).unwrap(), "{src}");
            }
        }
    }

    #[test]
    fn map_constants_leaves_exponents() {
        let t = table2();
        let e = Expr::parse("2*x1^3 - 1", &t).unwrap();
        let m = e.map_constants(&mut |c| c * 10.0);
        assert_eq!(m.evaluate(&[1.0, 0.0]).unwrap(), 20.0 - 10.0);
    }
}
