//! Infix expressions over the builtin systems.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};

use num::{BigRational, One, Signed, Zero};

use super::builtins::{self, builtin_system};
use crate::error::{Error, Result};
use crate::names::{parse_rational, RationalApprox, RealName};
use crate::operator_terms::FunctionOracle;
use crate::systems::{name_oracles, ConditionalSystem};
use crate::Nat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Recip,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 8] = [
        UnaryOp::Neg,
        UnaryOp::Recip,
        UnaryOp::Sqrt,
        UnaryOp::Exp,
        UnaryOp::Ln,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Recip => "recip",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryOp> {
        UnaryOp::ALL.into_iter().find(|op| op.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(BigRational),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn lit(c: BigRational) -> Expr {
        Expr::Lit(c)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Free variables in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
            match e {
                Expr::Lit(_) => {}
                Expr::Var(v) => {
                    if seen.insert(v.clone()) {
                        out.push(v.clone());
                    }
                }
                Expr::Unary(_, a) => walk(a, seen, out),
                Expr::Binary(_, a, b) => {
                    walk(a, seen, out);
                    walk(b, seen, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut BTreeSet::new(), &mut out);
        out
    }

    /// Rewrites `a − b` to `a + neg(b)` and `a / b` to `a · recip(b)`, then
    /// folds operations whose arguments are all literals.
    pub fn desugar(&self) -> Expr {
        match self {
            Expr::Lit(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => fold_unary(*op, a.desugar()),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.desugar(), b.desugar());
                match op {
                    BinaryOp::Add => fold_binary(BinaryOp::Add, a, b),
                    BinaryOp::Mul => fold_binary(BinaryOp::Mul, a, b),
                    BinaryOp::Sub => fold_binary(BinaryOp::Add, a, fold_unary(UnaryOp::Neg, b)),
                    BinaryOp::Div => fold_binary(BinaryOp::Mul, a, fold_unary(UnaryOp::Recip, b)),
                }
            }
        }
    }

    /// Evaluates with rational arithmetic only; `None` when a
    /// transcendental or undefined operation is reached.
    pub fn eval_rational(&self, env: &dyn Fn(&str) -> Option<BigRational>) -> Option<BigRational> {
        match self {
            Expr::Lit(c) => Some(c.clone()),
            Expr::Var(v) => env(v),
            Expr::Unary(op, a) => rational_unary(*op, &a.eval_rational(env)?),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval_rational(env)?, b.eval_rational(env)?);
                match op {
                    BinaryOp::Add => Some(a + b),
                    BinaryOp::Sub => Some(a - b),
                    BinaryOp::Mul => Some(a * b),
                    BinaryOp::Div => (!b.is_zero()).then(|| a / b),
                }
            }
        }
    }

    /// Subexpressions in preorder; the index is the node id used by traces.
    pub fn preorder(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            match e {
                Expr::Unary(_, a) => stack.push(a),
                Expr::Binary(_, a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                _ => {}
            }
        }
        out
    }

    fn label(&self) -> String {
        match self {
            Expr::Lit(c) => format!("{c}"),
            Expr::Var(v) => v.clone(),
            Expr::Unary(op, _) => op.name().to_string(),
            Expr::Binary(op, _, _) => op.symbol().to_string(),
        }
    }
}

fn rational_unary(op: UnaryOp, a: &BigRational) -> Option<BigRational> {
    match op {
        UnaryOp::Neg => Some(-a),
        UnaryOp::Abs => Some(a.abs()),
        UnaryOp::Recip => (!a.is_zero()).then(|| a.recip()),
        _ => None,
    }
}

fn fold_unary(op: UnaryOp, a: Expr) -> Expr {
    if let Expr::Lit(c) = &a {
        if let Some(v) = rational_unary(op, c) {
            return Expr::Lit(v);
        }
    }
    Expr::unary(op, a)
}

fn fold_binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    match (op, &a, &b) {
        (BinaryOp::Add, Expr::Lit(x), Expr::Lit(y)) => Expr::Lit(x + y),
        (BinaryOp::Mul, Expr::Lit(x), Expr::Lit(y)) => Expr::Lit(x * y),
        (BinaryOp::Mul, Expr::Lit(x), _) if x.is_one() => b,
        (BinaryOp::Mul, _, Expr::Lit(y)) if y.is_one() => a,
        _ => Expr::binary(op, a, b),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(c) if c.is_negative() => write!(f, "({c})"),
            Expr::Lit(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().unwrap().len_utf8();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(Error::syntax(self.pos, format!("expected `{c}`")))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinaryOp::Add,
                Some('-') | Some('−') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += self.peek().unwrap().len_utf8();
            lhs = Expr::binary(op, lhs, self.product()?);
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.prefix()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinaryOp::Mul,
                Some('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::binary(op, lhs, self.prefix()?);
        }
    }

    fn prefix(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c @ ('-' | '−')) => {
                self.pos += c.len_utf8();
                Ok(Expr::unary(UnaryOp::Neg, self.prefix()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                let len = self.src[start..]
                    .find(|c: char| !(c.is_ascii_digit() || c == '.'))
                    .unwrap_or(self.src.len() - start);
                self.pos += len;
                let text = &self.src[start..self.pos];
                parse_rational(text).map(Expr::Lit).map_err(|_| Error::syntax(start, format!("bad number `{text}`")))
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                let len = self.src[start..]
                    .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                    .unwrap_or(self.src.len() - start);
                self.pos += len;
                let ident = &self.src[start..self.pos];
                if self.peek() == Some('(') {
                    let op = UnaryOp::from_name(ident)
                        .ok_or_else(|| Error::syntax(start, format!("unknown function `{ident}`")))?;
                    self.pos += 1;
                    let arg = self.sum()?;
                    self.expect(')')?;
                    Ok(Expr::unary(op, arg))
                } else {
                    Ok(Expr::var(ident))
                }
            }
            Some(c) => Err(Error::syntax(start.max(self.pos), format!("unexpected `{c}`"))),
            None => Err(Error::syntax(self.pos, "unexpected end of expression")),
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.sum()?;
    if let Some(c) = p.peek() {
        return Err(Error::syntax(p.pos, format!("unexpected `{c}`")));
    }
    Ok(e)
}

/// Compiles `expr` into a system whose `j`-th argument is `vars[j]`.
pub fn compile_expression(expr: &Expr, vars: &[String]) -> Result<ConditionalSystem> {
    compile_node(&expr.desugar(), vars)
}

fn compile_node(e: &Expr, vars: &[String]) -> Result<ConditionalSystem> {
    let k = vars.len();
    match e {
        Expr::Lit(c) => Ok(ConditionalSystem::from_uniform(&builtins::constant(k, c))),
        Expr::Var(v) => {
            let j = vars.iter().position(|x| x == v).ok_or_else(|| Error::UnboundVariable(v.clone()))?;
            ConditionalSystem::projection(k, j + 1)
        }
        Expr::Unary(op, a) => ConditionalSystem::compose(&builtin_system(op.name())?, &[compile_node(a, vars)?]),
        Expr::Binary(op, a, b) => {
            let outer = match op {
                BinaryOp::Add => builtin_system("add")?,
                BinaryOp::Mul => builtin_system("mul")?,
                _ => return compile_node(&e.desugar(), vars),
            };
            ConditionalSystem::compose(&outer, &[compile_node(a, vars)?, compile_node(b, vars)?])
        }
    }
}

/// One line of an evaluation trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    pub node: usize,
    pub label: String,
    pub s: Nat,
    /// Largest argument index read by `E` at `s`.
    pub d0: Nat,
    /// Largest argument index read by `F`, `G`, `H` at `(s, t)`.
    pub d: Nat,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node={} s={} d0={} d={}", self.node, self.s, self.d0, self.d)
    }
}

/// Where an evaluation failed because no parameter was found.
#[derive(Clone, Debug)]
pub struct Stuck {
    pub node: usize,
    pub label: String,
    pub budget: u64,
}

fn recording(oracles: &[FunctionOracle], max: &Arc<Mutex<Option<Nat>>>) -> Vec<FunctionOracle> {
    oracles
        .iter()
        .map(|o| {
            let (o, max) = (o.clone(), max.clone());
            FunctionOracle::new(move |x| {
                let mut m = max.lock().unwrap();
                if m.as_ref().is_none_or(|m| x > m) {
                    *m = Some(x.clone());
                }
                drop(m);
                o.call(x)
            })
        })
        .collect()
}

fn max_read(cell: &Arc<Mutex<Option<Nat>>>) -> Nat {
    cell.lock().unwrap().take().unwrap_or_default()
}

/// A compiled expression with its variable order.
#[derive(Clone)]
pub struct Compiled {
    pub expr: Expr,
    pub vars: Vec<String>,
    pub system: ConditionalSystem,
}

impl Compiled {
    pub fn new(expr: &Expr, vars: &[String]) -> Result<Compiled> {
        let expr = expr.desugar();
        let system = compile_node(&expr, vars)?;
        Ok(Compiled { expr, vars: vars.to_vec(), system })
    }

    pub fn eval(&self, names: &[RealName], t: &Nat, budget: u64) -> Result<RationalApprox> {
        self.system.eval(names, t, budget)
    }

    /// Evaluates every subexpression (innermost first) and reports its
    /// parameter and read indices. Stops at the first node with no parameter.
    pub fn trace(&self, names: &[RealName], t: &Nat, budget: u64) -> std::result::Result<Vec<TraceLine>, Stuck> {
        let oracles = name_oracles(names);
        let nodes = self.expr.preorder();
        let mut lines = Vec::with_capacity(nodes.len());
        for (id, node) in nodes.iter().enumerate().rev() {
            let stuck = || Stuck { node: id, label: node.label(), budget };
            let sys = compile_node(node, &self.vars).map_err(|_| stuck())?;
            let cell = Arc::new(Mutex::new(None));
            let s = sys.find_parameter_with(&oracles, budget).map_err(|_| stuck())?;
            sys.eval_e(&recording(&oracles, &cell), &s).map_err(|_| stuck())?;
            let d0 = max_read(&cell);
            sys.eval_with_parameter_oracles(&recording(&oracles, &cell), &s, t).map_err(|_| stuck())?;
            let d = max_read(&cell);
            lines.push(TraceLine { node: id, label: node.label(), s, d0, d });
        }
        lines.sort_by_key(|l| l.node);
        Ok(lines)
    }
}
