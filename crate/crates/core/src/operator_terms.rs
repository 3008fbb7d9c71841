//! Substitutional operator terms over function oracles.
//!
//! A term is built from the numeric variable `x`, oracle applications
//! `f_k(·)` and base functions. Terms are DAGs: shared subterms are
//! evaluated once per evaluation.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num::Zero;

use crate::base_dsl::{parse_base_sexp, BaseFunction, NativeRegistry};
use crate::error::{Error, Result};
use crate::sexp::{parse_one, Sexp};
use crate::Nat;

type UnaryFn = Arc<dyn Fn(&Nat) -> Nat + Send + Sync>;

/// A total unary function on naturals, optionally with a monotone majorant.
#[derive(Clone)]
pub struct FunctionOracle {
    eval: UnaryFn,
    majorant: Option<UnaryFn>,
}

impl fmt::Debug for FunctionOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionOracle")
            .field("has_majorant", &self.majorant.is_some())
            .finish()
    }
}

impl FunctionOracle {
    pub fn new(eval: impl Fn(&Nat) -> Nat + Send + Sync + 'static) -> Self {
        FunctionOracle {
            eval: Arc::new(eval),
            majorant: None,
        }
    }

    pub fn with_majorant(mut self, majorant: impl Fn(&Nat) -> Nat + Send + Sync + 'static) -> Self {
        self.majorant = Some(Arc::new(majorant));
        self
    }

    /// A monotone oracle serving as its own majorant.
    pub fn monotone(eval: impl Fn(&Nat) -> Nat + Send + Sync + 'static) -> Self {
        let eval: UnaryFn = Arc::new(eval);
        FunctionOracle {
            eval: eval.clone(),
            majorant: Some(eval),
        }
    }

    /// `ŝ = λx.s`.
    pub fn constant(s: Nat) -> Self {
        Self::monotone(move |_| s.clone())
    }

    pub fn identity() -> Self {
        Self::monotone(|x| x.clone())
    }

    /// A unary base function as an oracle; its structural majorant is attached when available.
    pub fn from_base(f: BaseFunction) -> Result<Self> {
        if f.arity() != 1 {
            return Err(Error::arity(f.to_string(), 1, f.arity()));
        }
        let has_majorant = f.majorant_eval(&[Nat::zero()]).is_ok();
        let g = f.clone();
        let mut oracle = Self::new(move |x| g.eval_unchecked(std::slice::from_ref(x)));
        if has_majorant {
            oracle.majorant = Some(Arc::new(move |x| {
                f.majorant_unchecked(std::slice::from_ref(x)).expect("majorant checked at construction")
            }));
        }
        Ok(oracle)
    }

    pub fn call(&self, x: &Nat) -> Nat {
        (self.eval)(x)
    }

    pub fn call_u64(&self, x: u64) -> Nat {
        (self.eval)(&Nat::from(x))
    }

    pub fn majorant(&self, x: &Nat) -> Option<Nat> {
        self.majorant.as_ref().map(|m| m(x))
    }

    pub fn has_majorant(&self) -> bool {
        self.majorant.is_some()
    }

    /// The same oracle with a shared result cache.
    pub fn memoized(self) -> Self {
        let cache: Arc<Mutex<HashMap<Nat, Nat>>> = Arc::default();
        let inner = self.eval.clone();
        FunctionOracle {
            eval: Arc::new(move |x| {
                if let Some(v) = cache.lock().unwrap().get(x) {
                    return v.clone();
                }
                let v = inner(x);
                cache.lock().unwrap().insert(x.clone(), v.clone());
                v
            }),
            majorant: self.majorant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// The numeric argument `x` of the operator.
    Var,
    /// `f_k(arg)`, with `k` counted from 1.
    Apply(usize, Arc<Node>),
    Base(BaseFunction, Vec<Arc<Node>>),
}

impl Node {
    pub fn var() -> Arc<Node> {
        Arc::new(Node::Var)
    }

    pub fn apply(k: usize, arg: Arc<Node>) -> Arc<Node> {
        Arc::new(Node::Apply(k, arg))
    }

    pub fn base(f: BaseFunction, args: Vec<Arc<Node>>) -> Result<Arc<Node>> {
        if f.arity() != args.len() {
            return Err(Error::arity(f.to_string(), f.arity(), args.len()));
        }
        Ok(Arc::new(Node::Base(f, args)))
    }

    /// `f_k(x)`.
    pub fn read(k: usize) -> Arc<Node> {
        Self::apply(k, Self::var())
    }
}

fn key(node: &Arc<Node>) -> *const Node {
    Arc::as_ptr(node)
}

/// An `n`-operator given by a term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorTerm {
    arity: usize,
    root: Arc<Node>,
}

impl OperatorTerm {
    pub fn new(arity: usize, root: Arc<Node>) -> Result<Self> {
        fn check(node: &Node, arity: usize) -> Result<()> {
            match node {
                Node::Var => Ok(()),
                Node::Apply(k, arg) => {
                    if *k == 0 || *k > arity {
                        return Err(Error::Invalid(format!(
                            "oracle index {k} out of range 1..={arity}"
                        )));
                    }
                    check(arg, arity)
                }
                Node::Base(f, args) => {
                    if f.arity() != args.len() {
                        return Err(Error::arity(f.to_string(), f.arity(), args.len()));
                    }
                    args.iter().try_for_each(|a| check(a, arity))
                }
            }
        }
        check(&root, arity)?;
        Ok(OperatorTerm { arity, root })
    }

    /// The identity operator `F(f⃗)(x) = x`.
    pub fn identity(arity: usize) -> Self {
        OperatorTerm {
            arity,
            root: Node::var(),
        }
    }

    /// `F(f⃗)(x) = f_k(x)`.
    pub fn read(arity: usize, k: usize) -> Result<Self> {
        Self::new(arity, Node::read(k))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> &Arc<Node> {
        &self.root
    }

    /// True when no `Apply` node refers to oracle `k`.
    pub fn ignores(&self, k: usize) -> bool {
        let mut seen = std::collections::HashSet::new();
        fn walk(node: &Arc<Node>, k: usize, seen: &mut std::collections::HashSet<*const Node>) -> bool {
            if !seen.insert(key(node)) {
                return true;
            }
            match &**node {
                Node::Var => true,
                Node::Apply(j, arg) => *j != k && walk(arg, k, seen),
                Node::Base(_, args) => args.iter().all(|a| walk(a, k, seen)),
            }
        }
        walk(&self.root, k, &mut seen)
    }

    /// Same term, read as an operator of larger arity.
    pub fn widen(&self, arity: usize) -> Result<Self> {
        if arity < self.arity {
            return Err(Error::arity("widen", self.arity, arity));
        }
        Ok(OperatorTerm {
            arity,
            root: self.root.clone(),
        })
    }

    /// Every base function occurring in the term.
    pub fn base_functions(&self) -> Vec<BaseFunction> {
        let mut out: Vec<BaseFunction> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        fn walk(node: &Arc<Node>, out: &mut Vec<BaseFunction>, seen: &mut std::collections::HashSet<*const Node>) {
            if !seen.insert(key(node)) {
                return;
            }
            match &**node {
                Node::Var => {}
                Node::Apply(_, arg) => walk(arg, out, seen),
                Node::Base(f, args) => {
                    out.push(f.clone());
                    for a in args {
                        walk(a, out, seen);
                    }
                }
            }
        }
        walk(&self.root, &mut out, &mut seen);
        out
    }

    /// Every native referenced by the term's base functions, deduplicated by name.
    pub fn natives(&self) -> Vec<BaseFunction> {
        let mut out = Vec::new();
        for f in self.base_functions() {
            f.collect_natives(&mut out);
        }
        out
    }

    pub fn eval(&self, oracles: &[FunctionOracle], x: &Nat) -> Result<Nat> {
        if oracles.len() != self.arity {
            return Err(Error::arity("operator oracles", self.arity, oracles.len()));
        }
        let mut session = EvalSession::new(oracles, x);
        Ok(session.eval(&self.root))
    }

    pub fn eval_u64(&self, oracles: &[FunctionOracle], x: u64) -> Result<Nat> {
        self.eval(oracles, &Nat::from(x))
    }

    /// Upper bound on the value at `x` when every oracle is majorized by `g`.
    pub fn bound_eval(&self, g: &FunctionOracle, x: &Nat) -> Result<Nat> {
        Ok(Bounder::new(g, x).bound(&self.root)?.0)
    }

    /// `Ω(g)(x)`: oracles majorized by monotone `g` that agree on `0..=Ω(g)(x)`
    /// give equal values at `x`.
    pub fn modulus(&self, g: &FunctionOracle, x: &Nat) -> Result<Nat> {
        let mut bounder = Bounder::new(g, x);
        let (_, z) = bounder.bound(&self.root)?;
        bounder.check_monotone()?;
        Ok(z)
    }

    /// The modulus as a 1-operator term over the majorant oracle.
    pub fn modulus_term(&self) -> Result<OperatorTerm> {
        let max = NativeRegistry::std("max");
        let zero = Node::base(BaseFunction::zero(1), vec![Node::var()])?;
        let mut memo: HashMap<*const Node, (Arc<Node>, Arc<Node>)> = HashMap::new();
        fn go(
            node: &Arc<Node>,
            max: &BaseFunction,
            zero: &Arc<Node>,
            memo: &mut HashMap<*const Node, (Arc<Node>, Arc<Node>)>,
        ) -> Result<(Arc<Node>, Arc<Node>)> {
            if let Some(hit) = memo.get(&key(node)) {
                return Ok(hit.clone());
            }
            let out = match &**node {
                Node::Var => (node.clone(), zero.clone()),
                Node::Apply(_, arg) => {
                    let (vb, z) = go(arg, max, zero, memo)?;
                    let z = max_node(max, z, vb.clone())?;
                    (Node::apply(1, vb), z)
                }
                Node::Base(f, args) => {
                    let mut vbs = Vec::with_capacity(args.len());
                    let mut z = zero.clone();
                    for a in args {
                        let (vb, za) = go(a, max, zero, memo)?;
                        vbs.push(vb);
                        z = if Arc::ptr_eq(&z, zero) { za } else { max_node(max, z, za)? };
                    }
                    (Node::base(f.majorant_function()?, vbs)?, z)
                }
            };
            memo.insert(key(node), out.clone());
            Ok(out)
        }
        fn max_node(max: &BaseFunction, a: Arc<Node>, b: Arc<Node>) -> Result<Arc<Node>> {
            Node::base(max.clone(), vec![a, b])
        }
        let (_, z) = go(&self.root, &max, &zero, &mut memo)?;
        OperatorTerm::new(1, z)
    }

    /// Replaces every `Var` by `arg` and every `Apply(k, ·)` by `on_apply(k, ·)`.
    pub(crate) fn rewrite(
        root: &Arc<Node>,
        var: &Arc<Node>,
        on_apply: &mut dyn FnMut(usize, Arc<Node>) -> Result<Arc<Node>>,
    ) -> Result<Arc<Node>> {
        let mut memo: HashMap<*const Node, Arc<Node>> = HashMap::new();
        fn go(
            node: &Arc<Node>,
            var: &Arc<Node>,
            on_apply: &mut dyn FnMut(usize, Arc<Node>) -> Result<Arc<Node>>,
            memo: &mut HashMap<*const Node, Arc<Node>>,
        ) -> Result<Arc<Node>> {
            if let Some(hit) = memo.get(&key(node)) {
                return Ok(hit.clone());
            }
            let out = match &**node {
                Node::Var => var.clone(),
                Node::Apply(k, arg) => {
                    let arg = go(arg, var, on_apply, memo)?;
                    on_apply(*k, arg)?
                }
                Node::Base(f, args) => {
                    let args = args
                        .iter()
                        .map(|a| go(a, var, on_apply, memo))
                        .collect::<Result<Vec<_>>>()?;
                    Arc::new(Node::Base(f.clone(), args))
                }
            };
            memo.insert(key(node), out.clone());
            Ok(out)
        }
        go(root, var, on_apply, &mut memo)
    }

    /// The term with its variable bound to `arg` (oracle references kept).
    pub fn instantiate(&self, arg: &Arc<Node>) -> Result<Arc<Node>> {
        Self::rewrite(&self.root, arg, &mut |k, a| Ok(Node::apply(k, a)))
    }
}

/// `H(f⃗) = F(G₁(f⃗), …, G_k(f⃗))`.
pub fn compose_operators(outer: &OperatorTerm, inners: &[OperatorTerm]) -> Result<OperatorTerm> {
    if inners.len() != outer.arity() {
        return Err(Error::arity("compose outer", outer.arity(), inners.len()));
    }
    let n = match inners.first() {
        Some(first) => first.arity(),
        None => 0,
    };
    for inner in inners {
        if inner.arity() != n {
            return Err(Error::arity("compose inner", n, inner.arity()));
        }
    }
    let root = OperatorTerm::rewrite(&outer.root, &Node::var(), &mut |k, arg| inners[k - 1].instantiate(&arg))?;
    OperatorTerm::new(n, root)
}

struct EvalSession<'a> {
    oracles: &'a [FunctionOracle],
    x: &'a Nat,
    nodes: HashMap<*const Node, Nat>,
    queries: HashMap<(usize, Nat), Nat>,
}

impl<'a> EvalSession<'a> {
    fn new(oracles: &'a [FunctionOracle], x: &'a Nat) -> Self {
        EvalSession {
            oracles,
            x,
            nodes: HashMap::new(),
            queries: HashMap::new(),
        }
    }

    fn eval(&mut self, node: &Arc<Node>) -> Nat {
        if let Node::Var = **node {
            return self.x.clone();
        }
        if let Some(v) = self.nodes.get(&key(node)) {
            return v.clone();
        }
        let v = match &**node {
            Node::Var => unreachable!(),
            Node::Apply(k, arg) => {
                let a = self.eval(arg);
                match self.queries.get(&(*k, a.clone())) {
                    Some(v) => v.clone(),
                    None => {
                        let v = self.oracles[k - 1].call(&a);
                        self.queries.insert((*k, a), v.clone());
                        v
                    }
                }
            }
            Node::Base(f, args) => {
                let vals: Vec<Nat> = args.iter().map(|a| self.eval(a)).collect();
                f.eval_unchecked(&vals)
            }
        };
        self.nodes.insert(key(node), v.clone());
        v
    }
}

struct Bounder<'a> {
    g: &'a FunctionOracle,
    x: &'a Nat,
    nodes: HashMap<*const Node, (Nat, Nat)>,
    queried: Vec<(Nat, Nat)>,
}

impl<'a> Bounder<'a> {
    fn new(g: &'a FunctionOracle, x: &'a Nat) -> Self {
        Bounder {
            g,
            x,
            nodes: HashMap::new(),
            queried: Vec::new(),
        }
    }

    /// (bound on the value, bound on every oracle argument read below).
    fn bound(&mut self, node: &Arc<Node>) -> Result<(Nat, Nat)> {
        if let Some(hit) = self.nodes.get(&key(node)) {
            return Ok(hit.clone());
        }
        let out = match &**node {
            Node::Var => (self.x.clone(), Nat::zero()),
            Node::Apply(_, arg) => {
                let (vb, z) = self.bound(arg)?;
                let gv = self.g.call(&vb);
                self.queried.push((vb.clone(), gv.clone()));
                let z = z.max(vb);
                (gv, z)
            }
            Node::Base(f, args) => {
                let mut vbs = Vec::with_capacity(args.len());
                let mut z = Nat::zero();
                for a in args {
                    let (vb, za) = self.bound(a)?;
                    vbs.push(vb);
                    z = z.max(za);
                }
                (f.majorant_unchecked(&vbs)?, z)
            }
        };
        self.nodes.insert(key(node), out.clone());
        Ok(out)
    }

    fn check_monotone(&mut self) -> Result<()> {
        self.queried.sort();
        for w in self.queried.windows(2) {
            if w[0].1 > w[1].1 {
                return Err(Error::Invalid(format!(
                    "majorant is not monotone: g({}) = {} > g({}) = {}",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Var => f.write_str("x"),
            Node::Apply(k, arg) => write!(f, "(apply {k} {arg})"),
            Node::Base(b, args) => {
                write!(f, "(base {b}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for OperatorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Parses `x | (apply K t) | (base BASEFN t*)` for an operator of the given arity.
pub fn parse_operator_term(text: &str, arity: usize) -> Result<OperatorTerm> {
    parse_operator_sexp(&parse_one(text)?, arity, NativeRegistry::standard())
}

pub fn parse_operator_sexp(sexp: &Sexp, arity: usize, registry: &NativeRegistry) -> Result<OperatorTerm> {
    let root = parse_node(sexp, arity, registry)?;
    OperatorTerm::new(arity, root)
}

fn parse_node(sexp: &Sexp, arity: usize, registry: &NativeRegistry) -> Result<Arc<Node>> {
    if let Some(atom) = sexp.as_atom() {
        return if atom == "x" {
            Ok(Node::var())
        } else {
            Err(Error::syntax(sexp.pos(), format!("expected `x` or a form, found `{atom}`")))
        };
    }
    let items = sexp.expect_list("operator term")?;
    match sexp.head() {
        Some("apply") => {
            if items.len() != 3 {
                return Err(Error::syntax(sexp.pos(), "`apply` takes an index and a term"));
            }
            let k = items[1].expect_usize("oracle index")?;
            if k == 0 || k > arity {
                return Err(Error::syntax(items[1].pos(), format!("oracle index {k} out of range 1..={arity}")));
            }
            Ok(Node::apply(k, parse_node(&items[2], arity, registry)?))
        }
        Some("base") => {
            if items.len() < 2 {
                return Err(Error::syntax(sexp.pos(), "`base` needs a base function"));
            }
            let args = items[2..]
                .iter()
                .map(|s| parse_node(s, arity, registry))
                .collect::<Result<Vec<_>>>()?;
            let f = parse_base_sexp(&items[1], registry, Some(args.len()))?;
            Node::base(f, args)
        }
        _ => Err(Error::syntax(sexp.pos(), format!("unknown operator form `{sexp}`"))),
    }
}
