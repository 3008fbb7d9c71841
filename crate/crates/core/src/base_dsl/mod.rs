//! A small total language for the base function class.
//!
//! Terms are built from the initial functions (projections, successor,
//! multiplication, modified subtraction and the quotient `⌊x/(y+1)⌋`) by
//! substitution and bounded minimization. Every term is total by
//! construction. Host-implemented [`Native`] functions can join the class
//! when they come with a monotone majorant.

mod natives;
mod parse;

use std::fmt;
use std::sync::Arc;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::Nat;

pub use natives::{cantor_pair, cantor_unpair, ehelp_nat, NativeRegistry};
pub use parse::{parse_base_function, parse_base_function_with, parse_base_sexp};

/// Evaluator signature shared by natives and their majorants.
pub type NatFn = Arc<dyn Fn(&[Nat]) -> Nat + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialKind {
    /// `λx₁…xₙ.x_k`, with `1 ≤ k ≤ n`.
    Proj { n: usize, k: usize },
    Succ,
    Mul,
    /// `max(x − y, 0)`
    Monus,
    /// `⌊x / (y + 1)⌋`
    Quot,
}

impl InitialKind {
    pub fn arity(self) -> usize {
        match self {
            InitialKind::Proj { n, .. } => n,
            InitialKind::Succ => 1,
            InitialKind::Mul | InitialKind::Monus | InitialKind::Quot => 2,
        }
    }

    fn eval(self, args: &[Nat]) -> Nat {
        match self {
            InitialKind::Proj { k, .. } => args[k - 1].clone(),
            InitialKind::Succ => &args[0] + 1u32,
            InitialKind::Mul => &args[0] * &args[1],
            InitialKind::Monus => monus(&args[0], &args[1]),
            InitialKind::Quot => &args[0] / (&args[1] + 1u32),
        }
    }

    fn majorant(self, args: &[Nat]) -> Nat {
        match self {
            InitialKind::Proj { k, .. } => args[k - 1].clone(),
            InitialKind::Succ => &args[0] + 1u32,
            InitialKind::Mul => &args[0] * &args[1],
            InitialKind::Monus | InitialKind::Quot => args[0].clone(),
        }
    }
}

/// `max(x − y, 0)` on naturals.
pub fn monus(x: &Nat, y: &Nat) -> Nat {
    if x > y {
        x - y
    } else {
        Nat::zero()
    }
}

/// A host-implemented total function with an asserted monotone majorant.
pub struct Native {
    name: String,
    arity: usize,
    eval: NatFn,
    majorant: Option<NatFn>,
    provenance: Option<String>,
}

impl Native {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        eval: impl Fn(&[Nat]) -> Nat + Send + Sync + 'static,
        majorant: impl Fn(&[Nat]) -> Nat + Send + Sync + 'static,
    ) -> Self {
        Native {
            name: name.into(),
            arity,
            eval: Arc::new(eval),
            majorant: Some(Arc::new(majorant)),
            provenance: None,
        }
    }

    /// A native that is its own majorant (it must be monotone).
    pub fn monotone(
        name: impl Into<String>,
        arity: usize,
        eval: impl Fn(&[Nat]) -> Nat + Send + Sync + 'static,
    ) -> Self {
        let eval: NatFn = Arc::new(eval);
        Native {
            name: name.into(),
            arity,
            eval: eval.clone(),
            majorant: Some(eval),
            provenance: None,
        }
    }

    /// A native without a majorant. Usable for evaluation only.
    pub fn unbounded(
        name: impl Into<String>,
        arity: usize,
        eval: impl Fn(&[Nat]) -> Nat + Send + Sync + 'static,
    ) -> Self {
        Native {
            name: name.into(),
            arity,
            eval: Arc::new(eval),
            majorant: None,
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = Some(provenance.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }
}

impl fmt::Debug for Native {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Native")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("has_majorant", &self.majorant.is_some())
            .finish()
    }
}

#[derive(Debug)]
pub enum Body {
    Initial(InitialKind),
    Substitution {
        outer: BaseFunction,
        inners: Vec<BaseFunction>,
    },
    BoundedMin(BaseFunction),
    Native(Native),
}

#[derive(Debug)]
struct Inner {
    arity: usize,
    body: Body,
    source: Option<String>,
}

/// A total function on naturals belonging to the base class.
///
/// Cheap to clone; immutable after construction.
#[derive(Debug, Clone)]
pub struct BaseFunction(Arc<Inner>);

impl BaseFunction {
    fn from_body(arity: usize, body: Body) -> Self {
        BaseFunction(Arc::new(Inner {
            arity,
            body,
            source: None,
        }))
    }

    pub fn initial(kind: InitialKind) -> Result<Self> {
        if let InitialKind::Proj { n, k } = kind {
            if k == 0 || k > n {
                return Err(Error::Invalid(format!("projection index {k} out of range 1..={n}")));
            }
        }
        Ok(Self::from_body(kind.arity(), Body::Initial(kind)))
    }

    pub fn proj(n: usize, k: usize) -> Self {
        Self::initial(InitialKind::Proj { n, k }).expect("projection index in range")
    }

    pub fn succ() -> Self {
        Self::from_body(1, Body::Initial(InitialKind::Succ))
    }

    pub fn mul() -> Self {
        Self::from_body(2, Body::Initial(InitialKind::Mul))
    }

    pub fn monus() -> Self {
        Self::from_body(2, Body::Initial(InitialKind::Monus))
    }

    pub fn quot() -> Self {
        Self::from_body(2, Body::Initial(InitialKind::Quot))
    }

    /// `outer(inner₁(x⃗), …, innerₘ(x⃗))`.
    pub fn subst(outer: BaseFunction, inners: Vec<BaseFunction>) -> Result<Self> {
        if outer.arity() != inners.len() {
            return Err(Error::arity("subst outer", inners.len(), outer.arity()));
        }
        let arity = match inners.first() {
            Some(first) => first.arity(),
            None => return Err(Error::Invalid("subst needs at least one inner function".into())),
        };
        for inner in &inners {
            if inner.arity() != arity {
                return Err(Error::arity(format!("subst inner {inner}"), arity, inner.arity()));
            }
        }
        Ok(Self::from_body(arity, Body::Substitution { outer, inners }))
    }

    /// `g(x⃗, y) = μ_{z ≤ y}[f(x⃗, z) = 0]`, or `y + 1` when there is no such `z`.
    pub fn bounded_min(inner: BaseFunction) -> Result<Self> {
        if inner.arity() == 0 {
            return Err(Error::Invalid("bounded minimization needs arity >= 1".into()));
        }
        Ok(Self::from_body(inner.arity(), Body::BoundedMin(inner)))
    }

    pub fn native(native: Native) -> Self {
        Self::from_body(native.arity, Body::Native(native))
    }

    /// The constant zero of the given arity, as `x₁ ∸ x₁`.
    pub fn zero(arity: usize) -> Self {
        let p = Self::proj(arity.max(1), 1);
        Self::subst(Self::monus(), vec![p.clone(), p]).expect("well-formed zero")
    }

    /// The constant `c` of the given arity, built by binary expansion from
    /// zero, successor and multiplication.
    pub fn constant(c: &Nat, arity: usize) -> Self {
        if c.is_zero() {
            return Self::zero(arity);
        }
        let one = Self::subst(Self::succ(), vec![Self::zero(arity)]).unwrap();
        if c.is_one() {
            return one;
        }
        let two = Self::subst(Self::succ(), vec![one.clone()]).unwrap();
        let bits = c.bits();
        let mut acc = one;
        for i in (0..bits - 1).rev() {
            acc = Self::subst(Self::mul(), vec![acc, two.clone()]).unwrap();
            if c.bit(i) {
                acc = Self::subst(Self::succ(), vec![acc]).unwrap();
            }
        }
        acc
    }

    /// `λx⃗y. min_{z ≤ y} f(x⃗, z)` as a substitution/bounded-minimization term.
    pub fn bounded_minimum(f: &BaseFunction) -> Result<Self> {
        let n = f.arity();
        if n == 0 {
            return Err(Error::Invalid("bounded minimum needs arity >= 1".into()));
        }
        let k = n - 1;
        // q(x⃗, v, z) = f(x⃗, z) ∸ v
        let q = {
            let m = k + 2;
            let mut f_args: Vec<_> = (1..=k).map(|i| Self::proj(m, i)).collect();
            f_args.push(Self::proj(m, k + 2));
            let fz = Self::subst(f.clone(), f_args)?;
            Self::subst(Self::monus(), vec![fz, Self::proj(m, k + 1)])?
        };
        // h(x⃗, y, v) = μ_{z ≤ y}[q(x⃗, v, z) = 0] ∸ y
        let h = {
            let m = k + 2;
            let bq = Self::bounded_min(q)?;
            let mut args: Vec<_> = (1..=k).map(|i| Self::proj(m, i)).collect();
            args.push(Self::proj(m, k + 2));
            args.push(Self::proj(m, k + 1));
            let found = Self::subst(bq, args)?;
            Self::subst(Self::monus(), vec![found, Self::proj(m, k + 1)])?
        };
        // min(x⃗, y) = μ_{v ≤ f(x⃗, 0)}[h(x⃗, y, v) = 0]
        let g = Self::bounded_min(h)?;
        let mut f0_args: Vec<_> = (1..=k).map(|i| Self::proj(n, i)).collect();
        f0_args.push(Self::zero(n));
        let f0 = Self::subst(f.clone(), f0_args)?;
        let mut args: Vec<_> = (1..=n).map(|i| Self::proj(n, i)).collect();
        args.push(f0);
        Self::subst(g, args)
    }

    /// `λx⃗y. max_{z ≤ y} f(x⃗, z)`; the search is bounded by the structural majorant of `f`.
    pub fn bounded_maximum(f: &BaseFunction) -> Result<Self> {
        let n = f.arity();
        if n == 0 {
            return Err(Error::Invalid("bounded maximum needs arity >= 1".into()));
        }
        let k = n - 1;
        let m = k + 2;
        // q(x⃗, v, z) = 1 ∸ (f(x⃗, z) ∸ v), zero exactly when f(x⃗, z) > v
        let q = {
            let mut f_args: Vec<_> = (1..=k).map(|i| Self::proj(m, i)).collect();
            f_args.push(Self::proj(m, k + 2));
            let fz = Self::subst(f.clone(), f_args)?;
            let excess = Self::subst(Self::monus(), vec![fz, Self::proj(m, k + 1)])?;
            Self::subst(Self::monus(), vec![Self::constant(&Nat::one(), m), excess])?
        };
        // h(x⃗, y, v) = (y + 1) ∸ μ_{z ≤ y}[q(x⃗, v, z) = 0]
        let h = {
            let bq = Self::bounded_min(q)?;
            let mut args: Vec<_> = (1..=k).map(|i| Self::proj(m, i)).collect();
            args.push(Self::proj(m, k + 2));
            args.push(Self::proj(m, k + 1));
            let found = Self::subst(bq, args)?;
            let y1 = Self::subst(Self::succ(), vec![Self::proj(m, k + 1)])?;
            Self::subst(Self::monus(), vec![y1, found])?
        };
        let g = Self::bounded_min(h)?;
        let mut args: Vec<_> = (1..=n).map(|i| Self::proj(n, i)).collect();
        args.push(f.majorant_function()?);
        Self::subst(g, args)
    }

    pub fn arity(&self) -> usize {
        self.0.arity
    }

    pub fn body(&self) -> &Body {
        &self.0.body
    }

    pub fn source(&self) -> Option<&str> {
        self.0.source.as_deref()
    }

    pub(crate) fn with_source(self, source: String) -> Self {
        match Arc::try_unwrap(self.0) {
            Ok(mut inner) => {
                inner.source = Some(source);
                BaseFunction(Arc::new(inner))
            }
            Err(shared) => BaseFunction(shared),
        }
    }

    pub fn native_name(&self) -> Option<&str> {
        match &self.0.body {
            Body::Native(n) => Some(&n.name),
            _ => None,
        }
    }

    pub fn provenance(&self) -> Option<&str> {
        match &self.0.body {
            Body::Native(n) => n.provenance(),
            _ => None,
        }
    }

    /// Exact value at `args`.
    pub fn eval(&self, args: &[Nat]) -> Result<Nat> {
        if args.len() != self.arity() {
            return Err(Error::arity(self.to_string(), self.arity(), args.len()));
        }
        Ok(self.eval_unchecked(args))
    }

    pub(crate) fn eval_unchecked(&self, args: &[Nat]) -> Nat {
        match &self.0.body {
            Body::Initial(kind) => kind.eval(args),
            Body::Substitution { outer, inners } => {
                let vals: Vec<Nat> = inners.iter().map(|f| f.eval_unchecked(args)).collect();
                outer.eval_unchecked(&vals)
            }
            Body::BoundedMin(inner) => {
                let (prefix, bound) = args.split_at(args.len() - 1);
                let bound = &bound[0];
                let mut scratch = prefix.to_vec();
                scratch.push(Nat::zero());
                loop {
                    if inner.eval_unchecked(&scratch).is_zero() {
                        return scratch.pop().unwrap();
                    }
                    let z = scratch.last_mut().unwrap();
                    if &*z == bound {
                        return bound + 1u32;
                    }
                    *z += 1u32;
                }
            }
            Body::Native(native) => (native.eval)(args),
        }
    }

    /// Value of the structural monotone majorant at `args`.
    pub fn majorant_eval(&self, args: &[Nat]) -> Result<Nat> {
        if args.len() != self.arity() {
            return Err(Error::arity(self.to_string(), self.arity(), args.len()));
        }
        self.majorant_unchecked(args)
    }

    pub(crate) fn majorant_unchecked(&self, args: &[Nat]) -> Result<Nat> {
        match &self.0.body {
            Body::Initial(kind) => Ok(kind.majorant(args)),
            Body::Substitution { outer, inners } => {
                if self.is_self_difference() {
                    return Ok(Nat::zero());
                }
                let vals = inners
                    .iter()
                    .map(|f| f.majorant_unchecked(args))
                    .collect::<Result<Vec<_>>>()?;
                outer.majorant_unchecked(&vals)
            }
            Body::BoundedMin(_) => Ok(args.last().unwrap() + 1u32),
            Body::Native(native) => match &native.majorant {
                Some(m) => Ok(m(args)),
                None => Err(Error::MissingMajorant(native.name.clone())),
            },
        }
    }

    /// `a ∸ a` for a structurally repeated `a`; majorized by zero.
    fn is_self_difference(&self) -> bool {
        match &self.0.body {
            Body::Substitution { outer, inners } => {
                matches!(outer.body(), Body::Initial(InitialKind::Monus)) && inners[0] == inners[1]
            }
            _ => false,
        }
    }

    /// The majorant as a base function in its own right.
    pub fn majorant_function(&self) -> Result<BaseFunction> {
        let n = self.arity();
        match &self.0.body {
            Body::Initial(InitialKind::Monus | InitialKind::Quot) => Ok(Self::proj(2, 1)),
            Body::Initial(_) => Ok(self.clone()),
            Body::Substitution { outer, inners } => {
                if self.is_self_difference() {
                    return Ok(Self::zero(n));
                }
                let inners = inners
                    .iter()
                    .map(BaseFunction::majorant_function)
                    .collect::<Result<Vec<_>>>()?;
                Self::subst(outer.majorant_function()?, inners)
            }
            Body::BoundedMin(_) => Self::subst(Self::succ(), vec![Self::proj(n, n)]),
            Body::Native(native) => {
                let m = native
                    .majorant
                    .clone()
                    .ok_or_else(|| Error::MissingMajorant(native.name.clone()))?;
                Ok(Self::native(Native {
                    name: format!("{}.majorant", native.name),
                    arity: n,
                    eval: m.clone(),
                    majorant: Some(m),
                    provenance: Some(format!("monotone majorant of {}", native.name)),
                }))
            }
        }
    }

    /// Every native referenced by this term, in first-occurrence order.
    pub fn natives(&self) -> Vec<BaseFunction> {
        let mut out = Vec::new();
        self.collect_natives(&mut out);
        out
    }

    pub(crate) fn collect_natives(&self, out: &mut Vec<BaseFunction>) {
        match &self.0.body {
            Body::Initial(_) => {}
            Body::Substitution { outer, inners } => {
                outer.collect_natives(out);
                for f in inners {
                    f.collect_natives(out);
                }
            }
            Body::BoundedMin(inner) => inner.collect_natives(out),
            Body::Native(n) => {
                if !out.iter().any(|f| f.native_name() == Some(&n.name)) {
                    out.push(self.clone());
                }
            }
        }
    }
}

impl PartialEq for BaseFunction {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.arity() != other.arity() {
            return false;
        }
        match (self.body(), other.body()) {
            (Body::Initial(a), Body::Initial(b)) => a == b,
            (
                Body::Substitution { outer: o1, inners: i1 },
                Body::Substitution { outer: o2, inners: i2 },
            ) => o1 == o2 && i1 == i2,
            (Body::BoundedMin(a), Body::BoundedMin(b)) => a == b,
            (Body::Native(a), Body::Native(b)) => a.name == b.name,
            _ => false,
        }
    }
}

impl Eq for BaseFunction {}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.body() {
            Body::Initial(InitialKind::Proj { n, k }) => write!(f, "(proj {n} {k})"),
            Body::Initial(InitialKind::Succ) => f.write_str("(succ)"),
            Body::Initial(InitialKind::Mul) => f.write_str("(mul)"),
            Body::Initial(InitialKind::Monus) => f.write_str("(monus)"),
            Body::Initial(InitialKind::Quot) => f.write_str("(quot)"),
            Body::Substitution { outer, inners } => {
                write!(f, "(subst {outer}")?;
                for inner in inners {
                    write!(f, " {inner}")?;
                }
                f.write_str(")")
            }
            Body::BoundedMin(inner) => write!(f, "(bmin {inner})"),
            Body::Native(n) => write!(f, "(native {})", n.name),
        }
    }
}
