//! Uniform and conditional computing systems.

use std::fmt;
use std::sync::Arc;

use num::Zero;

use crate::base_dsl::{BaseFunction, NativeRegistry};
use crate::error::{Error, Result};
use crate::names::{RationalApprox, RealName};
use crate::operator_terms::{parse_operator_sexp, FunctionOracle, Node, OperatorTerm};
use crate::sexp::{parse_one, slots, take_slot, Sexp};
use crate::Nat;

/// Default bound for the parameter search.
pub const DEFAULT_BUDGET: u64 = 1 << 16;

/// `(F, G, H)` over `3k` oracles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformSystem {
    pub k: usize,
    pub f: OperatorTerm,
    pub g: OperatorTerm,
    pub h: OperatorTerm,
}

/// `E` over `3k` oracles and `F, G, H` over `3k + 1`; the last oracle carries `ŝ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalSystem {
    pub k: usize,
    pub e: OperatorTerm,
    pub f: OperatorTerm,
    pub g: OperatorTerm,
    pub h: OperatorTerm,
}

fn check_arity(term: &OperatorTerm, want: usize, what: &str) -> Result<()> {
    if term.arity() != want {
        return Err(Error::arity(what, want, term.arity()));
    }
    Ok(())
}

/// Oracles of all argument names in slot order, memoized for one evaluation.
pub fn name_oracles(names: &[RealName]) -> Vec<FunctionOracle> {
    names
        .iter()
        .flat_map(|n| n.oracles())
        .map(FunctionOracle::memoized)
        .collect()
}

impl UniformSystem {
    pub fn new(k: usize, f: OperatorTerm, g: OperatorTerm, h: OperatorTerm) -> Result<Self> {
        for (t, w) in [(&f, "F"), (&g, "G"), (&h, "H")] {
            check_arity(t, 3 * k, w)?;
        }
        Ok(UniformSystem { k, f, g, h })
    }

    /// The `j`-th argument (1-based) of a `k`-ary function.
    pub fn projection(k: usize, j: usize) -> Result<Self> {
        if j == 0 || j > k {
            return Err(Error::Invalid(format!("projection {j} out of range 1..={k}")));
        }
        let base = 3 * (j - 1);
        Self::new(
            k,
            OperatorTerm::read(3 * k, base + 1)?,
            OperatorTerm::read(3 * k, base + 2)?,
            OperatorTerm::read(3 * k, base + 3)?,
        )
    }

    pub fn eval(&self, names: &[RealName], t: &Nat) -> Result<RationalApprox> {
        if names.len() != self.k {
            return Err(Error::arity("uniform system arguments", self.k, names.len()));
        }
        let oracles = name_oracles(names);
        Ok(RationalApprox {
            p: self.f.eval(&oracles, t)?,
            q: self.g.eval(&oracles, t)?,
            r: self.h.eval(&oracles, t)?,
        })
    }

    /// The system applied to names, as a name of the value.
    pub fn apply(&self, names: &[RealName]) -> Result<RealName> {
        if names.len() != self.k {
            return Err(Error::arity("uniform system arguments", self.k, names.len()));
        }
        let oracles = Arc::new(name_oracles(names));
        let term = |t: &OperatorTerm| {
            let (t, o) = (t.clone(), oracles.clone());
            FunctionOracle::new(move |x| t.eval(&o, x).expect("arity checked")).memoized()
        };
        Ok(RealName::new(term(&self.f), term(&self.g), term(&self.h)))
    }

    /// Substitution of uniform systems.
    pub fn compose(outer: &UniformSystem, inners: &[UniformSystem]) -> Result<UniformSystem> {
        if inners.len() != outer.k {
            return Err(Error::arity("compose outer", outer.k, inners.len()));
        }
        let k = inners.first().map(|s| s.k).unwrap_or(0);
        if let Some(bad) = inners.iter().find(|s| s.k != k) {
            return Err(Error::arity("compose inner", k, bad.k));
        }
        let comps: Vec<OperatorTerm> = inners
            .iter()
            .flat_map(|s| [s.f.clone(), s.g.clone(), s.h.clone()])
            .collect();
        let sub = |t: &OperatorTerm| -> Result<OperatorTerm> {
            let root = OperatorTerm::rewrite(t.root(), &Node::var(), &mut |j, arg| comps[j - 1].instantiate(&arg))?;
            OperatorTerm::new(3 * k, root)
        };
        UniformSystem::new(k, sub(&outer.f)?, sub(&outer.g)?, sub(&outer.h)?)
    }
}

impl ConditionalSystem {
    pub fn new(k: usize, e: OperatorTerm, f: OperatorTerm, g: OperatorTerm, h: OperatorTerm) -> Result<Self> {
        check_arity(&e, 3 * k, "E")?;
        for (t, w) in [(&f, "F"), (&g, "G"), (&h, "H")] {
            check_arity(t, 3 * k + 1, w)?;
        }
        Ok(ConditionalSystem { k, e, f, g, h })
    }

    /// The embedding of a uniform system: `E = id`, `F, G, H` ignore `ŝ`.
    pub fn from_uniform(sys: &UniformSystem) -> Self {
        let n = 3 * sys.k + 1;
        ConditionalSystem {
            k: sys.k,
            e: OperatorTerm::identity(3 * sys.k),
            f: sys.f.widen(n).expect("wider arity"),
            g: sys.g.widen(n).expect("wider arity"),
            h: sys.h.widen(n).expect("wider arity"),
        }
    }

    pub fn projection(k: usize, j: usize) -> Result<Self> {
        Ok(Self::from_uniform(&UniformSystem::projection(k, j)?))
    }

    /// True when `E` is the identity and no component reads `ŝ`.
    pub fn is_parameter_free(&self) -> bool {
        let slot = 3 * self.k + 1;
        matches!(**self.e.root(), Node::Var)
            && self.f.ignores(slot)
            && self.g.ignores(slot)
            && self.h.ignores(slot)
    }

    /// The uniform system underneath a parameter-free conditional one.
    pub fn as_uniform(&self) -> Option<UniformSystem> {
        if !self.is_parameter_free() {
            return None;
        }
        let n = 3 * self.k;
        let narrow = |t: &OperatorTerm| OperatorTerm::new(n, t.root().clone()).ok();
        Some(UniformSystem {
            k: self.k,
            f: narrow(&self.f)?,
            g: narrow(&self.g)?,
            h: narrow(&self.h)?,
        })
    }

    fn check_names(&self, names: &[RealName]) -> Result<()> {
        if names.len() != self.k {
            return Err(Error::arity("conditional system arguments", self.k, names.len()));
        }
        Ok(())
    }

    /// `E(f⃗, g⃗, h⃗)(s)`.
    pub fn eval_e(&self, oracles: &[FunctionOracle], s: &Nat) -> Result<Nat> {
        self.e.eval(oracles, s)
    }

    /// Least `s ≤ budget` with `E(…)(s) = 0`.
    pub fn find_parameter(&self, names: &[RealName], budget: u64) -> Result<Nat> {
        self.check_names(names)?;
        let oracles = name_oracles(names);
        self.find_parameter_with(&oracles, budget)
    }

    pub fn find_parameter_with(&self, oracles: &[FunctionOracle], budget: u64) -> Result<Nat> {
        let mut s = Nat::zero();
        for _ in 0..=budget {
            if self.e.eval(oracles, &s)?.is_zero() {
                return Ok(s);
            }
            s += 1u32;
        }
        Err(Error::BudgetExhausted {
            budget,
            context: Some(format!("E never vanished on s = 0..={budget}")),
        })
    }

    /// `(F, G, H)(…, ŝ)(t)` for a given parameter.
    pub fn eval_with_parameter(&self, names: &[RealName], s: &Nat, t: &Nat) -> Result<RationalApprox> {
        self.check_names(names)?;
        let oracles = name_oracles(names);
        self.eval_with_parameter_oracles(&oracles, s, t)
    }

    pub fn eval_with_parameter_oracles(&self, oracles: &[FunctionOracle], s: &Nat, t: &Nat) -> Result<RationalApprox> {
        let mut all = oracles.to_vec();
        all.push(FunctionOracle::constant(s.clone()));
        Ok(RationalApprox {
            p: self.f.eval(&all, t)?,
            q: self.g.eval(&all, t)?,
            r: self.h.eval(&all, t)?,
        })
    }

    pub fn eval(&self, names: &[RealName], t: &Nat, budget: u64) -> Result<RationalApprox> {
        self.check_names(names)?;
        let oracles = name_oracles(names);
        let s = self.find_parameter_with(&oracles, budget)?;
        self.eval_with_parameter_oracles(&oracles, &s, t)
    }

    /// The name of the value produced with parameter `s`.
    pub fn apply_with_parameter(&self, names: &[RealName], s: &Nat) -> Result<RealName> {
        self.check_names(names)?;
        let mut oracles = name_oracles(names);
        oracles.push(FunctionOracle::constant(s.clone()));
        let oracles = Arc::new(oracles);
        let term = |t: &OperatorTerm| {
            let (t, o) = (t.clone(), oracles.clone());
            FunctionOracle::new(move |x| t.eval(&o, x).expect("arity checked")).memoized()
        };
        Ok(RealName::new(term(&self.f), term(&self.g), term(&self.h)))
    }

    /// Substitution of conditional systems. Parameters of the components that
    /// need one are packed into `s` by iterated Cantor pairing.
    pub fn compose(outer: &ConditionalSystem, inners: &[ConditionalSystem]) -> Result<ConditionalSystem> {
        if inners.len() != outer.k {
            return Err(Error::arity("compose outer", outer.k, inners.len()));
        }
        let k = inners.first().map(|s| s.k).unwrap_or(0);
        if let Some(bad) = inners.iter().find(|s| s.k != k) {
            return Err(Error::arity("compose inner", k, bad.k));
        }
        let param = 3 * k + 1;
        let outer_param = 3 * outer.k + 1;

        // Which components take a share of the parameter: inners first, outer last.
        let mut takes: Vec<bool> = inners.iter().map(|s| !s.is_parameter_free()).collect();
        takes.push(!outer.is_parameter_free());
        let count = takes.iter().filter(|b| **b).count();
        let mut index = 0;
        let projections: Vec<Option<BaseFunction>> = takes
            .iter()
            .map(|&t| {
                if !t {
                    return None;
                }
                index += 1;
                Some(tuple_projection(count, index))
            })
            .collect();
        let share = |i: usize, s_node: Arc<Node>| -> Result<Arc<Node>> {
            match &projections[i] {
                Some(p) if count > 1 => Node::base(p.clone(), vec![s_node]),
                _ => Ok(s_node),
            }
        };

        // Name components of inner `i` with `ŝ_i` produced by `param_read`.
        let inner_component = |j: usize,
                               arg: Arc<Node>,
                               param_read: &dyn Fn(usize, Arc<Node>) -> Result<Arc<Node>>|
         -> Result<Arc<Node>> {
            let i = (j - 1) / 3;
            let sys = &inners[i];
            let term = match (j - 1) % 3 {
                0 => &sys.f,
                1 => &sys.g,
                _ => &sys.h,
            };
            OperatorTerm::rewrite(term.root(), &arg, &mut |slot, a| {
                if slot == param {
                    param_read(i, a)
                } else {
                    Ok(Node::apply(slot, a))
                }
            })
        };

        // E: sum of every parametric component's E at its share of s.
        let top = Node::var();
        let in_e = |i: usize, _a: Arc<Node>| share(i, top.clone());
        let mut parts = Vec::new();
        for (i, sys) in inners.iter().enumerate() {
            if takes[i] {
                let at = share(i, top.clone())?;
                parts.push(sys.e.instantiate(&at)?);
            }
        }
        if takes[inners.len()] {
            let at = share(inners.len(), top.clone())?;
            let e = OperatorTerm::rewrite(outer.e.root(), &at, &mut |j, a| inner_component(j, a, &in_e))?;
            parts.push(e);
        }
        let add = NativeRegistry::std("add");
        let e_root = match parts.len() {
            0 => top.clone(),
            _ => {
                let mut acc = parts.pop().unwrap();
                while let Some(p) = parts.pop() {
                    acc = Node::base(add.clone(), vec![p, acc])?;
                }
                acc
            }
        };

        // F, G, H: outer components over the inner names.
        let in_f = |i: usize, a: Arc<Node>| share(i, Node::apply(param, a));
        let n_out = inners.len();
        let sub = |t: &OperatorTerm| -> Result<OperatorTerm> {
            let root = OperatorTerm::rewrite(t.root(), &Node::var(), &mut |j, a| {
                if j == outer_param {
                    share(n_out, Node::apply(param, a))
                } else {
                    inner_component(j, a, &in_f)
                }
            })?;
            OperatorTerm::new(param, root)
        };
        ConditionalSystem::new(k, OperatorTerm::new(3 * k, e_root)?, sub(&outer.f)?, sub(&outer.g)?, sub(&outer.h)?)
    }
}

/// The `i`-th (1-based) component of a right-nested Cantor `count`-tuple.
pub fn tuple_projection(count: usize, i: usize) -> BaseFunction {
    let l = NativeRegistry::std("unpair.l");
    let r = NativeRegistry::std("unpair.r");
    let mut f = BaseFunction::proj(1, 1);
    for _ in 1..i {
        f = BaseFunction::subst(r.clone(), vec![f]).unwrap();
    }
    if i < count {
        f = BaseFunction::subst(l, vec![f]).unwrap();
    }
    f
}

/// Encodes a tuple the way [`tuple_projection`] decodes it.
pub fn tuple_encode(parts: &[Nat]) -> Nat {
    match parts.split_last() {
        None => Nat::zero(),
        Some((last, rest)) => rest
            .iter()
            .rev()
            .fold(last.clone(), |acc, x| crate::base_dsl::cantor_pair(x, &acc)),
    }
}

/// Either kind of system, as read from text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum System {
    Uniform(UniformSystem),
    Conditional(ConditionalSystem),
}

impl fmt::Display for UniformSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(uniform-system :k {}\n  :F {}\n  :G {}\n  :H {})",
            self.k, self.f, self.g, self.h
        )
    }
}

impl fmt::Display for ConditionalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(conditional-system :k {}\n  :E {}\n  :F {}\n  :G {}\n  :H {})",
            self.k, self.e, self.f, self.g, self.h
        )
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::Uniform(s) => s.fmt(f),
            System::Conditional(s) => s.fmt(f),
        }
    }
}

pub fn parse_system(text: &str) -> Result<System> {
    parse_system_sexp(&parse_one(text)?, NativeRegistry::standard())
}

pub fn parse_system_sexp(sexp: &Sexp, registry: &NativeRegistry) -> Result<System> {
    let items = sexp.expect_list("system")?;
    let pos = sexp.pos();
    let head = sexp.head().ok_or_else(|| Error::syntax(pos, "expected system form"))?;
    let slots = slots(&items[1..], pos)?;
    let k = take_slot(&slots, "k", pos)?.expect_usize("k")?;
    let term = |label: &str, arity: usize| parse_operator_sexp(take_slot(&slots, label, pos)?, arity, registry);
    match head {
        "uniform-system" => Ok(System::Uniform(UniformSystem::new(
            k,
            term("F", 3 * k)?,
            term("G", 3 * k)?,
            term("H", 3 * k)?,
        )?)),
        "conditional-system" => Ok(System::Conditional(ConditionalSystem::new(
            k,
            term("E", 3 * k)?,
            term("F", 3 * k + 1)?,
            term("G", 3 * k + 1)?,
            term("H", 3 * k + 1)?,
        )?)),
        other => Err(Error::syntax(pos, format!("expected `uniform-system` or `conditional-system`, found `{other}`"))),
    }
}

pub fn parse_uniform_system(text: &str) -> Result<UniformSystem> {
    match parse_system(text)? {
        System::Uniform(s) => Ok(s),
        System::Conditional(_) => Err(Error::Invalid("expected a uniform system".into())),
    }
}

pub fn parse_conditional_system(text: &str) -> Result<ConditionalSystem> {
    match parse_system(text)? {
        System::Conditional(s) => Ok(s),
        System::Uniform(_) => Err(Error::Invalid("expected a conditional system".into())),
    }
}
