//! Translations between operator systems and witnesses, normalization
//! through `K`, and effective search bounds at rational points.

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::{Arc, RwLock};

use num::{BigRational, Signed, Zero};

use crate::base_dsl::{ehelp_nat, parse_base_sexp, BaseFunction, Native, NativeRegistry};
use crate::error::{Error, Result};
use crate::names::{enumerate_special_prefix, RationalApprox};
use crate::operator_terms::{FunctionOracle, Node, OperatorTerm};
use crate::sexp::{parse_all, slots, take_slot, Sexp};
use crate::systems::{parse_system_sexp, ConditionalSystem, System, UniformSystem};
use crate::tz::{parse_origin, parse_witness_sexp, Origin, TzConditionalWitness, TzUniformWitness, Witness};
use crate::Nat;

fn nat(v: u64) -> Nat {
    Nat::from(v)
}

fn std_native(name: &str) -> BaseFunction {
    NativeRegistry::std(name)
}

/// `λx. 2x + 1` from the initial functions.
fn odd_index() -> BaseFunction {
    let two_x = BaseFunction::subst(BaseFunction::mul(), vec![BaseFunction::constant(&nat(2), 1), BaseFunction::proj(1, 1)])
        .expect("arity 1");
    BaseFunction::subst(BaseFunction::succ(), vec![two_x]).expect("arity 1")
}

/// Replaces every name triple `(f_i, g_i, h_i)` read by `term` with
/// `(K(f_i, g_i, h_i), K(g_i, f_i, h_i), id)`, where
/// `K(f, g, h)(n) = ehelp(f(2n+1), g(2n+1), h(2n+1), n)`.
fn normalize_term(term: &OperatorTerm, k: usize) -> Result<OperatorTerm> {
    let ehelp = std_native("ehelp");
    let odd = odd_index();
    let root = OperatorTerm::rewrite(term.root(), &Node::var(), &mut |slot, arg| {
        if slot > 3 * k {
            return Ok(Node::apply(slot, arg));
        }
        let base = 3 * ((slot - 1) / 3);
        let idx = Node::base(odd.clone(), vec![arg.clone()])?;
        let f = Node::apply(base + 1, idx.clone());
        let g = Node::apply(base + 2, idx.clone());
        let h = Node::apply(base + 3, idx);
        match (slot - 1) % 3 {
            0 => Node::base(ehelp.clone(), vec![f, g, h, arg]),
            1 => Node::base(ehelp.clone(), vec![g, f, h, arg]),
            _ => Ok(arg),
        }
    })?;
    OperatorTerm::new(term.arity(), root)
}

/// The system that sees its arguments only through their `K`-images.
pub fn normalize_system(sys: &ConditionalSystem) -> Result<ConditionalSystem> {
    ConditionalSystem::new(
        sys.k,
        normalize_term(&sys.e, sys.k)?,
        normalize_term(&sys.f, sys.k)?,
        normalize_term(&sys.g, sys.k)?,
        normalize_term(&sys.h, sys.k)?,
    )
}

/// `u_s = λx.(s+2)(x+1)`.
pub fn u_majorant(s: &Nat) -> FunctionOracle {
    let s2 = s + 2u32;
    FunctionOracle::monotone(move |x| &s2 * (x + 1u32))
}

/// `ehelp(p, q, r, ·)` as an oracle.
fn ehelp_oracle(p: Nat, q: Nat, r: Nat) -> FunctionOracle {
    FunctionOracle::new(move |x| ehelp_nat(&p, &q, &r, x))
}

/// The switched name component: `ehelp(a⁰…, x)` for `x ≤ v′`, `ehelp(a…, x)` above.
fn switched_oracle(lo: [Nat; 3], hi: [Nat; 3], v1: Nat) -> FunctionOracle {
    FunctionOracle::new(move |x| {
        let [p, q, r] = if x <= &v1 { &lo } else { &hi };
        ehelp_nat(p, q, r, x)
    })
}

/// The oracles `(f⁰_i, g⁰_i, id)` built from flattened `(p, q, r)` triples.
fn special_oracles(args: &[Nat]) -> Vec<FunctionOracle> {
    args.chunks(3)
        .flat_map(|c| {
            [
                ehelp_oracle(c[0].clone(), c[1].clone(), c[2].clone()),
                ehelp_oracle(c[1].clone(), c[0].clone(), c[2].clone()),
                FunctionOracle::identity(),
            ]
        })
        .collect()
}

/// A majorant for every oracle built from `args` by `ehelp`, for `id`, and
/// for `λx.b` with `b ≤ extra`.
fn data_majorant(args: &[Nat], extra: Nat) -> FunctionOracle {
    let m = args.iter().max().cloned().unwrap_or_default() + 1u32;
    FunctionOracle::monotone(move |x| (x + 1u32) * &m + 1u32 + &extra)
}

fn max_nat(a: Nat, b: Nat) -> Nat {
    a.max(b)
}

/// Modulus-based tables for a normalized system.
#[derive(Clone)]
pub struct TranslationTables {
    sys: Arc<ConditionalSystem>,
}

impl TranslationTables {
    /// Fails when some operator has no modulus (a native without majorant).
    pub fn new(normalized: ConditionalSystem) -> Result<Self> {
        for t in [&normalized.e, &normalized.f, &normalized.g, &normalized.h] {
            t.modulus_term()?;
        }
        Ok(TranslationTables { sys: Arc::new(normalized) })
    }

    pub fn system(&self) -> &ConditionalSystem {
        &self.sys
    }

    pub fn u(x: &Nat, s: &Nat) -> Nat {
        (s + 2u32) * (x + 1u32)
    }

    /// `Ω_E(u_s)(y)`.
    pub fn v(&self, s: &Nat, y: &Nat) -> Nat {
        self.sys.e.modulus(&u_majorant(s), y).expect("modulus checked at construction")
    }

    /// `max_{y ≤ s} v(s, y)`, which is `v(s, s)` because the modulus is
    /// monotone in its argument.
    pub fn v1(&self, s: &Nat) -> Nat {
        self.v(s, s)
    }

    pub fn d0(&self, s: &Nat) -> Nat {
        self.v1(s) * 6u32 + 5u32
    }

    /// `max(Ω_F(u_s)(t), Ω_G(u_s)(t), Ω_H(u_s)(t))`.
    pub fn w(&self, s: &Nat, t: &Nat) -> Nat {
        let u = u_majorant(s);
        [&self.sys.f, &self.sys.g, &self.sys.h]
            .iter()
            .map(|op| op.modulus(&u, t).expect("modulus checked at construction"))
            .max()
            .unwrap()
    }

    pub fn w1(&self, s: &Nat, t: &Nat) -> Nat {
        max_nat(self.v1(s), self.w(s, t))
    }

    pub fn d(&self, s: &Nat, t: &Nat) -> Nat {
        self.w1(s, t) * 6u32 + 5u32
    }

    /// `(μ_{x≤s}[E(f⁰, g⁰, id)(x) = 0], min_{x≤s} E(f⁰, g⁰, id)(x))` from
    /// flattened `(p⁰, q⁰, r⁰)` data.
    pub fn search(&self, approx0: &[Nat], s: &Nat) -> (Nat, Nat) {
        let oracles = special_oracles(approx0);
        let mut x = Nat::zero();
        let mut min: Option<Nat> = None;
        while &x <= s {
            let v = self.sys.e.eval(&oracles, &x).expect("arity checked");
            if v.is_zero() {
                return (x, v);
            }
            if min.as_ref().is_none_or(|m| &v < m) {
                min = Some(v);
            }
            x += 1u32;
        }
        (s + 1u32, min.unwrap_or_default())
    }

    /// The pair `(f₁, g₁)` read by `F, G, H`: built from `approx0` up to `v1`
    /// and from `approx` above.
    pub fn piecewise_name(approx0: &RationalApprox, approx: &RationalApprox, v1: &Nat) -> (FunctionOracle, FunctionOracle) {
        let tri = |a: &RationalApprox| [a.p.clone(), a.q.clone(), a.r.clone()];
        let swap = |a: &RationalApprox| [a.q.clone(), a.p.clone(), a.r.clone()];
        (
            switched_oracle(tri(approx0), tri(approx), v1.clone()),
            switched_oracle(swap(approx0), swap(approx), v1.clone()),
        )
    }

    /// `F/G/H(f₁, g₁, id, λx.b)(t)` for `which` in `0..3`.
    pub fn output(&self, which: usize, args: &[Nat]) -> Nat {
        let k = self.sys.k;
        let (approx0, rest) = args.split_at(3 * k);
        let (approx, st) = rest.split_at(3 * k);
        let (s, t) = (&st[0], &st[1]);
        let v1 = self.v1(s);
        let (b, _) = self.search(approx0, s);
        let mut oracles = Vec::with_capacity(3 * k + 1);
        for i in 0..k {
            let lo = &approx0[3 * i..3 * i + 3];
            let hi = &approx[3 * i..3 * i + 3];
            let tri = |c: &[Nat]| [c[0].clone(), c[1].clone(), c[2].clone()];
            let swap = |c: &[Nat]| [c[1].clone(), c[0].clone(), c[2].clone()];
            oracles.push(switched_oracle(tri(lo), tri(hi), v1.clone()));
            oracles.push(switched_oracle(swap(lo), swap(hi), v1.clone()));
            oracles.push(FunctionOracle::identity());
        }
        oracles.push(FunctionOracle::constant(b));
        let op = [&self.sys.f, &self.sys.g, &self.sys.h][which];
        op.eval(&oracles, t).expect("arity checked")
    }
}

fn hash_prefix(kind: &str, source: &str) -> String {
    let mut h = DefaultHasher::new();
    source.hash(&mut h);
    format!("{kind}.{:016x}", h.finish())
}

/// The default native-name prefix for a translation of `source`.
pub fn default_prefix(kind: &str, source: &System) -> String {
    hash_prefix(kind, &source.to_string())
}

struct Emitter {
    prefix: String,
    natives: Vec<BaseFunction>,
}

impl Emitter {
    fn emit(&mut self, native: Native, provenance: &str) -> BaseFunction {
        let f = BaseFunction::native(native.with_provenance(provenance));
        self.natives.push(f.clone());
        f
    }

    fn name(&self, part: &str) -> String {
        format!("{}.{part}", self.prefix)
    }
}

/// A translated witness together with the natives it introduced.
#[derive(Debug, Clone)]
pub struct Translated<W> {
    pub witness: W,
    pub natives: Vec<BaseFunction>,
}

/// Builds the conditional witness of a conditional system: normalizes it,
/// then tabulates moduli against `u_s`.
pub fn operators_to_tz_conditional(sys: &ConditionalSystem, prefix: Option<&str>) -> Result<Translated<TzConditionalWitness>> {
    let source = System::Conditional(sys.clone());
    let prefix = prefix.map(str::to_string).unwrap_or_else(|| default_prefix("cond-tz", &source));
    let tables = TranslationTables::new(normalize_system(sys)?)?;
    let k = sys.k;
    let mut em = Emitter { prefix: prefix.clone(), natives: Vec::new() };

    let tb = tables.clone();
    em.emit(Native::monotone(em.name("u"), 2, |a| TranslationTables::u(&a[0], &a[1])), "u(x,s) = (s+2)(x+1)");
    em.emit(
        Native::monotone(em.name("v"), 2, move |a| tb.v(&a[0], &a[1])),
        "v(s,y) = modulus of E' at y against u(.,s)",
    );
    let tb = tables.clone();
    em.emit(Native::monotone(em.name("v1"), 1, move |a| tb.v1(&a[0])), "v'(s) = max_{y<=s} v(s,y)");
    let tb = tables.clone();
    let d0 = em.emit(Native::monotone(em.name("d0"), 1, move |a| tb.d0(&a[0])), "d0(s) = 6 v'(s) + 5");
    let tb = tables.clone();
    em.emit(
        Native::monotone(em.name("w"), 2, move |a| tb.w(&a[0], &a[1])),
        "w(s,t) = max of the moduli of F', G', H' at t against u(.,s)",
    );
    let tb = tables.clone();
    em.emit(Native::monotone(em.name("w1"), 2, move |a| tb.w1(&a[0], &a[1])), "w'(s,t) = max(v'(s), w(s,t))");
    let tb = tables.clone();
    let d = em.emit(Native::monotone(em.name("d"), 2, move |a| tb.d(&a[0], &a[1])), "d(s,t) = 6 w'(s,t) + 5");

    let tb = tables.clone();
    em.emit(
        Native::new(em.name("b"), 3 * k + 1, move |a| tb.search(&a[..3 * k], &a[3 * k]).0, move |a| &a[3 * k] + 1u32),
        "b(p0,q0,r0,s) = mu_{x<=s}[E'(f0,g0,id)(x) = 0] with f0 = ehelp(p0,q0,r0,.), g0 = ehelp(q0,p0,r0,.)",
    );
    let tb = tables.clone();
    let tm = tables.clone();
    let e = em.emit(
        Native::new(
            em.name("e"),
            3 * k + 1,
            move |a| tb.search(&a[..3 * k], &a[3 * k]).1,
            move |a| {
                let g = data_majorant(&a[..3 * k], Nat::zero());
                tm.system().e.bound_eval(&g, &a[3 * k]).expect("modulus checked at construction")
            },
        ),
        "e(p0,q0,r0,s) = min_{x<=s} E'(f0,g0,id)(x)",
    );
    let mut outs = Vec::new();
    for (which, part, op) in [(0usize, "f", "F'"), (1, "g", "G'"), (2, "h", "H'")] {
        let tb = tables.clone();
        let tm = tables.clone();
        outs.push(em.emit(
            Native::new(
                em.name(part),
                6 * k + 2,
                move |a| tb.output(which, a),
                move |a| {
                    let s = &a[6 * k];
                    let g = data_majorant(&a[..6 * k], s + 1u32);
                    let op = [&tm.system().f, &tm.system().g, &tm.system().h][which];
                    op.bound_eval(&g, &a[6 * k + 1]).expect("modulus checked at construction")
                },
            ),
            &format!(
                "{part}(p0,q0,r0,p,q,r,s,t) = {op}(f1,g1,id,const b(p0,q0,r0,s))(t); f1, g1 use ehelp on the p0 data up to v'(s) and on the p data above"
            ),
        ));
    }
    let [f, g, h]: [BaseFunction; 3] = outs.try_into().expect("three outputs");
    let witness = TzConditionalWitness::new(k, d0, d, e, f, g, h)?.with_origin(Origin { source, prefix });
    Ok(Translated { witness, natives: em.natives })
}

/// Builds the uniform witness of a uniform system with `d(t) = 6w(t) + 5`
/// and `w(t)` the largest modulus of `F, G, H` at `t` against `u_t`.
pub fn operators_to_tz_uniform(sys: &UniformSystem, prefix: Option<&str>) -> Result<Translated<TzUniformWitness>> {
    let source = System::Uniform(sys.clone());
    let prefix = prefix.map(str::to_string).unwrap_or_else(|| default_prefix("unif-tz", &source));
    for t in [&sys.f, &sys.g, &sys.h] {
        t.modulus_term()?;
    }
    let k = sys.k;
    let sys = Arc::new(sys.clone());
    let mut em = Emitter { prefix: prefix.clone(), natives: Vec::new() };

    let s1 = sys.clone();
    let w = move |t: &Nat| {
        let u = u_majorant(t);
        [&s1.f, &s1.g, &s1.h]
            .iter()
            .map(|op| op.modulus(&u, t).expect("modulus checked at construction"))
            .max()
            .unwrap()
    };
    let w = Arc::new(w);
    let w2 = w.clone();
    em.emit(
        Native::monotone(em.name("w"), 1, move |a| w2(&a[0])),
        "w(t) = max of the moduli of F, G, H at t against u(.,t)",
    );
    let d = em.emit(Native::monotone(em.name("d"), 1, move |a| w(&a[0]) * 6u32 + 5u32), "d(t) = 6 w(t) + 5");
    let mut outs = Vec::new();
    for (which, part, op) in [(0usize, "f", "F"), (1, "g", "G"), (2, "h", "H")] {
        let (s1, s2) = (sys.clone(), sys.clone());
        outs.push(em.emit(
            Native::new(
                em.name(part),
                3 * k + 1,
                move |a| {
                    let op = [&s1.f, &s1.g, &s1.h][which];
                    op.eval(&special_oracles(&a[..3 * k]), &a[3 * k]).expect("arity checked")
                },
                move |a| {
                    let op = [&s2.f, &s2.g, &s2.h][which];
                    let g = data_majorant(&a[..3 * k], Nat::zero());
                    op.bound_eval(&g, &a[3 * k]).expect("modulus checked at construction")
                },
            ),
            &format!("{part}(p,q,r,t) = {op}(ehelp(p,q,r,.), ehelp(q,p,r,.), id)(t)"),
        ));
    }
    let [f, g, h]: [BaseFunction; 3] = outs.try_into().expect("three outputs");
    let witness = TzUniformWitness::new(k, d, f, g, h)?.with_origin(Origin { source, prefix });
    Ok(Translated { witness, natives: em.natives })
}

/// `max(f_1(0), g_1(0), …, f_k(0), g_k(0), last)` as a node.
fn magnitude_max(k: usize, last: Arc<Node>) -> Result<Arc<Node>> {
    let max = std_native("max");
    let zero = Node::base(BaseFunction::zero(1), vec![Node::var()])?;
    let mut acc = last;
    for i in (0..k).rev() {
        for slot in [3 * i + 2, 3 * i + 1] {
            acc = Node::base(max.clone(), vec![Node::apply(slot, zero.clone()), acc])?;
        }
    }
    Ok(acc)
}

fn reads_at(k: usize, at: &Arc<Node>) -> Vec<Arc<Node>> {
    (1..=3 * k).map(|slot| Node::apply(slot, at.clone())).collect()
}

/// The operator system of a conditional witness:
/// `E(…)(s′) = e(f_i(d0(s)), g_i(d0(s)), h_i(d0(s)), s)` with
/// `s = max(f_i(0), g_i(0), s′)`, and `F, G, H` applying `f, g, h` to reads at
/// `d0(s)` and `d(s, t)` with `s = max(f_i(0), g_i(0), a(t))`.
pub fn tz_to_operators_conditional(w: &TzConditionalWitness) -> Result<ConditionalSystem> {
    let k = w.k;
    let s = magnitude_max(k, Node::var())?;
    let d0 = Node::base(w.d0.clone(), vec![s.clone()])?;
    let mut args = reads_at(k, &d0);
    args.push(s);
    let e = OperatorTerm::new(3 * k, Node::base(w.e.clone(), args)?)?;

    let t = Node::var();
    let s = magnitude_max(k, Node::apply(3 * k + 1, t.clone()))?;
    let d0 = Node::base(w.d0.clone(), vec![s.clone()])?;
    let d = Node::base(w.d.clone(), vec![s.clone(), t.clone()])?;
    let mut args = reads_at(k, &d0);
    args.extend(reads_at(k, &d));
    args.push(s);
    args.push(t);
    let term = |c: &BaseFunction| OperatorTerm::new(3 * k + 1, Node::base(c.clone(), args.clone())?);
    ConditionalSystem::new(k, e, term(&w.f)?, term(&w.g)?, term(&w.h)?)
}

/// The operator system of a uniform witness: reads at `d(t′)` with
/// `t′ = max(t, f_i(0), g_i(0))`, then `f, g, h` at `t′`.
pub fn tz_to_operators_uniform(w: &TzUniformWitness) -> Result<UniformSystem> {
    let k = w.k;
    let t1 = magnitude_max(k, Node::var())?;
    let d = Node::base(w.d.clone(), vec![t1.clone()])?;
    let mut args = reads_at(k, &d);
    args.push(t1);
    let term = |c: &BaseFunction| OperatorTerm::new(3 * k, Node::base(c.clone(), args.clone())?);
    UniformSystem::new(k, term(&w.f)?, term(&w.g)?, term(&w.h)?)
}

// ---------------------------------------------------------------------------
// search bounds

/// A per-point bound on the accepted parameter over all special names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBound {
    pub t: Nat,
    /// Deepest prefix level visited.
    pub depth: usize,
    /// Number of closed branches.
    pub branches: usize,
    /// Closed prefixes (one `2k`-tuple per level) and their accepting `s`.
    pub certificate: Vec<(Vec<Vec<Nat>>, Nat)>,
    /// `E` evaluations spent.
    pub evaluations: u64,
}

/// Oracles reading the current search path, zero past its end.
fn prefix_oracles(path: &Arc<RwLock<Vec<Vec<Nat>>>>, k: usize) -> Vec<FunctionOracle> {
    let mut out = Vec::with_capacity(3 * k);
    for i in 0..k {
        for j in 0..2 {
            let path = path.clone();
            out.push(FunctionOracle::new(move |x| {
                let path = path.read().expect("search path lock");
                usize::try_from(x).ok().and_then(|x| path.get(x)).map(|lvl| lvl[2 * i + j].clone()).unwrap_or_default()
            }));
        }
        out.push(FunctionOracle::identity());
    }
    out
}

/// Explores special-name prefixes of `point` in lexicographic order. A branch
/// closes at depth `z` when some `s` with modulus at most `z` is accepted,
/// so every special name through that prefix is accepted at `s`. `budget`
/// caps both the scanned `s` and the number of `E` evaluations.
pub fn compute_search_bound(sys: &ConditionalSystem, point: &[BigRational], budget: u64) -> Result<SearchBound> {
    if point.len() != sys.k {
        return Err(Error::arity("search point", sys.k, point.len()));
    }
    let k = sys.k;
    // special names of ξ are majorized by (S+2)(x+1) once |ξ| ≤ S+1
    let big_s = point
        .iter()
        .map(|x| x.abs().ceil().to_integer().to_biguint().unwrap_or_default())
        .max()
        .unwrap_or_default();
    let g = u_majorant(&big_s);
    // s grouped by modulus
    let mut by_modulus: BTreeMap<Nat, Vec<Nat>> = BTreeMap::new();
    for s in 0..=budget {
        let s = nat(s);
        by_modulus.entry(sys.e.modulus(&g, &s)?).or_default().push(s);
    }
    let deepest = by_modulus.keys().next_back().cloned().unwrap_or_default();

    let exhausted = |what: String| Error::BudgetExhausted { budget, context: Some(what) };
    let mut out = SearchBound { t: Nat::zero(), depth: 0, branches: 0, certificate: Vec::new(), evaluations: 0 };
    let path = Arc::new(RwLock::new(Vec::new()));
    let oracles = prefix_oracles(&path, k);
    // depth-first, children in lexicographic order; frame z holds the choices for level z
    let mut frames: Vec<(Vec<Vec<Nat>>, usize)> = vec![(enumerate_special_prefix(point, &Nat::zero()), 0)];
    while let Some((choices, next)) = frames.last_mut() {
        let Some(lvl) = choices.get(*next).cloned() else {
            frames.pop();
            continue;
        };
        *next += 1;
        let z = frames.len() - 1;
        {
            let mut p = path.write().expect("search path lock");
            p.truncate(z);
            p.push(lvl);
        }
        out.depth = out.depth.max(z);
        let mut accepted = None;
        if let Some(candidates) = by_modulus.get(&nat(z as u64)) {
            for s in candidates {
                if out.evaluations >= budget {
                    return Err(exhausted(format!("spent {budget} evaluations at depth {z}")));
                }
                out.evaluations += 1;
                if sys.e.eval(&oracles, s)?.is_zero() {
                    accepted = Some(s.clone());
                    break;
                }
            }
        }
        match accepted {
            Some(s) => {
                out.t = out.t.max(s.clone());
                out.branches += 1;
                out.certificate.push((path.read().expect("search path lock").clone(), s));
            }
            None => {
                if nat(z as u64) >= deepest {
                    return Err(exhausted(format!("no s <= {budget} closes the branch at depth {z}")));
                }
                frames.push((enumerate_special_prefix(point, &nat(z as u64 + 1)), 0));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// documents

/// A top-level object of a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Object {
    System(System),
    Witness(Witness),
    Native(NativeDef),
}

impl std::fmt::Display for Object {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Object::System(s) => s.fmt(f),
            Object::Witness(w) => w.fmt(f),
            Object::Native(d) => d.fmt(f),
        }
    }
}

/// `(define-native NAME :eval F [:majorant M])`: a named native computing `F`.
/// `M` is an asserted monotone majorant; without one the native can be
/// evaluated but has no modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NativeDef {
    pub name: String,
    pub eval: BaseFunction,
    pub majorant: Option<BaseFunction>,
}

impl NativeDef {
    pub fn function(&self) -> BaseFunction {
        let arity = self.eval.arity();
        let eval = self.eval.clone();
        let run = move |x: &[Nat]| eval.eval(x).expect("arity checked at definition");
        let native = match &self.majorant {
            Some(m) => {
                let m = m.clone();
                Native::new(&self.name, arity, run, move |x: &[Nat]| {
                    m.eval(x).expect("arity checked at definition")
                })
            }
            None => Native::unbounded(&self.name, arity, run),
        };
        BaseFunction::native(native)
    }

    fn parse(sexp: &Sexp, registry: &NativeRegistry) -> Result<NativeDef> {
        let items = sexp.expect_list("native definition")?;
        let pos = sexp.pos();
        let name = items
            .get(1)
            .ok_or_else(|| Error::syntax(pos, "`define-native` needs a name"))?
            .expect_atom("native name")?
            .to_string();
        if registry.get(&name).is_some() {
            return Err(Error::syntax(pos, format!("native `{name}` is already defined")));
        }
        let slots = slots(&items[2..], pos)?;
        let eval = parse_base_sexp(take_slot(&slots, "eval", pos)?, registry, None)?;
        let majorant = match slots.iter().find(|(l, _)| *l == "majorant") {
            Some((_, m)) => Some(parse_base_sexp(m, registry, Some(eval.arity()))?),
            None => None,
        };
        Ok(NativeDef { name, eval, majorant })
    }
}

impl std::fmt::Display for NativeDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(define-native {} :eval {}", self.name, self.eval)?;
        if let Some(m) = &self.majorant {
            write!(f, " :majorant {m}")?;
        }
        f.write_str(")")
    }
}

/// A sequence of forms. Witness forms with `:source` register the natives
/// of their translation so that later forms can refer to them.
#[derive(Debug, Clone)]
pub struct Document {
    pub registry: NativeRegistry,
    pub objects: Vec<Object>,
}

impl Document {
    pub fn last(&self) -> Option<&Object> {
        self.objects.last()
    }

    /// Text of every object before the last one.
    pub fn prelude(&self) -> Vec<String> {
        let n = self.objects.len().saturating_sub(1);
        self.objects[..n].iter().map(Object::to_string).collect()
    }
}

fn regenerate(origin: &Origin, head: &str) -> Result<Vec<BaseFunction>> {
    Ok(match (head, &origin.source) {
        ("tz-conditional", System::Conditional(sys)) => operators_to_tz_conditional(sys, Some(&origin.prefix))?.natives,
        ("tz-uniform", System::Uniform(sys)) => operators_to_tz_uniform(sys, Some(&origin.prefix))?.natives,
        _ => return Err(Error::Invalid(format!("`{head}` cannot be derived from this source"))),
    })
}

fn load_form(sexp: &Sexp, registry: &mut NativeRegistry) -> Result<Object> {
    match sexp.head() {
        Some("tz-conditional" | "tz-uniform") => {
            if let Some(origin) = parse_origin(sexp, registry)? {
                for f in regenerate(&origin, sexp.head().unwrap())? {
                    registry.insert(f);
                }
            }
            Ok(Object::Witness(parse_witness_sexp(sexp, registry)?))
        }
        Some("define-native") => {
            let def = NativeDef::parse(sexp, registry)?;
            registry.insert(def.function());
            Ok(Object::Native(def))
        }
        _ => Ok(Object::System(parse_system_sexp(sexp, registry)?)),
    }
}

pub fn load_document(text: &str) -> Result<Document> {
    let mut registry = NativeRegistry::standard().clone();
    let mut objects = Vec::new();
    for form in parse_all(text)? {
        objects.push(load_form(&form, &mut registry)?);
    }
    if objects.is_empty() {
        return Err(Error::syntax(0, "empty document"));
    }
    Ok(Document { registry, objects })
}

/// Joins forms into document text.
pub fn write_document(forms: &[String]) -> String {
    let mut out = forms.join("\n\n");
    out.push('\n');
    out
}

/// JSON text mapping each component of `obj` to the construction it came from.
pub fn provenance_json(obj: &Object) -> String {
    let mut map = serde_json::Map::new();
    let mut put = |k: &str, v: String| {
        map.insert(k.to_string(), serde_json::Value::String(v));
    };
    let component = |f: &BaseFunction| match (f.native_name(), f.provenance()) {
        (Some(name), Some(p)) => format!("{name}: {p}"),
        (Some(name), None) => name.to_string(),
        _ => f.to_string(),
    };
    match obj {
        Object::Witness(Witness::Conditional(w)) => {
            put("kind", "tz-conditional".into());
            for (label, f) in [("d0", &w.d0), ("d", &w.d), ("e", &w.e), ("f", &w.f), ("g", &w.g), ("h", &w.h)] {
                put(label, component(f));
            }
            put("normalization", "E', F', G', H' read K(f,g,h), K(g,f,h), id in place of each name; K(f,g,h)(n) = ehelp(f(2n+1), g(2n+1), h(2n+1), n)".into());
        }
        Object::Witness(Witness::Uniform(w)) => {
            put("kind", "tz-uniform".into());
            for (label, f) in [("d", &w.d), ("f", &w.f), ("g", &w.g), ("h", &w.h)] {
                put(label, component(f));
            }
        }
        Object::System(System::Conditional(_)) => {
            put("kind", "conditional-system".into());
            put("E", "E(f,g,h)(s') = e(f(d0(s)), g(d0(s)), h(d0(s)), s) with s = max(f(0), g(0), s'), or the source E".into());
            put("F", "F(f,g,h,a)(t) = f(reads at d0(s), reads at d(s,t), s, t) with s = max(f(0), g(0), a(t)), or the source F".into());
            put("G", "as F with g".into());
            put("H", "as F with h".into());
        }
        Object::System(System::Uniform(_)) => {
            put("kind", "uniform-system".into());
            put("F", "F(f,g,h)(t) = f(reads at d(t'), t') with t' = max(t, f(0), g(0))".into());
            put("G", "as F with g".into());
            put("H", "as F with h".into());
        }
        Object::Native(d) => {
            put("kind", "native".into());
            put("eval", d.eval.to_string());
            put("majorant", d.majorant.as_ref().map_or_else(|| "none".to_string(), ToString::to_string));
        }
    }
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("json values serialize")
}
