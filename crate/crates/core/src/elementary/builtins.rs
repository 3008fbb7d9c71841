//! Builtin computing systems for the elementary functions.
//!
//! Each system reads its arguments at an index chosen so that the argument
//! error costs at most `1/(2(t+1))` of output precision. Transcendental
//! values are rounded to the grid `1/(4(t+1))` from an enclosure of width
//! `1/(16(t+1))`, which keeps the total error below `1/(t+1)`.
//!
//! Acceptance tests of the conditional systems:
//! * reciprocal: `|p − q|(s+1) ≥ 2(r+1)` at index `s`, so `|ξ| > 1/(s+1)`;
//! * ln: `(p ∸ q)(s+1) ≥ 2(r+1)` at index `s`, so `ξ > 1/(s+1)`;
//! * exp: `3^(c+2) ≤ s+1` for `c = ⌈(p ∸ q)/(r+1)⌉` at index 0, so `e^ξ < (s+1)/3`;
//! * sqrt: `(q ∸ p)(s+1) < r+1` at index `s`, which every name of a
//!   non-negative real passes at `s = 0`.

use std::sync::Arc;

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::interval::{self, Iv};
use crate::base_dsl::{monus, BaseFunction, Native, NativeRegistry};
use crate::error::{Error, Result};
use crate::operator_terms::{Node, OperatorTerm};
use crate::systems::{ConditionalSystem, UniformSystem};
use crate::Nat;

/// Upper limit on working precision, in bits, for the interval evaluations.
const MAX_PREC: u32 = 1 << 20;

fn nat(v: u64) -> Nat {
    Nat::from(v)
}

fn int(n: &Nat) -> BigInt {
    BigInt::from(n.clone())
}

fn approx_value(p: &Nat, q: &Nat, r: &Nat) -> BigRational {
    BigRational::new(int(p) - int(q), int(&(r + 1u32)))
}

/// `Q = 4(t+1)`, the output grid.
fn grid(t: &Nat) -> Nat {
    (t + 1u32) * 4u32
}

/// Splits a signed numerator into `(p, q)`.
fn split(v: BigInt) -> (Nat, Nat) {
    if v.is_negative() {
        (Nat::zero(), (-v).to_biguint().unwrap())
    } else {
        (v.to_biguint().unwrap(), Nat::zero())
    }
}

fn one_if(b: bool) -> Nat {
    if b {
        Nat::one()
    } else {
        Nat::zero()
    }
}

/// `round(fun(a)·Q)` clamped to `[−cap, cap]`; `None` from `fun` yields 0.
fn rounded(fun: fn(&Iv) -> Option<Iv>, a: &BigRational, t: &Nat, cap: &Nat) -> BigInt {
    let q = int(&grid(t));
    let v = interval::round_scaled(|prec| fun(&Iv::from_rational(a, prec)), &q, MAX_PREC).unwrap_or_default();
    let cap = int(cap);
    v.max(-&cap).min(cap)
}

fn exp_scaled(p: &Nat, q: &Nat, r: &Nat, s: &Nat, t: &Nat) -> Nat {
    let cap = grid(t) * (s + 2u32);
    let a = approx_value(p, q, r);
    let big = BigRational::from_integer(BigInt::from((s + 2u32).bits() + 1));
    if a >= big {
        return cap;
    }
    let small = BigRational::from_integer(-BigInt::from(grid(t).bits() + 4));
    if a <= small {
        return Nat::zero();
    }
    split(rounded(|x| Some(interval::exp(x)), &a, t, &cap)).0
}

fn ln_scaled(p: &Nat, q: &Nat, r: &Nat, s: &Nat, t: &Nat) -> BigInt {
    let a = approx_value(p, q, r);
    if !a.is_positive() {
        return BigInt::zero();
    }
    let cap = grid(t) * (p + s + 2u32);
    rounded(interval::ln, &a, t, &cap)
}

fn sqrt_scaled(p: &Nat, q: &Nat, r: &Nat, t: &Nat) -> Nat {
    if p <= q {
        return Nat::zero();
    }
    // P = ⌊√(a)·Q + 1/2⌋, the largest P with (2P − 1)² ≤ 4aQ²
    let qq = grid(t);
    let num = (p - q) * &qq * &qq * 4u32;
    let den = r + 1u32;
    let target = num / &den;
    // (2P − 1)² ≤ ⌊4aQ²⌋ ⇔ (2P − 1)² ≤ 4aQ² for integer squares
    let root = target.sqrt();
    let p_out = (root + 1u32) / 2u32;
    p_out.min(qq * (p + 1u32))
}

fn trig_scaled(fun: fn(&Iv) -> Option<Iv>, p: &Nat, q: &Nat, r: &Nat, t: &Nat) -> BigInt {
    let a = approx_value(p, q, r);
    rounded(fun, &a, t, &grid(t))
}

fn sin_iv(x: &Iv) -> Option<Iv> {
    Some(interval::sin(x))
}

fn cos_iv(x: &Iv) -> Option<Iv> {
    Some(interval::cos(x))
}

fn bounded_by_one() -> impl Fn(&[Nat]) -> Nat + Send + Sync + 'static {
    |_| Nat::one()
}

/// Registers every native used by the builtin systems.
pub(crate) fn register_natives(reg: &mut NativeRegistry) {
    let mut add = |n: Native| reg.insert(BaseFunction::native(n));

    // shared helpers
    add(Native::monotone("grid.r", 1, |a| grid(&a[0]) - 1u32));
    add(Native::monotone("half.index", 1, |a| (&a[0] + 1u32) * 2u32 - 1u32));

    // reciprocal
    add(Native::new(
        "recip.accept",
        4,
        |a| {
            let d = if a[0] >= a[1] { &a[0] - &a[1] } else { &a[1] - &a[0] };
            one_if(d * (&a[3] + 1u32) < (&a[2] + 1u32) * 2u32)
        },
        bounded_by_one(),
    ));
    add(Native::monotone("recip.index", 2, |a| {
        let s1 = &a[0] + 1u32;
        &s1 * &s1 * (&a[1] + 1u32) * 2u32 - 1u32
    }));
    add(Native::new(
        "recip.p",
        3,
        |a| if a[0] > a[1] { &a[2] + 1u32 } else { Nat::zero() },
        |a| &a[2] + 1u32,
    ));
    add(Native::new(
        "recip.q",
        3,
        |a| if a[1] > a[0] { &a[2] + 1u32 } else { Nat::zero() },
        |a| &a[2] + 1u32,
    ));
    add(Native::new(
        "recip.r",
        3,
        |a| {
            let d = if a[0] >= a[1] { &a[0] - &a[1] } else { &a[1] - &a[0] };
            monus(&d, &Nat::one())
        },
        |a| &a[0] + &a[1],
    ));

    // exp
    add(Native::new(
        "exp.accept",
        4,
        |a| {
            let c = monus(&a[0], &a[1]).div_ceil(&(&a[2] + 1u32));
            let bound = &a[3] + 1u32;
            let mut pow = nat(9);
            let mut i = Nat::zero();
            while pow <= bound && i < c {
                pow *= 3u32;
                i += 1u32;
            }
            one_if(pow > bound)
        },
        bounded_by_one(),
    ));
    add(Native::monotone("exp.index", 2, |a| (&a[0] + 1u32) * (&a[1] + 1u32) * 2u32 - 1u32));
    add(Native::new(
        "exp.p",
        5,
        |a| exp_scaled(&a[0], &a[1], &a[2], &a[3], &a[4]),
        |a| grid(&a[4]) * (&a[3] + 2u32),
    ));

    // ln
    add(Native::new(
        "ln.accept",
        4,
        |a| one_if(monus(&a[0], &a[1]) * (&a[3] + 1u32) < (&a[2] + 1u32) * 2u32),
        bounded_by_one(),
    ));
    add(Native::monotone("ln.index", 2, |a| (&a[0] + 1u32) * (&a[1] + 1u32) * 4u32 - 1u32));
    add(Native::new(
        "ln.p",
        5,
        |a| split(ln_scaled(&a[0], &a[1], &a[2], &a[3], &a[4])).0,
        |a| grid(&a[4]) * (&a[0] + &a[3] + 2u32),
    ));
    add(Native::new(
        "ln.q",
        5,
        |a| split(ln_scaled(&a[0], &a[1], &a[2], &a[3], &a[4])).1,
        |a| grid(&a[4]) * (&a[0] + &a[3] + 2u32),
    ));

    // sqrt
    add(Native::new(
        "sqrt.accept",
        4,
        |a| one_if(monus(&a[1], &a[0]) * (&a[3] + 1u32) >= &a[2] + 1u32),
        bounded_by_one(),
    ));
    add(Native::monotone("sqrt.index", 1, |a| {
        let t1 = &a[0] + 1u32;
        &t1 * &t1 * 16u32 - 1u32
    }));
    add(Native::new(
        "sqrt.p",
        4,
        |a| sqrt_scaled(&a[0], &a[1], &a[2], &a[3]),
        |a| grid(&a[3]) * (&a[0] + 1u32),
    ));

    // sin, cos
    for (name, fun) in [("sin", sin_iv as fn(&Iv) -> Option<Iv>), ("cos", cos_iv)] {
        add(Native::new(
            format!("{name}.p"),
            4,
            move |a| split(trig_scaled(fun, &a[0], &a[1], &a[2], &a[3])).0,
            |a| grid(&a[3]),
        ));
        add(Native::new(
            format!("{name}.q"),
            4,
            move |a| split(trig_scaled(fun, &a[0], &a[1], &a[2], &a[3])).1,
            |a| grid(&a[3]),
        ));
    }

    // add: (p1, q1, r1, p2, q2, r2)
    add(Native::monotone("add.p", 6, |a| &a[0] * (&a[5] + 1u32) + &a[3] * (&a[2] + 1u32)));
    add(Native::monotone("add.q", 6, |a| &a[1] * (&a[5] + 1u32) + &a[4] * (&a[2] + 1u32)));
    add(Native::monotone("add.r", 6, |a| (&a[2] + 1u32) * (&a[5] + 1u32) - 1u32));

    // mul
    add(Native::monotone("mul.index", 5, |a| {
        let b1 = a[0].clone().max(a[1].clone()) + 1u32;
        let b2 = a[2].clone().max(a[3].clone()) + 1u32;
        (b1 + b2 + 1u32) * (&a[4] + 1u32) * 2u32 - 1u32
    }));
    add(Native::monotone("mul.p", 6, |a| &a[0] * &a[3] + &a[1] * &a[4]));
    add(Native::monotone("mul.q", 6, |a| &a[0] * &a[4] + &a[1] * &a[3]));
    add(Native::monotone("mul.r", 6, |a| (&a[2] + 1u32) * (&a[5] + 1u32) - 1u32));
}

fn std_native(name: &str) -> BaseFunction {
    NativeRegistry::std(name)
}

fn base(name: &str, args: Vec<Arc<Node>>) -> Arc<Node> {
    Node::base(std_native(name), args).expect("builtin arity")
}

fn zero_node() -> Arc<Node> {
    Node::base(BaseFunction::zero(1), vec![Node::var()]).unwrap()
}

fn reads(slots: std::ops::RangeInclusive<usize>, at: &Arc<Node>) -> Vec<Arc<Node>> {
    slots.map(|k| Node::apply(k, at.clone())).collect()
}

fn with(mut v: Vec<Arc<Node>>, extra: impl IntoIterator<Item = Arc<Node>>) -> Vec<Arc<Node>> {
    v.extend(extra);
    v
}

fn term(arity: usize, root: Arc<Node>) -> OperatorTerm {
    OperatorTerm::new(arity, root).expect("builtin term")
}

/// Names of the supported builtin operations.
pub const BUILTINS: &[&str] = &["id", "neg", "abs", "recip", "sqrt", "exp", "ln", "sin", "cos", "add", "mul"];

pub fn reciprocal() -> ConditionalSystem {
    let x = Node::var();
    let e = base("recip.accept", with(reads(1..=3, &x), [x.clone()]));
    let m = base("recip.index", vec![Node::apply(4, x.clone()), x.clone()]);
    let r = reads(1..=3, &m);
    ConditionalSystem::new(
        1,
        term(3, e),
        term(4, base("recip.p", r.clone())),
        term(4, base("recip.q", r.clone())),
        term(4, base("recip.r", r)),
    )
    .unwrap()
}

pub fn exp() -> ConditionalSystem {
    let x = Node::var();
    let z = zero_node();
    let e = base("exp.accept", with(reads(1..=3, &z), [x.clone()]));
    let s = Node::apply(4, x.clone());
    let m = base("exp.index", vec![s.clone(), x.clone()]);
    let args = with(reads(1..=3, &m), [s, x.clone()]);
    ConditionalSystem::new(
        1,
        term(3, e),
        term(4, base("exp.p", args)),
        term(4, z),
        term(4, base("grid.r", vec![x])),
    )
    .unwrap()
}

pub fn ln() -> ConditionalSystem {
    let x = Node::var();
    let e = base("ln.accept", with(reads(1..=3, &x), [x.clone()]));
    let s = Node::apply(4, x.clone());
    let m = base("ln.index", vec![s.clone(), x.clone()]);
    let args = with(reads(1..=3, &m), [s, x.clone()]);
    ConditionalSystem::new(
        1,
        term(3, e),
        term(4, base("ln.p", args.clone())),
        term(4, base("ln.q", args)),
        term(4, base("grid.r", vec![x])),
    )
    .unwrap()
}

pub fn sqrt() -> ConditionalSystem {
    let x = Node::var();
    let e = base("sqrt.accept", with(reads(1..=3, &x), [x.clone()]));
    let m = base("sqrt.index", vec![x.clone()]);
    let args = with(reads(1..=3, &m), [x.clone()]);
    ConditionalSystem::new(
        1,
        term(3, e),
        term(4, base("sqrt.p", args)),
        term(4, zero_node()),
        term(4, base("grid.r", vec![x])),
    )
    .unwrap()
}

fn trig(name: &str) -> UniformSystem {
    let x = Node::var();
    let m = base("half.index", vec![x.clone()]);
    let args = with(reads(1..=3, &m), [x.clone()]);
    UniformSystem::new(
        1,
        term(3, base(&format!("{name}.p"), args.clone())),
        term(3, base(&format!("{name}.q"), args)),
        term(3, base("grid.r", vec![x])),
    )
    .unwrap()
}

pub fn sin() -> UniformSystem {
    trig("sin")
}

pub fn cos() -> UniformSystem {
    trig("cos")
}

pub fn add() -> UniformSystem {
    let x = Node::var();
    let m = base("half.index", vec![x]);
    let r = reads(1..=6, &m);
    UniformSystem::new(
        2,
        term(6, base("add.p", r.clone())),
        term(6, base("add.q", r.clone())),
        term(6, base("add.r", r)),
    )
    .unwrap()
}

pub fn mul() -> UniformSystem {
    let x = Node::var();
    let z = zero_node();
    let idx_args = vec![
        Node::apply(1, z.clone()),
        Node::apply(2, z.clone()),
        Node::apply(4, z.clone()),
        Node::apply(5, z),
        x,
    ];
    let m = base("mul.index", idx_args);
    let r = reads(1..=6, &m);
    UniformSystem::new(
        2,
        term(6, base("mul.p", r.clone())),
        term(6, base("mul.q", r.clone())),
        term(6, base("mul.r", r)),
    )
    .unwrap()
}

pub fn neg() -> UniformSystem {
    UniformSystem::new(
        1,
        OperatorTerm::read(3, 2).unwrap(),
        OperatorTerm::read(3, 1).unwrap(),
        OperatorTerm::read(3, 3).unwrap(),
    )
    .unwrap()
}

pub fn abs() -> UniformSystem {
    let x = Node::var();
    let diff = |a: usize, b: usize| {
        Node::base(BaseFunction::monus(), vec![Node::apply(a, x.clone()), Node::apply(b, x.clone())]).unwrap()
    };
    let mag = Node::base(std_native("add"), vec![diff(1, 2), diff(2, 1)]).unwrap();
    UniformSystem::new(1, term(3, mag), term(3, zero_node()), OperatorTerm::read(3, 3).unwrap()).unwrap()
}

/// The canonical name of `c` as a `k`-ary uniform system that ignores its arguments.
pub fn constant(k: usize, c: &BigRational) -> UniformSystem {
    let mag = c.abs();
    let (a, b) = (mag.numer().to_biguint().unwrap(), mag.denom().to_biguint().unwrap());
    // round((t+1)a/b) = ⌊((t+1)·2a + b) / 2b⌋ = quot((t+1)·2a + b, 2b − 1)
    let add = std_native("add");
    let succ_t = BaseFunction::subst(BaseFunction::succ(), vec![BaseFunction::proj(1, 1)]).unwrap();
    let scaled = BaseFunction::subst(BaseFunction::mul(), vec![succ_t, BaseFunction::constant(&(&a * 2u32), 1)]).unwrap();
    let shifted = BaseFunction::subst(add, vec![scaled, BaseFunction::constant(&b, 1)]).unwrap();
    let rounded = BaseFunction::subst(BaseFunction::quot(), vec![shifted, BaseFunction::constant(&(&b * 2u32 - 1u32), 1)]).unwrap();
    let x = Node::var();
    let num = Node::base(if a.is_zero() { BaseFunction::zero(1) } else { rounded }, vec![x.clone()]).unwrap();
    let zero = zero_node();
    let (f, g) = if c.is_negative() { (zero, num) } else { (num, zero) };
    let n = 3 * k;
    UniformSystem::new(k, term(n, f), term(n, g), term(n, x)).unwrap()
}

/// A builtin by name, as a conditional system.
pub fn builtin_system(name: &str) -> Result<ConditionalSystem> {
    let lift = |u: UniformSystem| ConditionalSystem::from_uniform(&u);
    Ok(match name {
        "id" => ConditionalSystem::projection(1, 1)?,
        "neg" => lift(neg()),
        "abs" => lift(abs()),
        "recip" | "reciprocal" => reciprocal(),
        "sqrt" => sqrt(),
        "exp" => exp(),
        "ln" => ln(),
        "sin" => lift(sin()),
        "cos" => lift(cos()),
        "add" => lift(add()),
        "mul" => lift(mul()),
        other => return Err(Error::UnknownOp(other.to_string())),
    })
}

/// A builtin by name, when it is uniform.
pub fn builtin_uniform(name: &str) -> Result<UniformSystem> {
    Ok(match name {
        "id" => UniformSystem::projection(1, 1)?,
        "neg" => neg(),
        "abs" => abs(),
        "sin" => sin(),
        "cos" => cos(),
        "add" => add(),
        "mul" => mul(),
        "recip" | "reciprocal" | "sqrt" | "exp" | "ln" => {
            return Err(Error::Invalid(format!("`{name}` has no uniform system on its whole domain")))
        }
        other => return Err(Error::UnknownOp(other.to_string())),
    })
}
