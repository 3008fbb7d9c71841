#![allow(dead_code)]

//! Independent reference values (exact rational Taylor sums with explicit
//! remainder bounds) and random generators shared by the integration tests.

use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use condreal::{BaseFunction, FunctionOracle, Nat, NativeRegistry, Node};

pub type Interval = (BigRational, BigRational);

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn nat(x: u64) -> Nat {
    Nat::from(x)
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `|x|^n / n!`
fn power_over_factorial(x: &BigRational, n: u64) -> BigRational {
    (1..=n).fold(BigRational::one(), |acc, i| acc * x.abs() / int(i))
}

/// `exp(x)` for `|x| <= 1`, remainder `3|x|^(n+1)/(n+1)!`.
fn exp_unit(x: &BigRational, width: &BigRational) -> Interval {
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut n = 0u64;
    loop {
        sum += &term;
        n += 1;
        term = term * x / int(n);
        let rem = power_over_factorial(x, n) * int(3);
        if &rem * int(2) < *width {
            return (&sum - &rem, &sum + &rem);
        }
    }
}

/// `exp(x)` for any rational `x`, by halving until `|x| <= 1` and squaring back.
pub fn exp(x: &BigRational, width: &BigRational) -> Interval {
    let mut k = 0u32;
    let mut y = x.clone();
    while y.abs() > BigRational::one() {
        y /= int(2);
        k += 1;
    }
    // squaring k times multiplies the relative width by about 2^k; the caller
    // shrinks `width` if that is not enough
    let scale = BigRational::from_integer(BigInt::from(1u64) << (k + 4));
    let (mut lo, mut hi) = exp_unit(&y, &(width / scale));
    for _ in 0..k {
        lo = &lo * &lo;
        hi = &hi * &hi;
    }
    (lo, hi)
}

/// `ln(x)` for `x > 0` as `2 atanh(y)`, `y = (x−1)/(x+1)`; the tail after the
/// `y^(2n−1)` term is at most `2|y|^(2n+1) / ((2n+1)(1−y²))`.
pub fn ln(x: &BigRational, width: &BigRational) -> Interval {
    assert!(x.is_positive());
    let y = (x - BigRational::one()) / (x + BigRational::one());
    let y2 = &y * &y;
    let mut sum = BigRational::zero();
    let mut pow = y.clone();
    let mut n = 1u64;
    loop {
        sum += &pow * int(2) / int(2 * n - 1);
        pow = &pow * &y2;
        let rem = pow.abs() * int(2) / (int(2 * n + 1) * (BigRational::one() - &y2));
        if &rem * int(2) < *width {
            return (&sum - &rem, &sum + &rem);
        }
        n += 1;
    }
}

/// `sin(x)` or `cos(x)`; the remainder after degree `n−1` is at most `|x|^n/n!`.
pub fn sin_cos(x: &BigRational, cosine: bool, width: &BigRational) -> Interval {
    let mut sum = BigRational::zero();
    let mut n: u64 = if cosine { 0 } else { 1 };
    let mut term = if cosine { BigRational::one() } else { x.clone() };
    loop {
        sum += &term;
        term = -term * x * x / int((n + 1) * (n + 2));
        n += 2;
        let rem = power_over_factorial(x, n);
        if &rem * int(2) < *width {
            return (&sum - &rem, &sum + &rem);
        }
    }
}

/// `√x` enclosed by bisection on exact squares.
pub fn sqrt(x: &BigRational, width: &BigRational) -> Interval {
    assert!(!x.is_negative());
    let mut lo = BigRational::zero();
    let mut hi = x.clone().max(BigRational::one());
    while &hi - &lo >= *width {
        let mid = (&lo + &hi) / int(2);
        if &mid * &mid <= *x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Whether `|out − v| < eps` for the `v` enclosed by `enclose`, shrinking
/// the enclosure until the comparison is decided.
pub fn within(out: &BigRational, eps: &BigRational, enclose: impl Fn(&BigRational) -> Interval) -> bool {
    let mut width = eps / int(1000);
    for _ in 0..30 {
        let (lo, hi) = enclose(&width);
        if out - eps < lo && hi < out + eps {
            return true;
        }
        if out - eps >= hi || lo >= out + eps {
            return false;
        }
        width /= int(1 << 20);
    }
    panic!("could not separate {out} from the boundary at eps = {eps}");
}

pub fn eps(t: u64) -> BigRational {
    q(1, t as i64 + 1)
}

pub fn random_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64, max_den: i64) -> BigRational {
    let d = rng.gen_range(1..=max_den);
    q(rng.gen_range(lo * d..=hi * d), d)
}

// ---------------------------------------------------------------------------
// random terms

pub fn operator_pool() -> Vec<BaseFunction> {
    let reg = NativeRegistry::standard();
    vec![
        BaseFunction::succ(),
        BaseFunction::mul(),
        BaseFunction::monus(),
        BaseFunction::quot(),
        reg.get("add").unwrap().clone(),
        reg.get("max").unwrap().clone(),
        reg.get("ehelp").unwrap().clone(),
    ]
}

/// A random operator-term body over `arity` oracles.
pub fn random_node(rng: &mut ChaCha8Rng, arity: usize, depth: u32, pool: &[BaseFunction]) -> Arc<Node> {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.5) { Node::var() } else { Node::apply(rng.gen_range(1..=arity), Node::var()) };
    }
    if rng.gen_bool(0.35) {
        return Node::apply(rng.gen_range(1..=arity), random_node(rng, arity, depth - 1, pool));
    }
    let f = pool[rng.gen_range(0..pool.len())].clone();
    let args = (0..f.arity()).map(|_| random_node(rng, arity, depth - 1, pool)).collect();
    Node::base(f, args).unwrap()
}

/// A random term-backed base function of the given arity. At most one
/// bounded minimum appears, and its bound is always an argument, so
/// evaluation costs at most (largest argument) inner evaluations.
pub fn random_base(rng: &mut ChaCha8Rng, arity: usize, depth: u32, allow_bmin: bool) -> BaseFunction {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..3) {
            0 => BaseFunction::constant(&nat(rng.gen_range(0..5)), arity),
            _ => BaseFunction::proj(arity, rng.gen_range(1..=arity)),
        };
    }
    let choice = rng.gen_range(0..if allow_bmin { 7 } else { 6 });
    let reg = NativeRegistry::standard();
    let outer = match choice {
        0 => BaseFunction::succ(),
        1 => BaseFunction::mul(),
        2 => BaseFunction::monus(),
        3 => BaseFunction::quot(),
        4 => reg.get("add").unwrap().clone(),
        5 => reg.get("max").unwrap().clone(),
        _ => {
            let inner = random_base(rng, arity + 1, depth - 1, false);
            let min = BaseFunction::bounded_min(inner).unwrap();
            let mut inners: Vec<BaseFunction> = (0..arity).map(|_| random_base(rng, arity, depth - 1, false)).collect();
            inners.push(BaseFunction::proj(arity, rng.gen_range(1..=arity)));
            return BaseFunction::subst(min, inners).unwrap();
        }
    };
    let inners = (0..outer.arity())
        .map(|i| random_base(rng, arity, depth - 1, allow_bmin && i == 0))
        .collect();
    BaseFunction::subst(outer, inners).unwrap()
}

/// Low bits of `x` mixed with its length, for seeding per-point randomness.
pub fn low_bits(x: &Nat) -> u64 {
    x.iter_u64_digits().next().unwrap_or(0) ^ x.bits()
}

/// A pseudo-random oracle with `0 <= f(x) <= g(x)`.
pub fn dominated(g: Arc<dyn Fn(&Nat) -> Nat + Send + Sync>, seed: u64) -> FunctionOracle {
    use rand::SeedableRng;
    FunctionOracle::new(move |x| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ low_bits(x).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let num: u32 = rng.gen_range(0..=64);
        g(x) * num / 64u32
    })
}
