//! Names of reals: rational approximations, naming triples, `ehelp`, the
//! operator `K` and special-name prefixes.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operator_terms::FunctionOracle;
use crate::Nat;

pub use crate::base_dsl::ehelp_nat as ehelp;

/// The rational `(p − q)/(r + 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RationalApprox {
    pub p: Nat,
    pub q: Nat,
    pub r: Nat,
}

impl RationalApprox {
    pub fn new(p: impl Into<Nat>, q: impl Into<Nat>, r: impl Into<Nat>) -> Self {
        RationalApprox {
            p: p.into(),
            q: q.into(),
            r: r.into(),
        }
    }

    pub fn value(&self) -> BigRational {
        let num = BigInt::from(self.p.clone()) - BigInt::from(self.q.clone());
        BigRational::new(num, BigInt::from(&self.r + 1u32))
    }

    /// True when the denotation is strictly within `1/(t+1)` of `target`.
    pub fn within(&self, target: &BigRational, t: &Nat) -> bool {
        let err = (self.value() - target).abs();
        err * BigRational::from_integer(BigInt::from(t + 1u32)) < BigRational::one()
    }
}

impl fmt::Display for RationalApprox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.p, self.q, self.r)
    }
}

impl FromStr for RationalApprox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(Error::syntax(0, format!("expected `p:q:r`, found `{s}`")));
        }
        let nat = |t: &str| {
            Nat::from_str(t).map_err(|_| Error::syntax(0, format!("expected natural number, found `{t}`")))
        };
        Ok(RationalApprox::new(nat(parts[0])?, nat(parts[1])?, nat(parts[2])?))
    }
}

/// Parses `NUM/DEN`, an integer, or a decimal literal, with optional sign.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::syntax(0, format!("expected rational `NUM/DEN` or decimal, found `{text}`"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() || body.starts_with(['+', '-']) {
        return Err(bad());
    }
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((num, den)) = body.split_once('/') {
        if !digits(num) || !digits(den) {
            return Err(bad());
        }
        let den = BigInt::from_str(den).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::syntax(0, format!("zero denominator in `{text}`")));
        }
        BigRational::new(BigInt::from_str(num).map_err(|_| bad())?, den)
    } else if let Some((int, frac)) = body.split_once('.') {
        if !(digits(int) || int.is_empty()) || !digits(frac) {
            return Err(bad());
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let whole = if int.is_empty() { BigInt::zero() } else { BigInt::from_str(int).map_err(|_| bad())? };
        let frac = BigInt::from_str(frac).map_err(|_| bad())?;
        BigRational::new(whole * &scale + frac, scale)
    } else {
        if !digits(body) {
            return Err(bad());
        }
        BigRational::from_integer(BigInt::from_str(body).map_err(|_| bad())?)
    };
    Ok(if neg { -value } else { value })
}

/// Nearest integer to a non-negative rational, ties rounding up.
pub fn round_half_up(x: &BigRational) -> BigInt {
    let two = BigInt::from(2u32);
    (x.numer() * &two + x.denom()).div_floor(&(x.denom() * two))
}

fn to_nat(x: BigInt) -> Nat {
    x.to_biguint().expect("non-negative")
}

/// A naming triple `(f, g, h)`.
#[derive(Debug, Clone)]
pub struct RealName {
    pub f: FunctionOracle,
    pub g: FunctionOracle,
    pub h: FunctionOracle,
}

impl RealName {
    pub fn new(f: FunctionOracle, g: FunctionOracle, h: FunctionOracle) -> Self {
        RealName { f, g, h }
    }

    /// A name driven by one function producing whole approximations.
    pub fn from_approx_fn(approx: impl Fn(&Nat) -> RationalApprox + Send + Sync + 'static) -> Self {
        let approx = std::sync::Arc::new(approx);
        let (a, b, c) = (approx.clone(), approx.clone(), approx);
        RealName {
            f: FunctionOracle::new(move |n| a(n).p).memoized(),
            g: FunctionOracle::new(move |n| b(n).q).memoized(),
            h: FunctionOracle::new(move |n| c(n).r).memoized(),
        }
    }

    /// The canonical name: nearest-integer numerators over `n + 1`, `h = id`.
    pub fn canonical(value: &BigRational) -> Self {
        let mag = value.abs();
        let neg = value.is_negative();
        let numer = move |n: &Nat| {
            let scaled = &mag * BigRational::from_integer(BigInt::from(n + 1u32));
            to_nat(round_half_up(&scaled))
        };
        let zero = FunctionOracle::constant(Nat::zero());
        let rounded = FunctionOracle::monotone(numer);
        let (f, g) = if neg { (zero, rounded) } else { (rounded, zero) };
        RealName::new(f, g, FunctionOracle::identity())
    }

    /// A valid but irregular name of `value`: every approximation is drawn at
    /// random (seeded per index) inside the open ball of radius `1/(n+1)`.
    pub fn perturbed(value: &BigRational, seed: u64) -> Self {
        let value = value.clone();
        RealName::from_approx_fn(move |n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n.to_u64().unwrap_or(u64::MAX).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            random_approx_in_ball(&value, n, &mut rng)
        })
    }

    pub fn approx(&self, n: &Nat) -> RationalApprox {
        RationalApprox {
            p: self.f.call(n),
            q: self.g.call(n),
            r: self.h.call(n),
        }
    }

    pub fn approx_u64(&self, n: u64) -> RationalApprox {
        self.approx(&Nat::from(n))
    }

    /// Checks the naming inequality at every `n ≤ n_max`; returns the first failing index.
    pub fn validate_at(&self, value: &BigRational, n_max: u64) -> std::result::Result<(), u64> {
        for n in 0..=n_max {
            let n_big = Nat::from(n);
            if !self.approx(&n_big).within(value, &n_big) {
                return Err(n);
            }
        }
        Ok(())
    }

    /// `(K(f,g,h), K(g,f,h))`.
    pub fn apply_k(&self) -> SpecialName {
        let (f, g, h) = (self.f.clone(), self.g.clone(), self.h.clone());
        let k_fg = {
            let (f, g, h) = (f.clone(), g.clone(), h.clone());
            move |n: &Nat| {
                let m = n * 2u32 + 1u32;
                ehelp(&f.call(&m), &g.call(&m), &h.call(&m), n)
            }
        };
        let k_gf = move |n: &Nat| {
            let m = n * 2u32 + 1u32;
            ehelp(&g.call(&m), &f.call(&m), &h.call(&m), n)
        };
        SpecialName {
            f: FunctionOracle::new(k_fg),
            g: FunctionOracle::new(k_gf),
        }
    }

    /// The three oracles in slot order.
    pub fn oracles(&self) -> [FunctionOracle; 3] {
        [self.f.clone(), self.g.clone(), self.h.clone()]
    }
}

/// Random `(p, q, r)` with `|(p−q)/(r+1) − value| < 1/(n+1)`, biased towards
/// the edges of the ball and with random common mass in `p` and `q`.
pub fn random_approx_in_ball(value: &BigRational, n: &Nat, rng: &mut impl Rng) -> RationalApprox {
    let n1 = BigInt::from(n + 1u32);
    let scale: u32 = rng.gen_range(1..=3);
    let den = &n1 * BigInt::from(scale) + BigInt::from(rng.gen_range(0u32..3));
    // integers N with |N − den·value| < den/(n+1)
    let centre = value * BigRational::from_integer(den.clone());
    let radius = BigRational::new(den.clone(), n1);
    let lo: BigInt = (&centre - &radius).floor().to_integer() + 1;
    let hi_r = &centre + &radius;
    let hi: BigInt = if hi_r.is_integer() { hi_r.to_integer() - 1 } else { hi_r.floor().to_integer() };
    let span = (&hi - &lo).to_u64().unwrap_or(0);
    let pick = match rng.gen_range(0u32..4) {
        0 => 0,
        1 => span,
        _ => rng.gen_range(0..=span),
    };
    let numer = lo + BigInt::from(pick);
    let extra = Nat::from(rng.gen_range(0u32..4));
    let (p, q) = if numer.is_negative() {
        (extra.clone(), to_nat(-numer) + extra)
    } else {
        (to_nat(numer) + &extra, extra)
    };
    RationalApprox { p, q, r: to_nat(den - 1) }
}

/// A special name: `(f, g, id)` with `f(n)·g(n) = 0`.
#[derive(Debug, Clone)]
pub struct SpecialName {
    pub f: FunctionOracle,
    pub g: FunctionOracle,
}

impl SpecialName {
    pub fn into_name(self) -> RealName {
        RealName::new(self.f, self.g, FunctionOracle::identity())
    }
}

/// `ŝ = λx.s`.
pub fn constant_oracle(s: Nat) -> FunctionOracle {
    FunctionOracle::constant(s)
}

/// The canonical name of a rational.
pub fn name_of_rational(value: &BigRational) -> RealName {
    RealName::canonical(value)
}

pub fn approx_from_name(name: &RealName, n: &Nat) -> RationalApprox {
    name.approx(n)
}

/// Integers `m` with `|m − (n+1)ξ| < 1`, as `(x, y)` pairs with `x·y = 0`.
pub fn special_prefix_choices(xi: &BigRational, n: &Nat) -> Vec<(Nat, Nat)> {
    let centre = xi * BigRational::from_integer(BigInt::from(n + 1u32));
    let mut out = Vec::with_capacity(2);
    let fl = centre.floor().to_integer();
    let candidates = if centre.is_integer() { vec![fl] } else { vec![fl.clone(), fl + 1] };
    for m in candidates {
        if m.is_negative() {
            out.push((Nat::zero(), to_nat(-m)));
        } else {
            out.push((to_nat(m), Nat::zero()));
        }
    }
    out
}

/// `A_ξ⃗^[n]` as a list of `2k`-tuples `(x₁, y₁, …, x_k, y_k)` in lexicographic order.
pub fn enumerate_special_prefix(xis: &[BigRational], n: &Nat) -> Vec<Vec<Nat>> {
    let mut out: Vec<Vec<Nat>> = vec![Vec::new()];
    for xi in xis {
        let choices = special_prefix_choices(xi, n);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |(x, y)| {
                    let mut t = prefix.clone();
                    t.push(x.clone());
                    t.push(y.clone());
                    t
                })
            })
            .collect();
    }
    out.sort();
    out
}
