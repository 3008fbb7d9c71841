//! Certified dyadic interval arithmetic.
//!
//! An [`Iv`] at precision `p` is the closed interval `[lo/2^p, hi/2^p]`.
//! Every operation rounds outwards, so results always enclose the exact
//! value. Callers that need a given width re-run at higher precision.

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iv {
    pub lo: BigInt,
    pub hi: BigInt,
    pub prec: u32,
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_ceil(b)
}

fn isqrt_ceil(n: &BigInt) -> BigInt {
    let r = n.sqrt();
    if &(&r * &r) == n {
        r
    } else {
        r + 1
    }
}

impl Iv {
    pub fn from_rational(x: &BigRational, prec: u32) -> Iv {
        let scaled = x.numer() << prec;
        Iv {
            lo: scaled.div_floor(x.denom()),
            hi: ceil_div(&scaled, x.denom()),
            prec,
        }
    }

    pub fn from_int(n: impl Into<BigInt>, prec: u32) -> Iv {
        let v = n.into() << prec;
        Iv { lo: v.clone(), hi: v, prec }
    }

    pub fn zero(prec: u32) -> Iv {
        Iv::from_int(0, prec)
    }

    pub fn lo_rat(&self) -> BigRational {
        BigRational::new(self.lo.clone(), pow2(self.prec))
    }

    pub fn hi_rat(&self) -> BigRational {
        BigRational::new(self.hi.clone(), pow2(self.prec))
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo_rat() <= x && x <= &self.hi_rat()
    }

    /// `hi − lo` in units of `2^−prec`.
    pub fn width_units(&self) -> BigInt {
        &self.hi - &self.lo
    }

    pub fn width(&self) -> BigRational {
        BigRational::new(self.width_units(), pow2(self.prec))
    }

    /// Largest absolute value in the interval, in units.
    pub fn mag_units(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    /// Re-expresses the interval at another precision, rounding outwards.
    pub fn with_prec(&self, prec: u32) -> Iv {
        if prec >= self.prec {
            let k = prec - self.prec;
            Iv {
                lo: &self.lo << k,
                hi: &self.hi << k,
                prec,
            }
        } else {
            let d = pow2(self.prec - prec);
            Iv {
                lo: self.lo.div_floor(&d),
                hi: ceil_div(&self.hi, &d),
                prec,
            }
        }
    }

    pub fn add(&self, o: &Iv) -> Iv {
        debug_assert_eq!(self.prec, o.prec);
        Iv {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
            prec: self.prec,
        }
    }

    pub fn neg(&self) -> Iv {
        Iv {
            lo: -&self.hi,
            hi: -&self.lo,
            prec: self.prec,
        }
    }

    pub fn sub(&self, o: &Iv) -> Iv {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Iv) -> Iv {
        debug_assert_eq!(self.prec, o.prec);
        let cands = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let mn = cands.iter().min().unwrap();
        let mx = cands.iter().max().unwrap();
        let d = pow2(self.prec);
        Iv {
            lo: mn.div_floor(&d),
            hi: ceil_div(mx, &d),
            prec: self.prec,
        }
    }

    pub fn mul_int(&self, n: &BigInt) -> Iv {
        let (a, b) = (&self.lo * n, &self.hi * n);
        Iv {
            lo: a.clone().min(b.clone()),
            hi: a.max(b),
            prec: self.prec,
        }
    }

    /// Division by a positive integer.
    pub fn div_int(&self, n: &BigInt) -> Iv {
        debug_assert!(n.is_positive());
        Iv {
            lo: self.lo.div_floor(n),
            hi: ceil_div(&self.hi, n),
            prec: self.prec,
        }
    }

    /// Division by an interval that excludes zero.
    pub fn div(&self, o: &Iv) -> Option<Iv> {
        if o.lo.is_positive() || o.hi.is_negative() {
            let s = |a: &BigInt| a << self.prec;
            let pairs = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
            let lo = pairs.iter().map(|(a, b)| s(a).div_floor(b)).min().unwrap();
            let hi = pairs.iter().map(|(a, b)| ceil_div(&s(a), b)).max().unwrap();
            Some(Iv { lo, hi, prec: self.prec })
        } else {
            None
        }
    }

    /// Multiplication by `2^k` (exact for `k ≥ 0`, outward for `k < 0`).
    pub fn scale2(&self, k: i64) -> Iv {
        if k >= 0 {
            Iv {
                lo: &self.lo << k as u32,
                hi: &self.hi << k as u32,
                prec: self.prec,
            }
        } else {
            let d = pow2((-k) as u32);
            Iv {
                lo: self.lo.div_floor(&d),
                hi: ceil_div(&self.hi, &d),
                prec: self.prec,
            }
        }
    }

    /// Widens by `units` on both sides.
    pub fn widen(&self, units: &BigInt) -> Iv {
        Iv {
            lo: &self.lo - units,
            hi: &self.hi + units,
            prec: self.prec,
        }
    }

    pub fn intersect_with(&self, lo: &BigInt, hi: &BigInt) -> Iv {
        Iv {
            lo: self.lo.clone().max(lo.clone()).min(hi.clone()),
            hi: self.hi.clone().min(hi.clone()).max(lo.clone()),
            prec: self.prec,
        }
    }
}

/// `ceil(m^n / (n! · 2^{p(n−1)}))`: a unit bound for `(m/2^p)^n/n!` at precision `p`.
fn taylor_tail_units(mag: &BigInt, n: u32, p: u32) -> BigInt {
    let mut fact = BigInt::one();
    for i in 2..=n {
        fact *= i;
    }
    let num = mag.pow(n);
    let den = fact << (p as u64 * (n as u64 - 1)) as usize;
    ceil_div(&num, &den) + 1
}

fn approx_log2(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(53);
    let top = (x.abs() >> shift).to_f64().unwrap_or(1.0);
    top.log2() + shift as f64
}

/// Number of terms after which `(m/2^p)^n / n!` drops below `2^−target`.
fn taylor_terms(mag: &BigInt, p: u32, target: u32) -> u32 {
    let lg = approx_log2(mag) - p as f64;
    let mut acc = 0.0f64;
    let mut n = 1u32;
    loop {
        acc += lg - (n as f64).log2();
        if acc < -(target as f64) - 2.0 && n > 1 {
            return n;
        }
        n += 1;
        if n > 100_000 {
            return n;
        }
    }
}

/// `e^x`.
pub fn exp(x: &Iv) -> Iv {
    let p = x.prec;
    let mag = x.mag_units();
    // halve until |y| ≤ 1/2
    let k = (mag.bits() as i64 - p as i64 + 1).max(0) as u32;
    let wp = p + 2 * k + 16;
    let y = x.with_prec(wp).scale2(-(k as i64));
    let ymag = y.mag_units();
    let n = taylor_terms(&ymag, wp, wp + 2);
    let mut term = Iv::from_int(1, wp);
    let mut sum = term.clone();
    for i in 1..n {
        term = term.mul(&y).div_int(&BigInt::from(i));
        sum = sum.add(&term);
    }
    // Lagrange remainder with |y| ≤ 1/2: at most 2·|y|^n/n!
    let tail = taylor_tail_units(&ymag, n, wp) * 2;
    sum = sum.widen(&tail);
    if sum.lo.is_negative() {
        sum.lo = BigInt::zero();
    }
    for _ in 0..k {
        sum = sum.mul(&sum);
    }
    sum.with_prec(p)
}

/// `atanh(z) = Σ z^{2i+1}/(2i+1)` for `|z| ≤ 1/2`.
fn atanh_small(z: &Iv) -> Iv {
    let wp = z.prec;
    let zmag = z.mag_units();
    let z2 = z.mul(z);
    let mut pow = z.clone();
    let mut sum = z.clone();
    let lg = approx_log2(&zmag) - wp as f64;
    let mut i = 1u32;
    loop {
        // next omitted term ≈ |z|^{2i+1}
        if lg * f64::from(2 * i + 1) < -(wp as f64) - 4.0 || lg == f64::NEG_INFINITY {
            break;
        }
        pow = pow.mul(&z2);
        sum = sum.add(&pow.div_int(&BigInt::from(2 * i + 1)));
        i += 1;
    }
    // tail ≤ |z|^{2i+1}/(1−z²) ≤ (4/3)|z|^{2i+1}
    let e = 2 * i + 1;
    let tail = ceil_div(&(zmag.pow(e) * 4u32), &(BigInt::from(3u32) << (wp as usize * (e as usize - 1)))) + 1;
    sum.widen(&tail)
}

/// `ln 2 = 2 atanh(1/3)`.
pub fn ln2(prec: u32) -> Iv {
    let wp = prec + 8;
    let third = Iv::from_rational(&BigRational::new(1.into(), 3.into()), wp);
    atanh_small(&third).scale2(1).with_prec(prec)
}

/// `ln x`, or `None` when the interval reaches zero or below.
pub fn ln(x: &Iv) -> Option<Iv> {
    if !x.is_positive() {
        return None;
    }
    let p = x.prec;
    // x = 2^e · y with y ∈ [1, 2) at the lower endpoint
    let e = x.lo.bits() as i64 - 1 - p as i64;
    let wp = p + 16 + (64 - e.unsigned_abs().leading_zeros());
    let xw = x.with_prec(wp);
    let y = xw.scale2(-e);
    let one = Iv::from_int(1, wp);
    let z = y.sub(&one).div(&y.add(&one))?;
    if (&z.hi << 1usize) > (BigInt::one() << wp) {
        return None;
    }
    let mut out = atanh_small(&z).scale2(1);
    if e != 0 {
        out = out.add(&ln2(wp).mul_int(&BigInt::from(e)));
    }
    Some(out.with_prec(p))
}

fn atan_inv(n: u32, wp: u32) -> Iv {
    // Σ (−1)^i / ((2i+1) n^{2i+1}), alternating with decreasing terms
    let nn = BigInt::from(n) * n;
    let mut pow = BigInt::from(n);
    let mut sum = Iv::zero(wp);
    let mut i = 0u32;
    loop {
        let den = &pow * (2 * i + 1);
        let term = Iv::from_int(1, wp).div_int(&den);
        if term.hi <= BigInt::one() {
            return sum.widen(&BigInt::from(2));
        }
        sum = if i % 2 == 0 { sum.add(&term) } else { sum.sub(&term) };
        pow *= &nn;
        i += 1;
    }
}

/// `π` by Machin's formula.
pub fn pi(prec: u32) -> Iv {
    let wp = prec + 12;
    let a = atan_inv(5, wp).mul_int(&BigInt::from(16));
    let b = atan_inv(239, wp).mul_int(&BigInt::from(4));
    a.sub(&b).with_prec(prec)
}

fn reduce_2pi(x: &Iv) -> Iv {
    let p = x.prec;
    let mag_bits = x.mag_units().bits() as u32;
    let wp = p + mag_bits.saturating_sub(p) + 16;
    let two_pi = pi(wp).scale2(1);
    let xw = x.with_prec(wp);
    let mid = (&xw.lo + &xw.hi) >> 1usize;
    let tp_mid = (&two_pi.lo + &two_pi.hi) >> 1usize;
    let k = (mid * 2u32 + &tp_mid).div_floor(&(&tp_mid * 2u32));
    if k.is_zero() {
        return xw;
    }
    xw.sub(&two_pi.mul_int(&k))
}

fn sin_cos_series(r: &Iv, odd: bool) -> Iv {
    let wp = r.prec;
    let rmag = r.mag_units();
    let n = taylor_terms(&rmag, wp, wp + 2).max(2) + 2;
    let r2 = r.mul(r);
    let (mut term, start) = if odd { (r.clone(), 1u32) } else { (Iv::from_int(1, wp), 0u32) };
    let mut sum = term.clone();
    let mut i = start;
    let mut sign = 1;
    while i + 2 < n {
        term = term.mul(&r2).div_int(&BigInt::from((i + 1) * (i + 2)));
        sign = -sign;
        sum = if sign > 0 { sum.add(&term) } else { sum.sub(&term) };
        i += 2;
    }
    let tail = taylor_tail_units(&rmag, i + 1, wp);
    let one = BigInt::one() << wp;
    sum.widen(&tail).intersect_with(&-&one, &one)
}

pub fn sin(x: &Iv) -> Iv {
    let p = x.prec;
    sin_cos_series(&reduce_2pi(x), true).with_prec(p)
}

pub fn cos(x: &Iv) -> Iv {
    let p = x.prec;
    sin_cos_series(&reduce_2pi(x), false).with_prec(p)
}

/// `√x` on the non-negative part of `x`.
pub fn sqrt(x: &Iv) -> Iv {
    let p = x.prec;
    let clamp = |v: &BigInt| if v.is_negative() { BigInt::zero() } else { v.clone() };
    Iv {
        lo: (clamp(&x.lo) << p).sqrt(),
        hi: isqrt_ceil(&(clamp(&x.hi) << p)),
        prec: p,
    }
}

/// Runs `f` at growing precision until `f(prec)·scale` is narrower than
/// `1/4`, then returns the nearest integer to its midpoint.
pub fn round_scaled(f: impl Fn(u32) -> Option<Iv>, scale: &BigInt, max_prec: u32) -> Option<BigInt> {
    let mut prec = scale.bits() as u32 + 24;
    loop {
        if let Some(iv) = f(prec) {
            let w = iv.width_units() * scale;
            if (w << 2usize) <= (BigInt::one() << prec) {
                // round((lo + hi)·scale / 2^{prec+1})
                let twice = (&iv.lo + &iv.hi) * scale;
                let d = BigInt::one() << (prec + 1);
                return Some((twice * 2u32 + &d).div_floor(&(d * 2u32)));
            }
        }
        if prec >= max_prec {
            return None;
        }
        prec = (prec * 2).min(max_prec);
    }
}

/// Runs `f` at growing precision until its width is at most `width`.
/// `None` from `f` means "not decided at this precision".
pub fn enclose(f: impl Fn(u32) -> Option<Iv>, width: &BigRational, max_prec: u32) -> Option<Iv> {
    let mut prec = 32u32;
    loop {
        if let Some(iv) = f(prec) {
            if &iv.width() <= width {
                return Some(iv);
            }
        }
        if prec >= max_prec {
            return None;
        }
        prec = (prec * 2).min(max_prec);
    }
}
