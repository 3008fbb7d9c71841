//! Reference values computed from scratch with exact rational arithmetic.
//! Nothing here goes through the library's interval code.

use num::{BigInt, BigRational, One, Signed, Zero};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn factorial_bound(x: &BigRational, n: u32) -> BigRational {
    // |x|^n / n!
    let mut term = BigRational::one();
    for i in 1..=n {
        term = term * x.abs() / BigRational::from_integer(BigInt::from(i));
    }
    term
}

/// Enclosure of `exp(x)` for `|x| <= 1`: Taylor partial sum plus the Lagrange
/// remainder `3|x|^(n+1)/(n+1)!`.
pub fn exp_small(x: &BigRational, width: &BigRational) -> (BigRational, BigRational) {
    assert!(x.abs() <= BigRational::one());
    let three = BigRational::from_integer(3.into());
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut n = 0u32;
    loop {
        sum += &term;
        n += 1;
        term = term * x / BigRational::from_integer(BigInt::from(n));
        let rem = &three * factorial_bound(x, n);
        if &rem * BigRational::from_integer(2.into()) < *width {
            return (&sum - &rem, &sum + &rem);
        }
    }
}

/// Enclosure of `sin(x)` (`cosine = false`) or `cos(x)`; the remainder after
/// the degree-`n` partial sum is at most `|x|^(n+1)/(n+1)!`.
pub fn sin_cos(x: &BigRational, cosine: bool, width: &BigRational) -> (BigRational, BigRational) {
    let mut sum = BigRational::zero();
    let mut n: u32 = if cosine { 0 } else { 1 };
    let mut term = if cosine { BigRational::one() } else { x.clone() };
    loop {
        sum += &term;
        term = -term * x * x / BigRational::from_integer(BigInt::from((n + 1) * (n + 2)));
        n += 2;
        let rem = factorial_bound(x, n);
        if &rem * BigRational::from_integer(2.into()) < *width {
            return (&sum - &rem, &sum + &rem);
        }
    }
}

/// Whether `|out − v| < 1/(t+1)` for the `v` enclosed by `enclose(width)`.
/// Shrinks the enclosure until the answer is decided.
pub fn within_enclosed(
    out: &BigRational,
    t: u64,
    enclose: impl Fn(&BigRational) -> (BigRational, BigRational),
) -> bool {
    let eps = q(1, t as i64 + 1);
    let mut width = &eps / BigRational::from_integer(1000.into());
    for _ in 0..40 {
        let (lo, hi) = enclose(&width);
        if out - &eps < lo && hi < out + &eps {
            return true;
        }
        if out - &eps >= hi || lo >= out + &eps {
            return false;
        }
        width = width / BigRational::from_integer(BigInt::from(1u32 << 20));
    }
    panic!("enclosure never separated {out} from the boundary at t = {t}");
}

/// `|out − 1/x| < 1/(t+1)`.
pub fn within_recip(out: &BigRational, x: &BigRational, t: u64) -> bool {
    (out - x.recip()).abs() < q(1, t as i64 + 1)
}

/// `|out − √x| < 1/(t+1)` decided by squaring.
pub fn within_sqrt(out: &BigRational, x: &BigRational, t: u64) -> bool {
    let eps = q(1, t as i64 + 1);
    let lo = out - &eps;
    let hi = out + &eps;
    let below = lo.is_negative() || &lo * &lo < *x;
    let above = hi.is_positive() && &hi * &hi > *x;
    below && above
}
