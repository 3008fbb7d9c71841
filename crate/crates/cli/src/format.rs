use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

use condreal::names::round_half_up;
use condreal::Nat;

/// Least `t` with `1/(t+1) <= eps`.
pub fn eps_to_t(eps: &BigRational) -> Option<Nat> {
    if !eps.is_positive() {
        return None;
    }
    let inv = eps.recip().ceil().to_integer() - BigInt::one();
    Some(inv.max(BigInt::zero()).to_biguint().expect("non-negative"))
}

pub enum Format {
    Rational,
    Decimal(u32),
}

impl Format {
    /// `None` chooses by precision flag: decimal for `--eps`, rational for `--t`.
    pub fn parse(text: Option<&str>, t: &Nat, from_eps: bool) -> Result<Format, String> {
        match text {
            Some("rational") => Ok(Format::Rational),
            Some(other) => {
                let digits = other
                    .strip_prefix("decimal:")
                    .and_then(|d| d.parse::<u32>().ok())
                    .ok_or_else(|| format!("unknown format `{other}`; use rational or decimal:D"))?;
                Ok(Format::Decimal(digits))
            }
            None if from_eps => Ok(Format::Decimal(default_digits(t))),
            None => Ok(Format::Rational),
        }
    }
}

/// One digit past the last one the guarantee resolves.
fn default_digits(t: &Nat) -> u32 {
    let len = (t + 1u32).to_string().len();
    u32::try_from(len).unwrap_or(u32::MAX)
}

/// Correctly rounded decimal (ties away from zero) with `digits` fractional places.
pub fn decimal(x: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let n = round_half_up(&(x.abs() * &scale));
    let sign = if x.is_negative() && !n.is_zero() { "-" } else { "" };
    let (int, frac) = n.div_rem(&scale);
    if digits == 0 {
        return format!("{sign}{int}");
    }
    let width = digits.to_usize().expect("digit count fits");
    format!("{sign}{int}.{frac:0>width$}")
}

pub fn render(value: &BigRational, t: &Nat, format: &Format) -> String {
    let bound = t + 1u32;
    match format {
        Format::Rational => format!("{value} (± 1/{bound})"),
        Format::Decimal(d) => format!("{} (± 1/{bound}, rounded to {d} places)", decimal(value, *d)),
    }
}
