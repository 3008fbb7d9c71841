//! Certified enclosures of expression values at rational points, computed
//! with interval arithmetic and independent of the operator pipeline.

use num::{BigRational, Signed};

use super::expr::{BinaryOp, Expr, UnaryOp};
use super::interval::{self, Iv};
use crate::error::{Error, Result};

fn walk(e: &Expr, env: &dyn Fn(&str) -> Option<BigRational>, prec: u32) -> Result<Option<Iv>> {
    Ok(match e {
        Expr::Lit(c) => Some(Iv::from_rational(c, prec)),
        Expr::Var(v) => {
            let x = env(v).ok_or_else(|| Error::UnboundVariable(v.clone()))?;
            Some(Iv::from_rational(&x, prec))
        }
        Expr::Unary(op, a) => {
            let Some(a) = walk(a, env, prec)? else { return Ok(None) };
            match op {
                UnaryOp::Neg => Some(a.neg()),
                UnaryOp::Abs => Some(abs(&a)),
                UnaryOp::Recip => Iv::from_int(1, prec).div(&a),
                UnaryOp::Sqrt => (!a.hi.is_negative()).then(|| interval::sqrt(&a)),
                UnaryOp::Exp => Some(interval::exp(&a)),
                UnaryOp::Ln => interval::ln(&a),
                UnaryOp::Sin => Some(interval::sin(&a)),
                UnaryOp::Cos => Some(interval::cos(&a)),
            }
        }
        Expr::Binary(op, a, b) => {
            let (Some(a), Some(b)) = (walk(a, env, prec)?, walk(b, env, prec)?) else { return Ok(None) };
            match op {
                BinaryOp::Add => Some(a.add(&b)),
                BinaryOp::Sub => Some(a.sub(&b)),
                BinaryOp::Mul => Some(a.mul(&b)),
                BinaryOp::Div => a.div(&b),
            }
        }
    })
}

fn abs(a: &Iv) -> Iv {
    if !a.lo.is_negative() {
        a.clone()
    } else if !a.hi.is_positive() {
        a.neg()
    } else {
        let hi = a.hi.clone().max(-a.lo.clone());
        Iv { lo: 0.into(), hi, prec: a.prec }
    }
}

/// An interval of width at most `width` containing the value of `expr`.
/// `None` when no such interval is found below `max_prec` bits, which is
/// what happens outside the domain.
pub fn enclose_expr(
    expr: &Expr,
    env: &dyn Fn(&str) -> Option<BigRational>,
    width: &BigRational,
    max_prec: u32,
) -> Result<Option<(BigRational, BigRational)>> {
    // surface unbound variables before the precision loop swallows them
    walk(expr, env, 8)?;
    let iv = interval::enclose(|prec| walk(expr, env, prec).ok().flatten(), width, max_prec);
    Ok(iv.map(|iv| (iv.lo_rat(), iv.hi_rat())))
}
