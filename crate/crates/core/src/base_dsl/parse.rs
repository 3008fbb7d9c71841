//! Reader for the base-function s-expression syntax.
//!
//! `(const N)` and substitutions built only from constants have no arity of
//! their own; they take the arity demanded by their context (sibling inners
//! of a substitution, the slot being parsed, or 1 at top level).

use num::Num;

use super::{BaseFunction, InitialKind, NativeRegistry};
use crate::error::{Error, Result};
use crate::sexp::{parse_one, Sexp};
use crate::Nat;

/// Parses a base function, resolving natives against the standard registry.
pub fn parse_base_function(text: &str) -> Result<BaseFunction> {
    parse_base_function_with(text, NativeRegistry::standard(), None)
}

/// Parses a base function with an explicit registry and, optionally, the
/// arity the caller expects.
pub fn parse_base_function_with(
    text: &str,
    registry: &NativeRegistry,
    arity: Option<usize>,
) -> Result<BaseFunction> {
    let sexp = parse_one(text)?;
    let f = parse_base_sexp(&sexp, registry, arity)?;
    Ok(f.with_source(text.trim().to_string()))
}

pub fn parse_base_sexp(
    sexp: &Sexp,
    registry: &NativeRegistry,
    arity: Option<usize>,
) -> Result<BaseFunction> {
    let f = elaborate(sexp, registry, arity)?;
    if let Some(expected) = arity {
        if f.arity() != expected {
            return Err(Error::arity(sexp.to_string(), expected, f.arity()));
        }
    }
    Ok(f)
}

fn is_flexible(sexp: &Sexp) -> bool {
    match sexp.head() {
        Some("const") => true,
        Some("subst") => {
            let items = sexp.as_list().unwrap();
            items.len() > 2 && items[2..].iter().all(is_flexible)
        }
        _ => false,
    }
}

fn elaborate(sexp: &Sexp, registry: &NativeRegistry, hint: Option<usize>) -> Result<BaseFunction> {
    let items = sexp.expect_list("base function")?;
    let pos = sexp.pos();
    let head = items
        .first()
        .ok_or_else(|| Error::syntax(pos, "empty base function form"))?
        .expect_atom("base function head")?;
    let args = &items[1..];
    let want = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::syntax(pos, format!("`{head}` takes {n} operand(s), found {}", args.len())))
        }
    };
    match head {
        "proj" => {
            want(2)?;
            let n = args[0].expect_usize("projection arity")?;
            let k = args[1].expect_usize("projection index")?;
            BaseFunction::initial(InitialKind::Proj { n, k })
                .map_err(|e| Error::syntax(pos, e.to_string()))
        }
        "succ" => want(0).map(|_| BaseFunction::succ()),
        "mul" => want(0).map(|_| BaseFunction::mul()),
        "monus" => want(0).map(|_| BaseFunction::monus()),
        "quot" => want(0).map(|_| BaseFunction::quot()),
        "const" => {
            want(1)?;
            let text = args[0].expect_atom("constant")?;
            let c = Nat::from_str_radix(text, 10)
                .map_err(|_| Error::syntax(args[0].pos(), format!("expected natural number, found `{text}`")))?;
            Ok(BaseFunction::constant(&c, hint.unwrap_or(1)))
        }
        "subst" => {
            if args.len() < 2 {
                return Err(Error::syntax(pos, "`subst` needs an outer function and at least one inner"));
            }
            let inner_forms = &args[1..];
            let mut arity = None;
            for form in inner_forms.iter().filter(|f| !is_flexible(f)) {
                let f = elaborate(form, registry, arity.or(hint))?;
                match arity {
                    None => arity = Some(f.arity()),
                    Some(a) if a != f.arity() => {
                        return Err(Error::arity(form.to_string(), a, f.arity()));
                    }
                    _ => {}
                }
            }
            let arity = arity.or(hint).unwrap_or(1);
            let inners = inner_forms
                .iter()
                .map(|form| parse_base_sexp(form, registry, Some(arity)))
                .collect::<Result<Vec<_>>>()?;
            let outer = elaborate(&args[0], registry, Some(inners.len()))?;
            if outer.arity() != inners.len() {
                return Err(Error::arity(args[0].to_string(), inners.len(), outer.arity()));
            }
            BaseFunction::subst(outer, inners)
        }
        "bmin" => {
            want(1)?;
            let inner = elaborate(&args[0], registry, hint)?;
            BaseFunction::bounded_min(inner)
        }
        "native" => {
            want(1)?;
            let name = args[0].expect_atom("native name")?;
            registry
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnknownNative(name.to_string()))
        }
        other => Err(Error::syntax(items[0].pos(), format!("unknown base function form `{other}`"))),
    }
}
