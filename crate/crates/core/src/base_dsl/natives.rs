//! Registry of named native functions and the standard natives.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use num::Zero;

use super::{monus, BaseFunction, Native};
use crate::Nat;

/// Name-indexed natives available to the parsers.
#[derive(Debug, Clone, Default)]
pub struct NativeRegistry {
    map: BTreeMap<String, BaseFunction>,
}

static STANDARD: LazyLock<NativeRegistry> = LazyLock::new(|| {
    let mut reg = NativeRegistry::default();
    reg.insert(BaseFunction::native(Native::monotone("add", 2, |a| &a[0] + &a[1])));
    reg.insert(BaseFunction::native(Native::monotone("max", 2, |a| a[0].clone().max(a[1].clone()))));
    reg.insert(BaseFunction::native(Native::new(
        "ehelp",
        4,
        |a| ehelp_nat(&a[0], &a[1], &a[2], &a[3]),
        |a| (&a[3] + 1u32) * &a[0] + 1u32,
    )));
    reg.insert(BaseFunction::native(Native::monotone("pair", 2, |a| cantor_pair(&a[0], &a[1]))));
    reg.insert(BaseFunction::native(Native::new(
        "unpair.l",
        1,
        |a| cantor_unpair(&a[0]).0,
        |a| a[0].clone(),
    )));
    reg.insert(BaseFunction::native(Native::new(
        "unpair.r",
        1,
        |a| cantor_unpair(&a[0]).1,
        |a| a[0].clone(),
    )));
    crate::elementary::register_natives(&mut reg);
    reg
});

impl NativeRegistry {
    /// Arithmetic helpers plus every native used by the builtin elementary systems.
    pub fn standard() -> &'static NativeRegistry {
        &STANDARD
    }

    /// Adds (or replaces) a native. Non-native functions are ignored.
    pub fn insert(&mut self, f: BaseFunction) {
        if let Some(name) = f.native_name() {
            self.map.insert(name.to_string(), f);
        }
    }

    pub fn get(&self, name: &str) -> Option<&BaseFunction> {
        self.map.get(name)
    }

    /// Looks up a standard native by name; panics when it is missing.
    pub(crate) fn std(name: &str) -> BaseFunction {
        Self::standard()
            .get(name)
            .unwrap_or_else(|| panic!("standard native `{name}` is registered"))
            .clone()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    /// The standard registry extended by `extra`.
    pub fn standard_with(extra: impl IntoIterator<Item = BaseFunction>) -> NativeRegistry {
        let mut reg = Self::standard().clone();
        for f in extra {
            reg.insert(f);
        }
        reg
    }
}

/// `⌊(n+1)(p∸q)/(r+1) + 1/2⌋` in exact integer arithmetic.
pub fn ehelp_nat(p: &Nat, q: &Nat, r: &Nat, n: &Nat) -> Nat {
    let diff = monus(p, q);
    if diff.is_zero() {
        return Nat::zero();
    }
    let r1 = r + 1u32;
    let num = (n + 1u32) * diff * 2u32 + &r1;
    num / (r1 * 2u32)
}

/// Cantor pairing `(a+b)(a+b+1)/2 + b`.
pub fn cantor_pair(a: &Nat, b: &Nat) -> Nat {
    let s = a + b;
    (&s * (&s + 1u32) >> 1) + b
}

/// Inverse of [`cantor_pair`].
pub fn cantor_unpair(z: &Nat) -> (Nat, Nat) {
    let w = ((z * 8u32 + 1u32).sqrt() - 1u32) >> 1;
    let tri = (&w * (&w + 1u32)) >> 1;
    let b = z - tri;
    let a = w - &b;
    (a, b)
}
