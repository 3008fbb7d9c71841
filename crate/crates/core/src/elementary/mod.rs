//! Elementary functions as computing systems, and an expression compiler over them.
pub mod builtins;
pub mod expr;
pub mod interval;
pub mod reference;

pub use builtins::{builtin_system, builtin_uniform, BUILTINS};
pub use expr::{compile_expression, parse_expression, BinaryOp, Compiled, Expr, TraceLine, UnaryOp};

use crate::base_dsl::NativeRegistry;

pub(crate) fn register_natives(reg: &mut NativeRegistry) {
    builtins::register_natives(reg);
}
