//! Exact real arithmetic over subrecursive operator terms.

pub mod base_dsl;
pub mod elementary;
pub mod error;
pub mod names;
pub mod operator_terms;
pub mod sexp;
pub mod systems;
pub mod translations;
pub mod tz;

/// Arbitrary-precision natural number.
pub type Nat = num::BigUint;

pub use base_dsl::{BaseFunction, InitialKind, Native, NativeRegistry};
pub use error::{Error, Result};
pub use names::{RationalApprox, RealName, SpecialName};
pub use operator_terms::{FunctionOracle, Node, OperatorTerm};
pub use systems::{ConditionalSystem, System, UniformSystem};
pub use translations::{
    compute_search_bound, load_document, normalize_system, operators_to_tz_conditional, operators_to_tz_uniform,
    tz_to_operators_conditional, tz_to_operators_uniform, Document, NativeDef, Object, SearchBound,
};
pub use tz::{
    check_tz_conditional_at_point, eval_tz_conditional, eval_tz_uniform, CheckConfig, CheckReport, Target,
    TzConditionalWitness, TzUniformWitness, Witness,
};
