use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("arity mismatch in {node}: expected {expected}, found {found}")]
    ArityMismatch {
        node: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown native function `{0}`")]
    UnknownNative(String),

    #[error("native function `{0}` has no declared majorant")]
    MissingMajorant(String),

    #[error("no parameter found with s <= {budget}{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    BudgetExhausted {
        budget: u64,
        context: Option<String>,
    },

    #[error("unknown operation `{0}`")]
    UnknownOp(String),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn syntax(pos: usize, msg: impl Into<String>) -> Self {
        Error::Syntax {
            pos,
            msg: msg.into(),
        }
    }

    pub(crate) fn arity(node: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::ArityMismatch {
            node: node.into(),
            expected,
            found,
        }
    }
}
