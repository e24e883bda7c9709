//! Numeric builtins and the reverse-mode tape.

mod builtin;
mod tape;

pub use builtin::Builtin;
pub use tape::{BinaryOp, EvalError, Gradients, Tape, Value, Var};
