//! Symbolic Form Language: lexing, parsing, binding names to workspace
//! symbols and recursive evaluation per particle.

use std::fmt;

pub mod ast;
pub mod eval;
pub mod functions;
pub mod keyword;
pub mod lexer;
pub mod parser;
pub mod tree;

pub use ast::{BinaryOp, EquationSyntax, Expr};
pub use eval::{evaluate, EvalContext, EvalError, RandKey, Staged, Staging};
pub use functions::{Arity, Builtin, FunctionEntry, FunctionKind, FunctionTable, Reduction};
pub use keyword::{decode_kernel_keyword, KernelFamily, KernelKeyword, UnknownKernel};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse_equation, parse_expression, parse_tokens};
pub use tree::{bind, BindError, Node, SymbolRef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub message: String,
    /// 1-based character column.
    pub column: usize,
}

impl SyntaxError {
    pub fn new(message: impl Into<String>, column: usize) -> Self {
        SyntaxError {
            message: message.into(),
            column,
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.message, self.column)
    }
}

impl std::error::Error for SyntaxError {}
