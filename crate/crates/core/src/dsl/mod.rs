//! Textual syntax of constraints, processes and programs.
//!
//! ```text
//! program  := item* process ';'?
//! item     := 'var' ident 'persistent'? ('=' num)? ';'
//!           | 'def' ident '(' (ident (',' ident)*)? ')' '=' process ';'
//! process  := prefix ('||' prefix)*
//! prefix   := '0' | 'tell' '(' constraint ')' | 'when' constraint 'do' prefix
//!           | 'local' ident (',' ident)* (',' constraint)? 'in' prefix
//!           | 'next' ('^' num)? prefix | 'rep' '[' num ']' prefix
//!           | ident '(' (value (',' value)*)? ')' | '(' process ')'
//! constraint := primary ('&' primary)*
//! primary  := 'true' | 'false' | term rel term | '(' constraint ')'
//!           | 'exists' ident '.' primary
//! term     := value | ident (('+' | '-') num)?
//! value    := num | 'true' | 'false'
//! ```

mod lexer;
mod parser;
mod pretty;

pub use lexer::Pos;
pub use parser::{parse_constraint, parse_process, parse_program, SourceProgram, VarDecl};
pub use pretty::{pretty, pretty_program};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier { line: usize, col: usize, name: String },
    #[error("`{name}` at {line}:{col} expects {expected} argument(s), got {found}")]
    ArityMismatch { line: usize, col: usize, name: String, expected: usize, found: usize },
    #[error("`{name}` is defined twice (second definition at {line}:{col})")]
    Duplicate { line: usize, col: usize, name: String },
    #[error("unguarded recursion: {}", .cycle.join(" -> "))]
    UnguardedRecursion { cycle: Vec<String> },
}

impl ParseError {
    /// Source position of the error, when it has one.
    pub fn position(&self) -> Option<Pos> {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::UnknownIdentifier { line, col, .. }
            | ParseError::ArityMismatch { line, col, .. }
            | ParseError::Duplicate { line, col, .. } => Some(Pos { line: *line, col: *col }),
            ParseError::UnguardedRecursion { .. } => None,
        }
    }
}
