use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// A size cap was hit (truth-table width, DNF clause count, ...).
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared variable `{name}` at line {line}, column {column}")]
    UndeclaredVariable { name: String, line: usize, column: usize },
    #[error("unsatisfiable rules: empty valid set")]
    Unsatisfiable,
    #[error("training diverged at epoch {epoch}, step {step}: {detail}")]
    Divergence { epoch: usize, step: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
