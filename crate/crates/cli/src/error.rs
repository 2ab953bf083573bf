use std::fmt;

/// Where a parse error occurred: a config file line or a command-line flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub origin: String,
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(col: usize, msg: impl Into<String>) -> Self {
        Self { origin: String::new(), line: 1, col, msg: msg.into() }
    }

    /// Re-anchors an error from a value that started at `line:col` of `origin`.
    pub fn at(mut self, origin: &str, line: usize, col: usize) -> Self {
        self.origin = origin.to_string();
        self.line = line;
        self.col += col - 1;
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.origin.is_empty() {
            write!(f, "line {}, column {}: {}", self.line, self.col, self.msg)
        } else {
            write!(f, "{}: line {}, column {}: {}", self.origin, self.line, self.col, self.msg)
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] lowregret::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Check(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Core(lowregret::Error::Budget { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
