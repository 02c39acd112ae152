use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Malformed dense-text input. Line and column are 1-based.
    #[error("parse error at line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("input contains no data rows")]
    EmptyInput,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// First cell where `M_t ⊆ M_{t+1}` fails. `t` is 1-based, `row` and `col` 0-based.
    #[error("monotonicity violated: M_{t}({row},{col}) = 1 but M_{next}({row},{col}) = 0", next = .t + 1)]
    Monotonicity { t: usize, row: usize, col: usize },

    #[error("index {index} out of range for size {size}")]
    Index { index: usize, size: usize },

    #[error("cannot flip diagonal cell ({0},{0})")]
    SelfLoop(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("likelihood cache disagrees with a full rebuild at cell ({row},{col})")]
    CacheCorruption { row: usize, col: usize },

    #[error("start state has zero posterior probability")]
    StartState,

    #[error("snapshot {0} has zero variance over the compared cells")]
    DegenerateSnapshot(usize),

    #[error("operation requires a temporal chain result")]
    Mode,

    #[error("chain for alpha = {alpha} failed: {source}")]
    Scan {
        alpha: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    /// True for errors caused by bad input data rather than bad parameters.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Scan { source, .. } => source.is_input_error(),
            _ => matches!(
                self,
                Error::Io(_)
                    | Error::Parse { .. }
                    | Error::EmptyInput
                    | Error::Dimension(_)
                    | Error::Monotonicity { .. }
                    | Error::StartState
            ),
        }
    }
}
