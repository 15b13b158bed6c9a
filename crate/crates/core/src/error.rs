use crate::expr::{EvalError, Position};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{source_name}:{}:{}: {message}", pos.line, pos.column)]
    Syntax {
        source_name: String,
        pos: Position,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown scenario '{0}' (try `list`)")]
    UnknownScenario(String),
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("degenerate metric on '{label}' at {point:?}: smallest eigenvalue {min_eig:e}")]
    DegenerateMetric {
        label: String,
        point: Vec<f64>,
        min_eig: f64,
    },
    #[error("rank-deficient differential at {point:?}: singular value ratio {ratio:e}")]
    RankDeficient { point: Vec<f64>, ratio: f64 },
    #[error("distribution ranks vary across sample points: {0}")]
    RankInstability(String),
    #[error("manifold '{0}' has no almost complex structure")]
    MissingJ(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. } | Error::Validation(_) | Error::UnknownScenario(_) | Error::Io { .. } => 2,
            Error::MissingJ(_) => 2,
            Error::Eval { .. }
            | Error::DegenerateMetric { .. }
            | Error::RankDeficient { .. }
            | Error::RankInstability(_) => 3,
        }
    }

    pub fn eval(point: &[f64], source: EvalError) -> Self {
        Error::Eval {
            point: point.to_vec(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
