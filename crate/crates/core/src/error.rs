use thiserror::Error;

/// Errors raised by the thermal modelling library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("no rows retained after validation ({dropped} dropped)")]
    NoRows { dropped: usize },

    #[error("detected time step {detected} s does not match expected {expected} s")]
    StepMismatch { detected: i64, expected: i64 },

    #[error("invalid timestamp `{0}`")]
    Timestamp(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty {0} set after weekday/weekend split")]
    EmptySplit(&'static str),

    #[error("series is empty")]
    EmptySeries,

    #[error("insufficient samples: {got} < {need} ({context})")]
    InsufficientSamples {
        got: usize,
        need: usize,
        context: String,
    },

    #[error("degenerate regressor: {0}")]
    Degenerate(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wraps an error with the pipeline stage it surfaced in.
    pub fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input data or configuration rather than
    /// by the computation itself.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io(_)
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::NoRows { .. }
            | Error::StepMismatch { .. }
            | Error::Timestamp(_)
            | Error::InvalidArgument(_) => true,
            Error::Stage { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
