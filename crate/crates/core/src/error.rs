use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Reliability,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("nonstationary process: {0}")]
    Stationarity(String),

    #[error("sample too small: need at least {needed} observations, got {got}")]
    Size { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular gram matrix{} (reciprocal condition {rcond:.3e})", context_suffix(.model, .index, .scheme))]
    Singular {
        model: Option<String>,
        scheme: Option<String>,
        index: Option<usize>,
        rcond: f64,
    },

    #[error("observation {index} has leverage {leverage} and fully determines its own fit")]
    LeverageDegenerate { index: usize, leverage: f64 },

    #[error("empty or underdetermined training set for index {index} under {scheme} ({size} rows, {params} parameters)")]
    TrainingSet {
        scheme: String,
        index: usize,
        size: usize,
        params: usize,
    },

    #[error("no evaluated observations")]
    EmptyMask,

    #[error("decomposition identity violated: relative residual {residual:.3e}")]
    Identity { residual: f64 },

    #[error("downdate and refit disagree at index {index}: max abs difference {diff:.3e}")]
    Crosscheck { index: usize, diff: f64 },

    #[error("unreliable cell {cell}: {failed} of {reps} replications failed")]
    Reliability {
        cell: String,
        failed: usize,
        reps: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn context_suffix(
    model: &Option<String>,
    index: &Option<usize>,
    scheme: &Option<String>,
) -> String {
    let mut out = String::new();
    if let Some(m) = model {
        out.push_str(&format!(" for model {m}"));
    }
    if let Some(s) = scheme {
        out.push_str(&format!(" under {s}"));
    }
    if let Some(i) = index {
        out.push_str(&format!(" at index {i}"));
    }
    out
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Stationarity(_)
            | Error::Size { .. }
            | Error::Parameter(_)
            | Error::Config(_)
            | Error::Json(_) => ErrorClass::Config,
            Error::Singular { .. }
            | Error::LeverageDegenerate { .. }
            | Error::TrainingSet { .. }
            | Error::EmptyMask
            | Error::Identity { .. }
            | Error::Crosscheck { .. } => ErrorClass::Numerical,
            Error::Reliability { .. } => ErrorClass::Reliability,
            Error::Io(_) | Error::Csv(_) => ErrorClass::Io,
        }
    }

    /// Attaches a model id to a singularity error.
    pub fn with_model(self, id: &str) -> Self {
        match self {
            Error::Singular {
                scheme,
                index,
                rcond,
                ..
            } => Error::Singular {
                model: Some(id.to_string()),
                scheme,
                index,
                rcond,
            },
            other => other,
        }
    }

    pub(crate) fn with_scheme(self, label: &str) -> Self {
        match self {
            Error::Singular {
                model,
                index,
                rcond,
                ..
            } => Error::Singular {
                model,
                scheme: Some(label.to_string()),
                index,
                rcond,
            },
            other => other,
        }
    }

    pub(crate) fn with_index(self, i: usize) -> Self {
        match self {
            Error::Singular {
                model,
                scheme,
                rcond,
                ..
            } => Error::Singular {
                model,
                scheme,
                index: Some(i),
                rcond,
            },
            other => other,
        }
    }

    /// True for failures that a Monte Carlo replication may absorb by exclusion.
    pub fn is_fit_failure(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::LeverageDegenerate { .. } | Error::TrainingSet { .. }
        )
    }
}
