use std::path::PathBuf;

use crate::timeseries::{MonthlyIndex, Window};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("series have no month in common")]
    EmptyIntersection,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: missing month {missing} (gap between {before} and {after})")]
    Gap {
        path: PathBuf,
        missing: MonthlyIndex,
        before: MonthlyIndex,
        after: MonthlyIndex,
    },

    #[error("{path}:{line}: month {found} does not follow {previous}")]
    Order {
        path: PathBuf,
        line: usize,
        previous: MonthlyIndex,
        found: MonthlyIndex,
    },

    #[error("duplicate acronym {0}")]
    DuplicateAcronym(String),

    #[error("duplicate ticker {0}")]
    DuplicateTicker(String),

    #[error("{ticker}: observed price {value} at {month} is not strictly positive")]
    NonPositivePrice {
        ticker: String,
        month: MonthlyIndex,
        value: f64,
    },

    #[error("model document: {0}")]
    Schema(String),

    #[error("unknown CPI component {0}")]
    UnknownComponent(String),

    #[error("requested window {requested} is not covered by the data; feasible: {}", fmt_feasible(.feasible))]
    WindowUnavailable {
        requested: Window,
        feasible: Option<Window>,
    },

    #[error("design matrix is rank deficient (singular value ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("too few observations: need {need}, have {have}")]
    TooFewObservations { need: usize, have: usize },

    #[error("no feasible candidate among {rejected} evaluated")]
    NoFeasibleCandidate { rejected: u64 },

    #[error("series too short: need {need} observations, have {have}")]
    SeriesTooShort { need: usize, have: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular product-moment matrix: {0}")]
    SingularMoment(String),

    #[error("reference price {0} is not negative")]
    NotDistressed(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_feasible(w: &Option<Window>) -> String {
    match w {
        Some(w) => w.to_string(),
        None => "none".to_string(),
    }
}

impl Error {
    /// True for failures that come from the analysis itself rather than from
    /// unreadable or malformed input.
    pub fn is_analytic(&self) -> bool {
        matches!(
            self,
            Error::EmptyIntersection
                | Error::WindowUnavailable { .. }
                | Error::RankDeficient { .. }
                | Error::TooFewObservations { .. }
                | Error::NoFeasibleCandidate { .. }
                | Error::SeriesTooShort { .. }
                | Error::Degenerate(_)
                | Error::SingularMoment(_)
                | Error::NotDistressed(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
