use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("pole placement failed: {0}")]
    Placement(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("simulation diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("history lookup at t = {time} outside stored span [{start}, {end}]")]
    HistorySpan { time: f64, start: f64, end: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
