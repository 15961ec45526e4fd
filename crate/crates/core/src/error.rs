use thiserror::Error;

use crate::state::StateDiagnostics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("time {t} outside tabulated range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(StateDiagnostics),

    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("invariant repair at t = {t} exceeded bound: hermiticity defect {herm:e}, trace defect {trace:e}")]
    RepairBound { t: f64, herm: f64, trace: f64 },

    #[error("quadrature failed to converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rate table: {0}")]
    Table(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A failure inside a grid scan, tagged with the initial-state parameter.
    #[error("scan point a = {a}: {source}")]
    AtPoint { a: f64, source: Box<Error> },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        if let Error::AtPoint { source, .. } = self {
            return source.is_numerical();
        }
        matches!(
            self,
            Error::StepUnderflow { .. }
                | Error::RepairBound { .. }
                | Error::Quadrature { .. }
                | Error::Numerical(_)
        )
    }
}
