use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("matrix is not Hermitian (‖H − H†‖_F = {residual:.3e}, allowed {allowed:.3e})")]
    NotHermitian { residual: f64, allowed: f64 },

    #[error("Fermi level {fermi_energy} on spectrum (eigenvalue {eigenvalue})")]
    FermiLevelOnSpectrum { fermi_energy: f64, eigenvalue: f64 },

    #[error("spectral gap closed: {0}")]
    GapClosed(String),

    #[error("flux insertion requires an open boundary")]
    FluxRequiresOpenBoundary,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("time-reversal symmetry violated: {0}")]
    TimeReversalViolated(String),

    #[error("eigensolver failed to converge")]
    Eigensolver,

    #[error("numerical consistency check failed: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
