use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("rank-deficient basis (rank {rank}, expected {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("form is not a symplectic form: {0}")]
    BadForm(String),
    #[error("not Lagrangian: isotropy residual {0:.3e}")]
    NotLagrangian(f64),
    #[error("matrix is not symplectic: residual {0:.3e}")]
    NotSymplectic(f64),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("not transverse: {0}")]
    NotTransverse(String),
    #[error("irregular crossing at s = {s:.9}: crossing form has eigenvalue {eig:.3e}")]
    IrregularCrossing { s: f64, eig: f64 },
    #[error("path discontinuity between samples {0} and {1}")]
    Discontinuous(usize, usize),
    #[error("invalid modulus {0}: must be even and positive")]
    InvalidModulus(i64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(i64, i64),
    #[error("inconsistent grading: {0}")]
    BadGrading(String),
    #[error("not embedded: {0}")]
    NotEmbedded(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("oracle rejected: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
