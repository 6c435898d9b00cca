use thiserror::Error;

/// Errors raised by the closure, the solver and the diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("total vacuum: closure undefined at R = Q = 0")]
    TotalVacuum,

    #[error("closure root not bracketed for R = {r}, Q = {q}: F(hi) = {f_hi}")]
    NotBracketed { r: f64, q: f64, f_hi: f64 },

    #[error("closure did not converge for R = {r}, Q = {q} after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        r: f64,
        q: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("non-positive sound speed squared {value:e} at R = {r}, Q = {q}")]
    NonPositiveSoundSpeed { r: f64, q: f64, value: f64 },

    #[error("inconsistent volume fraction alpha = {alpha} with Q = {q} > 0")]
    VolumeFraction { alpha: f64, q: f64 },

    #[error("vacuum in cell {cell}: R = {r:e}, Q = {q:e} (floor {floor:e})")]
    Vacuum { cell: usize, r: f64, q: f64, floor: f64 },

    #[error("NaN detected in cell {cell} at t = {t}")]
    NotANumber { cell: usize, t: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("incompatible Neumann data: |sum f| = {sum:e} exceeds {bound:e}")]
    Incompatible { sum: f64, bound: f64 },

    #[error("boundary-incompatible field: normal component {value:e} at boundary cell {cell}")]
    BoundaryNormal { cell: usize, value: f64 },

    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})")]
    CgNoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric (defect {0:e})")]
    NotSymmetric(f64),

    #[error("singular or indefinite matrix: {0}")]
    Singular(String),

    #[error("chi = {chi} does not exceed the threshold {threshold} = (3/2) Z^gamma_plus")]
    ChiTooSmall { chi: f64, threshold: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("uncovered cell {cell} with center {center:?}")]
    Uncovered { cell: usize, center: [f64; 2] },
}

impl Error {
    /// Numerical aborts (vacuum, NaN) as opposed to invalid input.
    pub fn is_numerical_abort(&self) -> bool {
        matches!(self, Error::Vacuum { .. } | Error::NotANumber { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} = {value}")))
    }
}
