use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit codes: validation
/// problems are caller errors, numerical failures signal insufficient resolution.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cutoff mismatch: {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Beltrami bound violated: sup|mu| estimate {sup:.6} >= 1")]
    BeltramiBound { sup: f64 },
    #[error("leaves not dense: lambda vanishes at mode ({p}, {m}, {k})")]
    LeavesNotDense { p: i64, m: i64, k: i64 },
    #[error("not in the domain of D_z^-1: average {average:.3e} is not zero")]
    NotInDomain { average: f64 },
    #[error("resolvent iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    ResolventDiverged { iterations: usize, residual: f64 },
    #[error("possible zero of f: min|f| = {min_abs:.3e} at x = {x:?}, t = {t:.6}")]
    PossibleZero { min_abs: f64, x: [f64; 3], t: f64 },
    #[error("step size underflow at t = {t:.6} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("t too large for almost-complex structure: sup|nu| = {sup:.6} at t = {t:.6}")]
    NuTooLarge { sup: f64, t: f64 },
    #[error("metric not positive definite at x = {x:?} (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { x: [f64; 3], min_eigenvalue: f64 },
    #[error("closedness residual {residual:.3e} exceeds {tol:.3e}; path integral ill-defined")]
    NotClosed { residual: f64, tol: f64 },
    #[error("malformed field document: {0}")]
    Format(String),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ResolventDiverged { .. }
                | Error::PossibleZero { .. }
                | Error::StepSizeUnderflow { .. }
                | Error::NuTooLarge { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::NotClosed { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
