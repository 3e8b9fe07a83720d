use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hurwitz: spectral abscissa {spectral_abscissa:.6e}")]
    NotHurwitz { spectral_abscissa: f64 },

    #[error("system is unstable (spectral abscissa {spectral_abscissa:.6e}); a proper LTI system has finite L1 gain only if it is stable")]
    UnstableSystem { spectral_abscissa: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("system is not strictly proper")]
    NotStrictlyProper,

    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    Improper { num: usize, den: usize },

    #[error("evaluation at omega = {omega} rad/s hits an imaginary-axis pole")]
    PoleOnAxis { omega: f64 },

    #[error("singular: {0}")]
    Singular(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("no gain crossover on [{lo:.3e}, {hi:.3e}] rad/s; extend the frequency grid")]
    NoCrossover { lo: f64, hi: f64 },

    #[error("pole/zero cancellation at s = 0 (|num(0)| = {num:.3e}, |den(0)| = {den:.3e})")]
    CancellationAtOrigin { num: f64, den: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("step guard tripped at t = {t:.6} s: {estimate} moved {change:.3e} in one step (limit {limit:.3e}); reduce h")]
    StepGuard {
        t: f64,
        estimate: &'static str,
        change: f64,
        limit: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
