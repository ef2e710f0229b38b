use thiserror::Error;

/// Errors shared across the numeric modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: max |A - A^t| = {residual:e} exceeds tol {tol:e}")]
    NonSymmetric { residual: f64, tol: f64 },

    #[error("Jacobi eigensolver failed to converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension too large: {what} requires {needed} which exceeds the cap {cap}")]
    DimensionTooLarge {
        what: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("branch index {k} out of range 1..={max}")]
    IndexOutOfRange { k: usize, max: usize },

    #[error("matrix is not in the interior of the cone (lambda_1 = {lambda1:e})")]
    NotInterior { lambda1: f64 },

    #[error("test jet does not violate the dual cone (lambda_1(-D^2 phi) = {lambda1:e})")]
    NotAViolation { lambda1: f64 },

    #[error("basis columns are linearly dependent (pivot {pivot:e} below tol)")]
    DegenerateBasis { pivot: f64 },

    #[error("gradient vanishes (norm {norm:e}); no tangential plane defined")]
    ZeroGradient { norm: f64 },

    #[error("probe point is off the boundary: |rho| = {rho:e} exceeds tol {tol:e}")]
    ProbeOffBoundary { rho: f64, tol: f64 },

    #[error("no sample points found in the shell delta in [{delta_min}, {delta_max}]")]
    ShellEmpty { delta_min: f64, delta_max: f64 },

    #[error("domain has no interior grid nodes")]
    EmptyInterior,

    #[error("frame pairing failed: eigenvector residual {residual:e}")]
    FramePairingFailed { residual: f64 },

    #[error("inhomogeneity psi must be nonnegative, got {psi}")]
    NegativePsi { psi: f64 },

    #[error("solver did not converge within {iters} iterations (final residual {residual:e})")]
    NotConverged { iters: usize, residual: f64 },

    #[error("defining-function upgrade failed: no A <= {a_max} works")]
    UpgradeFailed { a_max: f64 },

    #[error("syntax error at byte {offset}: {msg}")]
    SyntaxError { offset: usize, msg: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    ArityError {
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("evaluation error in `{node}`: {msg}")]
    EvaluationError { node: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
