use thiserror::Error;

/// Errors shared by the laboratory's numerical services.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension N = {0} rejected: the construction requires N >= 7")]
    DimensionTooLow(usize),

    #[error("dimension N = {0} rejected: modules are exercised only up to N = 10")]
    DimensionTooHigh(usize),

    #[error("invalid radial bounds: r_min = {r_min}, r_max = {r_max} (need 0 < r_min < r_max)")]
    InvalidBounds { r_min: f64, r_max: f64 },

    #[error("too few grid points: {0} (need at least 64)")]
    TooFewPoints(usize),

    #[error("grid quadrature self-check failed: relative defect {defect:e} exceeds {tol:e}")]
    QuadratureDefect { defect: f64, tol: f64 },

    #[error("dimension mismatch between {left} and {right}")]
    DimensionMismatch {
        left: &'static str,
        right: &'static str,
    },

    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error(
        "amplitude fit failed: ratio not constant (min {min:e}, max {max:e}, spread {spread:e})"
    )]
    AmplitudeNotConstant { min: f64, max: f64, spread: f64 },

    #[error("cross-check `{name}` disagrees: {a:e} vs {b:e} (relative gap {gap:e} > {tol:e})")]
    CrossCheckFailed {
        name: &'static str,
        a: f64,
        b: f64,
        gap: f64,
        tol: f64,
    },

    #[error("operator `{label}` symmetry defect {defect:e} exceeds {tol:e}")]
    SymmetryDefect {
        label: String,
        defect: f64,
        tol: f64,
    },

    #[error("eigen-solve failed: {0}")]
    EigenSolve(String),

    #[error("decomposition solver diverged after {iters} iterations (residual {residual:e})")]
    NewtonDiverged { iters: usize, residual: f64 },

    #[error("near-degenerate modulation system: condition number {cond:e}")]
    NearDegenerate { cond: f64 },

    #[error("virial weight audit failed: property {property} at r = {location}: {detail}")]
    WeightAudit {
        property: &'static str,
        location: f64,
        detail: String,
    },

    #[error("time stepping aborted: {0}")]
    Evolution(String),

    #[error("blow-up sentinel tripped: sup |u| = {0:e} exceeds 1e6")]
    BlowUp(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
