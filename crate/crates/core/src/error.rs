use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("odd harmonic k = {harmonic} has magnitude {magnitude:e}: table is not centrally symmetric")]
    NotCentrallySymmetric { harmonic: usize, magnitude: f64 },

    #[error("radius of curvature {rho:e} at psi = {psi:.12} is not positive: table is not strictly convex")]
    NotConvex { psi: f64, rho: f64 },

    #[error("support function value {value:e} at psi = {psi:.12} is not positive")]
    NonPositive { psi: f64, value: f64 },

    #[error("degenerate chord: {0}")]
    DegenerateChord(String),

    #[error("reflection root not bracketed for line (p = {p}, phi = {phi})")]
    RootNotBracketed { p: f64, phi: f64 },

    #[error("reflection solver did not converge for line (p = {p}, phi = {phi}), residual {residual:e}")]
    NoConvergence { p: f64, phi: f64, residual: f64 },

    #[error("chord endpoints coincide")]
    CoincidentPoints,

    #[error("orbit failed at step {step}: {source}")]
    OrbitStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no invariant curve of 4-periodic orbits: relative variation of h(psi)^2 + h(psi+pi/2)^2 is {variation:e} (tolerance {tolerance:e})")]
    NoFourPeriodicCurve { variation: f64, tolerance: f64 },

    #[error("profile violates d(psi + pi/2) = pi/2 - d(psi) by {violation:e}")]
    ProfileSymmetryViolated { violation: f64 },

    #[error("profile does not belong to table: max |R sin d - h| = {mismatch:e}")]
    InconsistentInputs { mismatch: f64 },

    #[error("malformed file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::OrbitStep {
            step,
            source: Box::new(self),
        }
    }
}
