use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which end of a projective phase fell outside the covering of the projection state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Initial,
    Final,
    /// The auxiliary state `P` of a transition function.
    Probe,
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Initial => f.write_str("initial"),
            Endpoint::Final => f.write_str("final"),
            Endpoint::Probe => f.write_str("probe"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("state dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("cannot normalize a vector with zero or non-finite norm")]
    ZeroNorm,

    #[error("states are orthogonal (|overlap| = {overlap:e}): {context}")]
    Orthogonal { context: &'static str, overlap: f64 },

    #[error("{endpoint} state is outside the covering of the projection state (|overlap| = {overlap:e})")]
    CoveringViolation { endpoint: Endpoint, overlap: f64 },

    #[error(
        "sample {index} is outside the covering of the projection state (|overlap| = {overlap:e})"
    )]
    SampleOutsideCovering { index: usize, overlap: f64 },

    #[error("adjacent states {index} and {next} are orthogonal (|overlap| = {overlap:e}); invariant undefined")]
    UndefinedInvariant {
        index: usize,
        next: usize,
        overlap: f64,
    },

    #[error("segment {index} has phase increment {increment:.4} rad (limit {limit:.4}); refine the discretization")]
    RefinementNeeded {
        index: usize,
        increment: f64,
        limit: f64,
    },

    #[error("successive samples are nearly orthogonal (|overlap| = {overlap:e}); refine the discretization")]
    StepTooCoarse { overlap: f64 },

    #[error("spin must be a positive half-integer, got {0}")]
    InvalidSpin(f64),

    #[error("operator is not Hermitian (max |M - M^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (max |U^dagger U - 1| = {0:e})")]
    NotUnitary(f64),

    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),

    #[error(
        "norm drift {drift:e} at step {step} exceeds the step-size guard; use a finer time grid"
    )]
    StepSize { step: usize, drift: f64 },

    #[error("path carries no Hamiltonian expectation trace")]
    MissingTrace,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("path does not close in ray space (fidelity between endpoints {fidelity})")]
    NotClosed { fidelity: f64 },

    #[error("z = <i|U|j> vanishes at sample {index} (|z| = {abs_z:e}); winding class undefined")]
    ZeroCrossing { index: usize, abs_z: f64 },

    #[error("accumulated phase {total} is not within {tolerance} of a multiple of 2pi")]
    NotQuantized { total: f64, tolerance: f64 },

    #[error("no orthogonal crossing found (min |<i|psi>| = {min_overlap:e})")]
    NoCrossing { min_overlap: f64 },

    #[error("{count} orthogonal crossings in the window; split the window")]
    MultipleCrossings { count: usize },

    #[error("point {index} is within the singular-pole margin of the covering (theta = {theta})")]
    PoleContact { index: usize, theta: f64 },

    #[error("edge from vertex {index} joins antipodal points; geodesic not unique")]
    AntipodalEdge { index: usize },

    #[error("need at least 3 distinct phase settings spanning pi, got {0}")]
    TooFewSettings(usize),

    #[error("fringe visibility {visibility:e} too small; phase unidentifiable")]
    PhaseUnidentifiable { visibility: f64 },

    #[error(
        "no suitable reference state after {trials} trials (best worst-case overlap {min_overlap})"
    )]
    ReferenceNotFound { trials: usize, min_overlap: f64 },
}
