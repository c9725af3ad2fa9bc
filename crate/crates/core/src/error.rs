use thiserror::Error;

/// Failures surfaced by the analytic, arithmetic and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precision loss: results at {low} and {high} bits disagree by 2^{log2_gap:.1}")]
    PrecisionLoss { low: usize, high: usize, log2_gap: f64 },
    #[error("overflow: |Re z| = {0:e} exceeds 2^40")]
    Overflow(f64),
    #[error("AGM did not converge after {0} iterations")]
    AgmNonConvergence(usize),
    #[error("class group of discriminant -{0} is not cyclic")]
    NonCyclicClassGroup(u64),
    #[error("field Q(sqrt(-{0})) not supported: {1}")]
    UnsupportedField(u64, String),
    #[error("ideal is not principal")]
    NotPrincipal,
    #[error("ideal is not coprime to the conductor")]
    RamifiedAtConductor,
    #[error("arguments not coprime: {0}")]
    NotCoprime(String),
    #[error("evaluation point is a lattice point")]
    PoleAtLatticePoint,
    #[error("degenerate lattice: quasi-period system is singular")]
    SingularSolve,
    #[error("functional equation inconsistent: validation residual 2^{0:.1}")]
    InconsistentFunctionalEquation(f64),
    #[error("rounding margin exceeded: {0}")]
    RoundingMarginExceeded(String),
    #[error("no builtin model for q = {0}")]
    UnsupportedQ(u64),
    #[error("period lattice is not homothetic to O_K (residual 2^{0:.1})")]
    NotHomotheticToOK(f64),
    #[error("{0} is not a 2-adic square")]
    NotASquare(String),
    #[error("2-adic precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("recognition failed: {0}")]
    RecognitionFailed(String),
    #[error("no integer relation found: {0}")]
    NoRelationFound(String),
    #[error("R = {r} is not in the twist family: {reason}")]
    NotInFamily { r: u64, reason: String },
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
