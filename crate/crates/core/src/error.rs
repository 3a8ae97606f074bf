use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },
    #[error("invalid Pauli character '{0}'")]
    InvalidPauliChar(char),
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },
    #[error("gate targets must be distinct (qubit {0} repeated)")]
    RepeatedTarget(usize),
    #[error("{n} qubits exceeds the cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },
    #[error("state dimension {got} does not match 2^{n}")]
    DimensionMismatch { got: usize, n: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("fermion mode {mode} out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },
    #[error("operator is not Hermitian: residual imaginary coefficient {0:e}")]
    NotHermitian(f64),
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("gate has no registered parameter-shift rule: {0}")]
    NoShiftRule(String),
    #[error("non-finite cost encountered at iteration {iteration}")]
    NonFiniteCost { iteration: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("states are not orthogonal: |<psi1|psi2>|^2 = {overlap:e} exceeds {tol:e}")]
    NotOrthogonal { overlap: f64, tol: f64 },
    #[error(
        "state has complex amplitudes (max |Im| = {0:e}); use the overlap or ancilla estimator"
    )]
    ComplexAmplitudes(f64),
    #[error("subspace matrix is not symmetric (max asymmetry {0:e})")]
    AsymmetricSubspace(f64),
    #[error("matrix is singular or ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("confusion matrix column {column} sums to {sum}")]
    NotStochastic { column: usize, sum: f64 },
    #[error("at least {needed} values required, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("eigensolver failed to converge")]
    NoConvergence,
}
