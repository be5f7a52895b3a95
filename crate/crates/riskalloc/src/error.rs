//! Structured error type shared by every module in the crate.
//!
//! Core capabilities:
//! - Dimension and validation failures carry the offending indices and values
//!   so callers can report exactly what was violated and where.
//! - CSV loading failures carry the 1-based file line and column of the first
//!   violation.
//! - Mathematical preconditions (admissibility, distinct outcome values,
//!   nonzero normalizers) fail with dedicated variants instead of panics.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    /// A portfolio or outcome did not match the scenario set's dimensions.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A scenario set was constructed with no positions or no scenarios.
    #[error("scenario set must have at least one position and one scenario (n={n}, m={m})")]
    EmptyScenarioSet { n: usize, m: usize },

    /// A scenario probability was zero or negative.
    #[error("probability of scenario {scenario} must be > 0, got {value}")]
    NonPositiveProbability { scenario: usize, value: f64 },

    /// Scenario probabilities did not sum to one within tolerance.
    #[error("scenario probabilities must sum to 1 within 1e-12, got {sum}")]
    ProbabilitySum { sum: f64 },

    /// A position outcome, weight, or other numeric input was NaN or infinite.
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: String, value: f64 },

    /// Two positions share the same label.
    #[error("duplicate position label: {label:?}")]
    DuplicateLabel { label: String },

    /// A scenario CSV file violated the format or the scenario invariants.
    #[error("scenario CSV: line {line}, column {column}: {message}")]
    CsvFormat {
        line: u64,
        column: usize,
        message: String,
    },

    /// A scenario CSV file failed a whole-file invariant.
    #[error("scenario CSV: {message}")]
    CsvInvariant { message: String },

    /// Reading a scenario CSV file failed at the I/O level.
    #[error("scenario CSV: {0}")]
    CsvIo(#[from] std::io::Error),

    /// A quantile level was outside (0, 1].
    #[error("quantile level must be in (0, 1], got {p}")]
    QuantileLevel { p: f64 },

    /// A numeric parameter violated its domain.
    #[error("{name} must satisfy {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    /// A distortion function failed validation.
    #[error("distortion {name:?}: {reason}")]
    InvalidDistortion { name: String, reason: String },

    /// A distortion name was not found in the registry.
    #[error("unknown distortion: {name:?}")]
    UnknownDistortion { name: String },

    /// A robust reward was given no densities to minimize over.
    #[error("\u{1d4ab} must be non-empty")]
    EmptyDensitySet,

    /// A robust-reward density had a negative entry.
    #[error("density {density}, scenario {scenario}: entries must be >= 0, got {value}")]
    NegativeDensity {
        density: usize,
        scenario: usize,
        value: f64,
    },

    /// A robust-reward density did not have expectation one.
    #[error("density {density}: expectation must be 1 within 1e-10, got {mean}")]
    DensityMean { density: usize, mean: f64 },

    /// An operation requiring a signed risk value received one too close to zero.
    #[error("sign of \u{3c1}(X) indeterminate: |{value}| < 1e-12")]
    IndeterminateRiskSign { value: f64 },

    /// Exponentiation in an entropic-family measure left the finite range.
    #[error(
        "exp(-a*x) leaves the finite range (extreme exponent {exponent} at a = {a}); rescale a"
    )]
    ExpOverflow { a: f64, exponent: f64 },

    /// A measure does not support the requested derivative construction.
    #[error("{operation} is not defined for risk measure kind {kind:?}")]
    UnsupportedMeasure {
        operation: &'static str,
        kind: String,
    },

    /// Outcome values were tied where strict monotonicity of the distribution
    /// function is required.
    #[error("F_X not strictly increasing; subgradient not unique at ties (value {value} repeats)")]
    TiedValues { value: f64 },

    /// Normalizing with-without contributions when their sum vanishes.
    #[error("normalization is only possible if the sum of with-without contributions is nonzero (sum = {sum})")]
    ZeroNormalizer { sum: f64 },

    /// A coalition referenced a position outside the scenario set.
    #[error("coalition member {member} out of range: scenario set has {n} positions")]
    CoalitionMember { member: usize, n: usize },

    /// Too many positions for exhaustive coalition enumeration.
    #[error("coalition enumeration capped at {cap} positions, got {n}")]
    CoalitionCap { n: usize, cap: usize },

    /// A ratio was requested for a coalition outside the admissible set.
    #[error("coalition {coalition} not admissible: {reason}")]
    InadmissibleCoalition { coalition: String, reason: String },

    /// A marginal contribution was requested for a member already present.
    #[error("position {member} is already a member of the coalition")]
    MemberAlreadyPresent { member: usize },

    /// A counterexample was requested for an allocation that already is the
    /// gradient.
    #[error("k already matches the gradient; no counterexample exists (component {component}, deviation {deviation})")]
    AllocationIsGradient { component: usize, deviation: f64 },

    /// A seeded resampling loop exhausted its retry budget.
    #[error("no sample satisfied the predicate within {tries} tries")]
    SamplingExhausted { tries: usize },
}
