//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by construction and by the operations.
///
/// Mathematically meaningful negatives (a map that is *not* measurable, a
/// diverging risk curve) are verdicts carried in ordinary return values, not
/// errors; this enum covers contract violations and genuine failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid map '{name}': {reason}")]
    InvalidMap { name: String, reason: String },

    #[error("maps live on different spaces: '{0}' vs '{1}'")]
    DomainMismatch(String, String),

    #[error("partitions cover different atom sets")]
    AtomSetMismatch,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("'{x}' is not measurable with respect to sigma('{y}'): atoms '{omega_a}' and '{omega_b}' share a {y}-value but carry different {x}-values")]
    NotMeasurable {
        x: String,
        y: String,
        omega_a: String,
        omega_b: String,
    },

    #[error("default value '{0}' lies outside the factor map's codomain")]
    DefaultOutsideCodomain(String),

    #[error("map '{name}' must be real-valued: atom '{atom}' carries '{value}'")]
    NonRealValue {
        name: String,
        atom: String,
        value: String,
    },

    #[error("map '{name}' has a negative value '{value}' at atom '{atom}'")]
    NegativeValue {
        name: String,
        atom: String,
        value: String,
    },

    #[error("levels must be at least 1")]
    InvalidLevels,

    #[error("pushforward of '{y}' is not sigma-finite: fiber '{fiber}' has infinite mass")]
    NonSigmaFinite { y: String, fiber: String },

    #[error("degenerate feature basis: normal equations singular (condition {condition:.3e})")]
    DegenerateBasis { condition: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("feature '{feature}' evaluates to a non-finite value on sample {index}")]
    NonFiniteFeature { feature: String, index: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("fiber at y = '{0}' has zero mass; posterior undefined there")]
    UndefinedFiber(String),

    #[error("action table is undefined at y = '{0}' which carries positive mass")]
    MissingAction(String),

    #[error("prior has infinite total mass; request a truncation sequence instead of the exact path")]
    ImproperPriorNeedsTruncation,

    #[error("parameter '{0}' lies outside the prior support")]
    OutsideSupport(String),

    #[error("Riccati step at t = {t} fell below -{tol} even after {halvings} halvings; reduce dt")]
    StepTooLarge { t: f64, tol: f64, halvings: u32 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid input '{field}': {reason}")]
    InvalidField { field: String, reason: String },
}
