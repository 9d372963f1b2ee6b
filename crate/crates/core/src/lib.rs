//! Finite-space measure theory made executable: σ-finite measures, random
//! maps, measurable factorization (X = φ∘Y), conditional expectation by the
//! discrete Radon–Nikodym formula and by Monte-Carlo L² projection, Bayes /
//! posterior / frequentist risk decompositions (including truncated improper
//! priors), the fiducial location model, and a 1-D Kalman–Bucy filter.
//!
//! Everything on a finite carrier runs in exact rational arithmetic, so the
//! decomposition identities (total expectation, tower property, Fubini) hold
//! with zero discrepancy rather than within a tolerance. Continuous models
//! (location families, linear filtering) run in `f64` with counter-based
//! splittable RNG streams, so parallel runs are bit-reproducible for a fixed
//! seed.

pub mod condexp;
pub mod error;
pub mod factor;
pub mod fiducial;
pub mod kalman;
pub mod linalg;
pub mod measure;
pub mod model_io;
pub mod numeric;
pub mod risk;
pub mod rng;
pub mod synth;

pub use error::Error;
pub use numeric::{ExtReal, Rat};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
