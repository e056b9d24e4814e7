//! Error-corrected GHZ-probe magnetometry of two- and three-dimensional fields.
//!
//! A GHZ probe is exposed to a field `(bx, bz)` (or `(bx, by, bz)`), the
//! repetition-code stabilizers are measured, the detected error is corrected,
//! and a string operator is read out. The crate provides:
//!
//! - [`field`]: the single-qubit rotation, its parameter gradients and the
//!   effective field angles;
//! - [`protocol`]: syndrome-class probabilities, post-correction phases and
//!   string-measurement probabilities;
//! - [`fisher`]: classical and quantum Fisher information, closed-form
//!   precision bounds and scaling fits;
//! - [`oracle`]: an exact statevector simulation of the whole protocol;
//! - [`sampler`]: seeded finite-shot measurement records;
//! - [`bayes`]: grid-based Bayesian estimation from those records.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod bayes;
pub mod error;
pub mod field;
pub mod fisher;
pub mod oracle;
pub mod protocol;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use field::{EvolutionTime, MagneticField, UnitaryElements};
pub use fisher::{ClosedFormVariant, FisherMatrix, PrecisionPoint, QfimLayout, ScalingFit};
pub use protocol::{Dimensionality, OutcomeModel, ProbeBasis, ProbeSpec, Protocol};
pub use sampler::ExperimentData;
pub use scalar::Real;

pub type MagneticField64 = MagneticField<f64>;
pub type MagneticField32 = MagneticField<f32>;
pub type EvolutionTime64 = EvolutionTime<f64>;
pub type EvolutionTime32 = EvolutionTime<f32>;
pub type OutcomeModel64 = OutcomeModel<f64>;
pub type OutcomeModel32 = OutcomeModel<f32>;
pub type FisherMatrix64 = FisherMatrix<f64>;
pub type FisherMatrix32 = FisherMatrix<f32>;
pub type PosteriorGrid64 = bayes::PosteriorGrid<f64>;
pub type EstimationResult64 = bayes::EstimationResult<f64>;
