//! Shifted rank-1 lattice rules for integration over the unit cube.
//!
//! The crate evaluates worst-case errors in the weighted unanchored Sobolev
//! space, builds generating vectors component by component for randomly
//! shifted rules, and picks deterministic half-shifts component by component
//! for a fixed generating vector ([`cbc::cbc_shift`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32`, `f64`, [`Rational`]) or
//! [`Real`] (`f32`, `f64`); the aliases below fix `f64`, which is what the
//! constructions and the command-line tool use.

pub mod bounds;
pub mod cbc;
pub mod error;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod wce;
pub mod weights;

pub use error::{Error, Result};
pub use kernel::{frac, lattice_points, pair_kernel, bernoulli2, HalfShift, LatticeRule, RealShift};
pub use scalar::{Rational, Real, Scalar};
pub use weights::{ProductWeights, SubsetWeights, WeightFamily};

pub type Shift = kernel::RealShift<f64>;
pub type Weights = weights::ProductWeights<f64>;
pub type Subsets = weights::SubsetWeights<f64>;
pub type Report = wce::ErrorReport<f64>;
pub type PairCache = wce::PairKernelCache<f64>;
pub type ShiftResult = cbc::CbcShiftResult<f64>;
pub type VectorResult = cbc::CbcVectorResult<f64>;
pub type Estimate = quadrature::RandomShiftEstimate<f64>;
