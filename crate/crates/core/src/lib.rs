//! Shock-model copulas built from asymmetric max/min linking.
//!
//! The crate evaluates maxmin (MM) and reflected maxmin (RMM) copulas with
//! dependent endogenous shocks, their n-step iterates and closed-form limits,
//! the multivariate RMM family, rank-based dependence measures, and seeded
//! conditional-inversion samplers.
//!
//! Everything here is pure computation on `core` + `alloc`; file formats,
//! the command line and thread-parallel table runs live in `rmm-cli`.
//!
//! Copulas are immutable evaluator trees. A transform holds its base copula
//! and generators and evaluates lazily at any point, so iterates and limits
//! stay exact pointwise instead of being tabulated.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod copula;
pub mod error;
pub mod generator;
pub mod measures;
pub mod multivariate;
pub mod numerics;
pub mod sampling;
pub mod transform;

pub use copula::{BivariateCopula, Copula2, Rectangle};
pub use error::{Error, Result};
pub use generator::{GenRule, Generator, MMGenerator, MmKind, MmRule};
pub use multivariate::{CopulaN, MMNSpec, NCopula};
pub use sampling::SampleBatch;
