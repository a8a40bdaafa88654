//! Branching random walks on the integer lattice: Monte Carlo simulation,
//! exact oracles and quantile concentration bounds.
//!
//! A BRW is given generation by generation as a pair of laws: how many
//! children a particle at position `u` has, and how far each child lands
//! from `u`. The crate offers
//!
//! * [`model`]: the spec, its validation and derived quantities,
//! * [`simulator`]: reproducible forests of independent trees,
//! * [`empirics`]: per-tree ECDF, quantiles, exceedance fractions and
//!   forest-level deviation rates,
//! * [`oracle`]: exact random-walk laws, spine laws, small-forest
//!   enumeration and extinction probabilities,
//! * [`bounds`]: Hoeffding constants, random-walk and quantile bounds,
//! * [`experiment`]: the drivers behind the `brw-bench` binary.
//!
//! ```
//! use brw_core::model::{BrwSpec, DisplacementLaw, OffspringLaw};
//! use brw_core::oracle::exact_rw_distribution;
//! use num::rational::BigRational;
//!
//! let spec = BrwSpec::homogeneous(2, OffspringLaw::deterministic(2), DisplacementLaw::fair_step())
//!     .validate()
//!     .unwrap();
//! let walk = exact_rw_distribution::<BigRational>(&spec).unwrap();
//! assert_eq!(walk.get(0), BigRational::new(1.into(), 2.into()));
//! ```
//!
//! A longer guide lives in the `book/` directory of the repository; its code
//! samples are compiled and run as doctests of this crate.

pub mod bounds;
pub mod config;
pub mod empirics;
pub mod experiment;
pub mod model;
pub mod oracle;
pub mod prob;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use model::{validate_spec, BrwSpec, ValidatedSpec};
pub use prob::{Prob, Weight};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/empirics.md")]
    mod empirics {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
