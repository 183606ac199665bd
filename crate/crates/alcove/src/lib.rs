//! Adaptive lasso with componentwise tuning, its distributional limits, and
//! the confidence-set geometry the limits induce.
//!
//! The crate has four layers:
//!
//! * [`linmodel`]: the estimator itself. A coordinate-descent solver for the
//!   penalized least-squares objective with one penalty level per
//!   coordinate, exact zeros included.
//! * [`asymptotics`]: tuning regimes extracted from penalty schedules, the
//!   limiting objective of the centered and scaled estimator, and its
//!   minimization with optimality diagnostics.
//! * [`mset`]: the compact set of all attainable limit minimizers, with
//!   membership tests, boundary sampling, scaling, and the localization
//!   that realizes a given boundary point.
//! * [`simlab`]: seeded Monte Carlo experiments that check coverage,
//!   model selection, convergence rates and distributional convergence
//!   against the limit predictions.

pub mod asymptotics;
mod error;
pub mod linmodel;
pub mod mset;
pub mod rng;
pub mod simlab;

pub use error::{Error, Result};

/// Crate version, for run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// The guide's code samples run as doctests so the prose can never drift
// from the library: mdbook cannot execute snippets against the crate, but
// including each chapter as a doc comment lets `cargo test --doc` do it.
// One module per chapter so a failure names its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
