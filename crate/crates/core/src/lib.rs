//! Coresets for regularized regression.
//!
//! A coreset is a small weighted subset of the rows of `[A b]` whose
//! objective approximates the full objective at every query `x`. This crate
//! builds coresets by sensitivity sampling, with ridge-leverage scores for
//! ridge and modified lasso, `ℓp` sensitivity bounds for `‖Ax − b‖_p^p +
//! λ‖x‖_p^p`, and an `ℓ1` well-conditioned basis for regularized least
//! absolute deviations. It also ships solvers for each objective, a check
//! that regularization cannot shrink a coreset when the loss and penalty
//! powers differ, and the experiment harness behind the guide.
//!
//! ```
//! use regcoreset::build_coreset;
//! use regcoreset::experiments::ng_instance;
//! use regcoreset::sensitivity::ridge_leverage_scores;
//!
//! let (inst, _) = ng_instance(400, 4, 0.05, 1e-5, 7).unwrap();
//! let scores = ridge_leverage_scores(&inst.augmented(), 1.0).unwrap();
//! let coreset = build_coreset(&inst, &scores, 120, 2.0, 3).unwrap();
//! assert_eq!(coreset.len(), 120);
//! ```

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conditioning;
pub mod coreset;
pub mod error;
pub mod experiments;
pub mod lowerbound;
pub mod matrix;
pub mod objective;
pub mod rng;
pub mod sensitivity;
pub mod solvers;

pub use coreset::{build_coreset, verify_coreset, Coreset};
pub use error::{CoresetError, Result};
pub use matrix::{DenseMatrix, RegressionInstance};
pub use objective::{Family, ObjectiveSpec};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/objectives.md")]
    mod objectives {}
    #[doc = include_str!("../../../book/src/sensitivity.md")]
    mod sensitivity {}
    #[doc = include_str!("../../../book/src/coresets.md")]
    mod coresets {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/lower-bound.md")]
    mod lower_bound {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
