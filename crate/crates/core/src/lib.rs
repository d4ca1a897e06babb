//! Bayes factor functions (BFFs).
//!
//! A BFF is the Bayes factor `BF01(y; theta0)` of the point null
//! `H0: theta = theta0` against a fixed alternative, viewed as a function of
//! the tested value `theta0`. This crate evaluates BFFs for a handful of model
//! families and summarizes them by the maximum evidence estimate (MEE), its
//! evidence level `k_ME` and `k` support sets `{theta0 : BF01 >= k}`.
//!
//! Everything is carried on the natural-log scale. The crate is `no_std` and
//! only needs `alloc`; file formats, the CLI and parallel evaluation live in
//! the `bff-cli` companion crate.

#![no_std]
#![deny(unsafe_code)]
// when std is in the build graph (dev-dependencies), inherent float methods
// shadow `num_traits::Float` and its imports look unused
#![allow(unused_imports)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod binomial;
pub mod engine;
mod error;
pub mod glm;
pub mod linalg;
pub mod meta;
pub mod normal;
pub mod optim;
pub mod prior;
pub mod quad;
pub mod specfun;

pub use engine::{
    combine_sequential, evaluate_curve, find_mee, relative_belief_ratio, savage_dickey_bff,
    support_set, universal_bound_pvalue, BffCurve, BffModel, Bounds, DensityFn, FnModel,
    GridSpec, Locality, MeeResult, SupportInterval, SupportSet, Warning,
};
pub use error::{Error, Result};
pub use prior::PriorSpec;
