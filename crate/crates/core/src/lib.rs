//! Extremal functions of the complex unit ball for convex-body notions of
//! polynomial degree (quadrants of lq balls), with the associated polynomial
//! approximation, Fekete-point and random-polynomial experiments.
//!
//! Shared types ([`ConvexBody`], [`MultiIndex`], [`ModuliPoint`], [`Direction`],
//! [`Error`]) are re-exported at the crate root.

// `!(x > a)` checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approximation;
pub mod body;
pub mod error;
pub mod extremal;
pub mod fekete;
pub mod functional;
pub mod monomial;
pub mod random_fields;

pub use approximation::{CoefficientSeries, RatePrediction};
pub use body::{ConvexBody, Exponent, IndexSet, MultiIndex};
pub use error::{Error, Result};
pub use extremal::{ExtremalResult, Method, SolverOptions, UnivariateExtremal};
pub use fekete::{FeketeConfig, FeketeResult};
pub use functional::{Direction, FunctionalEval, ModuliPoint};
pub use random_fields::{AnnulusGrid, RandomPolyPair};
