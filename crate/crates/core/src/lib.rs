#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Levi-form geometry of pseudoconvex domains: jets, defining functions,
//! boundary geometry, the normal-derivative criterion, Diederich–Fornæss
//! and Steinness exponent estimates, worm-domain analysis and
//! convexification of bounded convex bodies.

mod error;

pub mod convexify;
pub mod criteria;
pub mod domains;
pub mod estimators;
pub mod geometry;
pub mod jets;
pub mod linalg;
pub mod sampling;
pub mod special;
pub mod worm;

pub use error::{Error, Result};
