//! Robust distributed estimation of leading eigenspaces.
//!
//! Each node reports an orthonormal basis of its local top-`r` eigenspace;
//! some nodes may be adversarial. The estimator picks a robust reference,
//! rotates every response onto it, and runs a filtered mean over the aligned
//! bases before re-orthonormalizing.

pub mod error;
pub mod experiment;
pub mod linalg;
pub mod pipeline;
pub mod procrustes;
pub mod reference;
pub mod robust_mean;
pub mod seeding;
pub mod selftest;
pub mod synthetic;

pub use error::{Error, Result};
