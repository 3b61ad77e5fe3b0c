//! Numerical building blocks shared by the model modules.

pub mod quad;
pub mod rng;
pub mod special;
pub mod spline;
pub mod stats;
pub mod tridiag;
