#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod boundary;
pub mod experiments;
pub mod functionals;
pub mod kernel;
pub mod numerics;
pub mod pde;
