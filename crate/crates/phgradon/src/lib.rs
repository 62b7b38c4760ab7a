//! Index sets and asymptotic expansions for the Radon transform and its
//! backprojection acting on functions with polyhomogeneous boundary behaviour.

pub mod index_calculus;
pub(crate) mod quad;
pub use quad::QuadResult;
pub mod special_fn;
pub mod coefficients;
pub mod transforms;
pub mod asymptotics;
pub mod cli;
