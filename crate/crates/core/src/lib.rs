//! Meshless RBF (Kansa) collocation for nonlinear elliptic boundary value
//! problems, solved as a square nonlinear system by a trust-region method
//! with analytic Jacobians and Hessians.
//!
//! The pipeline is: pick a [`kernels::KernelSpec`] and a
//! [`geometry::Pointset`], build a [`system::CollocationSystem`] for a
//! [`problems::Problem`], then hand it to [`trust_region::solve`] (or the
//! [`newton`] baseline). The [`bench`] module wires everything to
//! configuration files and the `solver` binary.

// `!(x < y)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod newton;
pub mod par;
pub mod problems;
pub mod system;
pub mod trust_region;

pub use error::{Error, Result};
