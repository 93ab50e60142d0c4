//! Simulation and verification of limit laws for lifetime sums of Čech
//! persistence barcodes built over heavy-tailed extreme point clouds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod filtration;
pub mod geometry;
pub mod harness;
pub mod homology;
pub mod limits;
pub mod miniball;
pub mod oracles;
pub mod persistence;
pub mod quadrature;
pub mod sampler;
pub mod seed;
pub mod cli;
pub mod union_find;
pub mod verify;

pub use error::{Error, Result};
