//! Space-time random current representation of the transverse-field Ising
//! model on a torus.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod labels;
pub mod lattice;
pub mod oracle;
pub mod percolation;
pub mod pointprocess;
pub mod stats;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
