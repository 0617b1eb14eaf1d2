#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod cut;
pub mod discretization;
pub mod dofs;
pub mod error;
pub mod fe;
pub mod freefall;
pub mod geometry;
pub mod harness;
pub mod manufactured;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod vtk;

pub use error::{Error, Result};
