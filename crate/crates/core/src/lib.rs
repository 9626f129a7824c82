//! Optimal experimental design: design measures, information matrices and
//! optimality criteria, design algorithms with equivalence certificates,
//! frequency-domain input design, Kriging with expected improvement, and
//! seeded simulations of adaptive estimation and control loops.

// Negated orderings reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod info;
pub mod input_design;
pub mod kriging;
pub mod models;
pub mod par;
pub mod sim;
pub mod solvers;

pub use design::{DesignMeasure, DesignSpace, ExactDesign, Point};
pub use error::{Error, Result};
pub use info::{Certificate, Criterion, InfoMatrix, InfoSource, LocalModel};
pub use models::RegressionModel;
