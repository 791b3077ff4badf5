//! Numerical laboratory for Kuznecov-Weyl ladder sums of restricted
//! eigenfunctions on flat tori and round spheres.
//!
//! Modules follow the data flow: exact spectra, restriction weights, spectral
//! windows, ladder sums and traces, bi-angle geometry, asymptotic fits, and the
//! experiment runner that writes CSV/JSON outputs.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod asymptotics_lab;
pub mod biangle_geometry;
pub mod error;
pub mod experiment;
pub mod ladder_sums;
pub mod restriction_weights;
pub mod spectral_models;
pub mod window_functions;

pub use error::{LabError, Result};
