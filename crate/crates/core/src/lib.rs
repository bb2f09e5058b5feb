//! Needlet estimation of random-coefficient densities in binary choice models.
//!
//! Observations are pairs (x, y) with x on the upper hemisphere of S^{d-1}
//! and y = sign<x, beta> for an unobserved random beta. The choice
//! probability is the hemispherical transform of the density of beta; the
//! crate inverts it with a thresholded needlet estimator.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod design_est;
pub mod error;
pub mod estimator;
pub mod hemispherical;
pub mod io;
pub mod model;
pub mod needlet;
pub mod par;
pub mod quadrature;
pub mod sphere;

pub use error::{Error, Result};
pub use needlet::{make_window, CoefficientPyramid, NeedletFrame, Window};
pub use quadrature::{build_rule, QuadratureRule};
pub use sphere::SpherePoint;
