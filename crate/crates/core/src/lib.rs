//! Polynomial approximation on the unit sphere from scattered samples.
//!
//! The crate provides real orthonormal spherical harmonics and their
//! reproducing kernels, positive quadrature rules, discrete least squares and
//! its de la Vallée Poussin means, hyperinterpolation with and without
//! filtering, and the Lebesgue-constant and error measurements used to
//! compare them. It needs only `alloc`; disable the default `std` feature for
//! `no_std` targets.
//!
//! ```
//! use sphapprox_core::{approximation, functions, geometry};
//!
//! let nodes = geometry::generate_spiral(441).unwrap();
//! let basis = approximation::build_orthonormal_basis(&nodes, 10).unwrap();
//! let samples: Vec<f64> = nodes.iter().map(functions::f1).collect();
//! let fit = approximation::ls_fit(&basis, &samples).unwrap();
//! let x = geometry::SpherePoint::new(0.0, 0.6, 0.8).unwrap();
//! assert!((fit.eval(&x) - functions::f1(&x)).abs() < 0.1);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style tests are used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod approximation;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod harmonics;
pub mod linalg;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::{PointSet, SpherePoint};
