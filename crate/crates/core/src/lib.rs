//! Multilinear determinant functionals and ellipsoid curvature conditions on
//! discrete weighted measures.
//!
//! The crate is split along the objects it computes with:
//!
//! - [`geometry`]: simplex determinants from Gram matrices, ellipsoids and
//!   their k-contents, projections and affine distances.
//! - [`measure`]: weighted point clouds and the transformations applied to
//!   them (restriction, dilation, push-forward, radial split, mixtures),
//!   seeded generators and CSV/JSON ingestion.
//! - [`curvature`]: curvature-constant search over ellipsoid families,
//!   minimal content at a prescribed mass, Gaussian tests, slab constants and
//!   the family-restricted maximal function.
//! - [`functionals`]: exact and sampled evaluation of the determinant
//!   functionals, sublevel measures and their dyadic layer profiles.
//! - [`lab`]: scenario configuration, the theorem-level verification drivers
//!   and report emission.

// Guards written as `!(x > 0.0)` reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod lab;
pub mod measure;
mod par;
pub mod sum;

pub use error::{Error, Result};
pub use geometry::{AffineSubspace, Ellipsoid, Vector};
pub use measure::WeightedPointMeasure;
