//! Worst-case and stochastic condition numbers, losses of precision, and
//! executable checks of the bounds relating them.
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`). The `*64` aliases below pin the common
//! double-precision instantiations used by the command-line front end.
//!
//! Module map:
//!
//! * [`rand_geom`] deterministic, splittable sampling of balls and boxes.
//! * [`closed_forms`] Wallis-type integrals, ball and cosine moments, exact
//!   stochastic/worst-case ratios and the uniform-sum oracles.
//! * [`problems`] the corpus of differentiable maps with Jacobians.
//! * [`condition`] the six condition quantities at a point.
//! * [`verify`] bound checks with measured slack.

pub mod closed_forms;
pub mod condition;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod quadrature;
pub mod rand_geom;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type MomentTable64 = closed_forms::MomentTable<f64>;
pub type NormwiseBounds64 = closed_forms::NormwiseBounds<f64>;
pub type ComponentwiseBounds64 = closed_forms::ComponentwiseBounds<f64>;
pub type TheoremBounds64 = closed_forms::TheoremBounds<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type Jacobian64 = problems::Jacobian<f64>;
pub type ConditionReport64 = condition::ConditionReport<f64>;
pub type EstimatorConfig64 = condition::EstimatorConfig<f64>;

pub type BallRegion64 = rand_geom::BallRegion<f64>;
pub type CubeRegion64 = rand_geom::CubeRegion<f64>;
