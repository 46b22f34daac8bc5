//! Two-sided networks for multi-task and multi-domain learning.
//!
//! A prediction is the inner product of a feature representation `x P` and a
//! model vector `act(z Q)` built from a semantic descriptor `z` of the
//! instance's domain or task. Classic multi-task methods fall out as fixed
//! structural choices of `Z`, `P` and `Q`, and the same machinery synthesises
//! models for unseen domains or classes from their descriptors alone.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below are the double-precision types used by the loaders, the
//! protocols and the CLI.

pub mod baselines;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod descriptor;
pub mod error;
pub mod linalg;
pub mod loaders;
pub mod loss;
pub mod model;
pub mod optim;
pub mod protocols;
pub mod report;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type Model64 = model::TwoSidedModel<f64>;
pub type Model32 = model::TwoSidedModel<f32>;
pub type Dataset64 = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type Descriptor64 = descriptor::Descriptor<f64>;
pub type Structure64 = model::Structure<f64>;
