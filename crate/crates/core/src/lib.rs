//! Differentiable evaluation of weighted logic programs.
//!
//! Programs of weighted facts and Horn rules are parsed, their facts stored
//! as sparse tensors, and every rule compiled into a DAG of tensor
//! operations. Queries run as vector-matrix products; learnable fact weights
//! are trained by gradient descent on labelled examples.

pub mod autodiff;
pub mod compiler;
pub mod examples;
pub mod frontend;
pub mod metrics;
pub mod model;
pub mod network;
pub mod sparse;
pub mod store;
pub mod train;

pub use model::{Model, ModelError, ModelOptions, Query};
