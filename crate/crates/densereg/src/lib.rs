//! Dense template-to-image correspondence toolkit.
//!
//! The crate builds deformation-free UV atlases on 3D template surfaces,
//! synthesizes per-pixel correspondence supervision by z-buffered
//! rasterization, encodes coordinates with a quantized-regression codec
//! (bin classification plus per-bin residual experts), trains a small
//! fully-convolutional regressor on synthetic data, and evaluates with
//! landmark and correspondence metrics.

pub mod atlas;
pub mod codec;
pub mod error;
pub mod field;
pub mod geometry;
pub mod tensor;

pub use error::{Error, Result};
