//! Compression toolkit: entropy coders, probability models, latent-variable
//! (bits-back) coding, rate-distortion computation, quantizers, transform
//! codecs, reverse channel coding and image quality metrics.

pub mod bits;
pub mod channel;
pub mod codecs;
pub mod coding;
pub mod container;
pub mod error;
pub mod image;
pub mod metrics;
pub mod latent;
pub mod models;
pub mod optim;
pub mod quant;
pub mod rd;
pub mod stats;
pub mod transform;
pub mod wire;

pub use error::{Error, Result};
