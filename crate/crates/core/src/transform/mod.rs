//! Transform codecs: a fixed-transform image codec, a trainable linear
//! codec and a progressive residual coder.

mod band;
pub mod dct;
pub mod jpegish;
pub mod linear;
pub mod progressive;

pub use dct::{dct8_forward, dct8_inverse, dct_matrix, Block};
pub use jpegish::{bits_per_pixel, jpegish_decode, jpegish_encode, ColorTransform, JpegishParams};
pub use linear::{
    correlated_gaussian, eval_codec_true, initial_params, latent_covariance, train_linear_codec, Init, LinearCodec, Surrogate,
    SurrogateObjective, TrainOptions, TrainReport, TrueEval,
};
pub use progressive::{ProgressiveCoder, Reconstruction};
