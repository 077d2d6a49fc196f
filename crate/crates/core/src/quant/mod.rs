//! Quantizers and their differentiable surrogates.

pub mod relax;
pub mod scalar;
pub mod vector;

pub use relax::{noisy_relax, ste_derivative, stochastic_binarize, NoisyDensity};
pub use scalar::{
    conditional_entropy_binned, dither_mutual_information_gaussian, dithered_quantize, dithered_reconstruct,
    lloyd_max, uniform_quantize, DitherStream, LloydMax, ScalarQuantizer,
};
pub use vector::{
    ecvq_assign, ecvq_fit, ecvq_from, kmeans_pp, random_init, soft_assignment, soft_quantize, Annealing, Codebook,
    Ecvq, EcvqOptions,
};
