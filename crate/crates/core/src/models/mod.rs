//! Probability models: categorical, context, discretized continuous and gated mixtures.

pub mod blob;
pub mod context;
pub mod density;
pub mod discretized;
pub mod fit;
pub mod gated;
pub mod info;

pub use blob::{Family, ModelBlob};
pub use context::{context_predict, context_update, ContextModel};
pub use density::{Density, Kernel};
pub use discretized::{discretize, DiscretizedDensity};
pub use fit::{
    dequantization_gap, fit_categorical, fit_discretized, fit_logistic_mixture, DequantizationGap, FitReport,
};
pub use gated::GatedMixturePredictor;
pub use info::{binary_entropy, cross_entropy, entropy, kl, Categorical};
