//! Dense feedforward classifiers with exact reverse-mode gradients.

mod finite_diff;
mod grad;
mod loss;
mod network;

pub use finite_diff::{finite_diff_gradient, relative_error};
pub use grad::{
    backprop_objective, backprop_weighted, backprop_weighted_corrected, GradientAccumulator, GradientSet,
    LayerGradient, Objective, WeightedSample,
};
pub use loss::{loss_vector, sample_loss, LossVector};
pub use network::{argmax, Activation, ForwardCache, Layer, Network, LEAKY_RELU_SLOPE};
