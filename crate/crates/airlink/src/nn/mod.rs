//! Feed-forward network core: forward pass, exact gradients, SGD with
//! momentum, structured pruning, and classification datasets.

mod dataset;
mod loss;
mod network;
mod optim;
mod prune;

pub use dataset::Dataset;
pub use loss::{
    finite_difference_gradients, gradients_agree, loss_and_grads, loss_only, per_sample_losses,
    softmax, LossSpec,
};
pub use network::{accuracy, Activation, Gradients, Layer, LayerGrad, Matrix, Network, Trace};
pub use optim::{sgd_step, OptState};
pub use prune::{neuron_l1_scores, prune_structured, prune_trajectory};
