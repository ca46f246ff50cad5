//! Symptom-to-diagnosis classifiers: multiclass logistic regression, a ReLU
//! MLP, and an MLP over averaged present/absent symptom embeddings.
//!
//! All three share one parameter container, one analytic backward pass and
//! one minibatch SGD-with-momentum trainer.

mod artifact;
mod inspect;
mod net;
mod params;
mod spec;
mod train;

pub use inspect::{top_weights, TopWeights, WeightedFeature};
pub use net::{batch_loss, forward, gradients, loss, Dropout, Gradients, LOG_EPS};
pub use params::{ModelParams, Tensor};
pub use spec::{ModelKind, ModelSpec, TrainConfig};
pub use train::{train, EpochLog, TrainLog};
