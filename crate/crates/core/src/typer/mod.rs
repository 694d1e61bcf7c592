//! The type-projection head `t = σ(E·h)`, its binary cross-entropy loss and
//! end-to-end training of encoder and head.

mod metrics;
mod model;
mod optim;
mod predict;
mod train;

pub use metrics::macro_f1;
pub use model::{Representation, TypingModel};
pub use optim::Adam;
pub use predict::{bce_loss, predict_types, LabelVector, SparseTypeVector, TypeEmbeddingMatrix, PROB_EPS};
pub use train::{example_gradients, train, train_timed, EpochRecord, Reduction, TrainConfig, TrainingLog};
