//! Prune feed-forward networks while they train.
//!
//! The idea: make hidden neurons redundant on purpose, then remove the
//! redundancy. An auxiliary "noise" output head chases random targets that are
//! redrawn every iteration; the only way the network can lower that part of
//! the loss is to push hidden activations toward each other, which raises
//! pairwise correlation. The pruning loop watches those correlations and
//! whenever two neurons move together, it merges them: the removed neuron's
//! activation is modeled as `alpha * kept + beta`, `alpha` folds into the
//! outgoing weights of the kept neuron and `beta` into the downstream biases,
//! so the network's outputs barely move. A merge only sticks if accuracy on a
//! gate set stays above a threshold.
//!
//! The crate is organized bottom-up:
//!
//! * [`matrix`]: dense row-major matrices and the handful of ops everything
//!   else uses.
//! * [`net`]: feed-forward networks with a task head and an optional noise
//!   head, training primitives, and a small binary model format.
//! * [`pruner`]: correlation tracking, neuron merging, and the train-and-prune
//!   loop.
//! * [`data`]: MNIST loading, a synthetic XOR dataset, splits and batches.
//!
//! ```
//! use noiseout::matrix::Matrix;
//!
//! let w = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
//! let x = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
//! let y = w.matmul(&x).unwrap();
//! assert_eq!(y.data(), &[3.0, 7.0]);
//! ```

pub mod data;
pub mod error;
pub mod matrix;
pub mod net;
pub mod pruner;

pub use data::Dataset;
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use net::{ActivationKind, Network, NoiseConfig, NoiseKind, TrainConfig};
pub use pruner::{
    noiseout_train, prune_step, CandidatePair, MergeParams, PruneConfig, PruneEvent, TrainHistory,
};
