//! Correlation-driven neuron merging, and the loop that interleaves it with
//! training.
//!
//! The flow per pruning attempt: sample hidden activations, find the pair of
//! neurons in one layer whose activation columns have the largest |Pearson r|,
//! fit the removed neuron's column as `alpha * kept + beta`, rewrite the
//! surrounding weights so the network barely notices, and keep the result only
//! if accuracy on the gate set stays at or above the configured threshold.

mod correlation;
mod merge;
mod train;

pub use correlation::{
    collect_activations, correlation_matrix, estimate_merge_params, find_most_correlated_pair,
};
pub use merge::{fold_constant_neuron, merge_neurons};
pub use train::{noiseout_train, prune_step, CheckRecord, IterationRecord, TrainHistory};

use crate::error::{Error, Result};

/// A merge candidate: remove neuron `a`, keep neuron `b`, both in hidden
/// layer `layer`. `abs_r` is the |Pearson r| of their activation columns.
/// By convention `a` is the higher index, so deleting it never shifts `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidatePair {
    pub layer: usize,
    pub a: usize,
    pub b: usize,
    pub abs_r: f64,
}

/// Least-squares fit of the removed neuron's activations:
/// `activation_a ≈ alpha * activation_b + beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeParams {
    pub alpha: f64,
    pub beta: f64,
}

/// Gate and scheduling knobs for pruning.
///
/// A tentative merge is kept only while accuracy on the gate set stays at or
/// above `accuracy_threshold`; a value above 1.0 therefore disables pruning
/// without changing anything else. `sample_size` rows are used for the
/// correlation estimates, `check_interval` is the number of gradient steps
/// between prune attempts, and no layer is ever pruned below `min_neurons`.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneConfig {
    pub accuracy_threshold: f64,
    pub sample_size: usize,
    pub check_interval: usize,
    pub min_neurons: usize,
    pub max_merges_per_check: usize,
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.accuracy_threshold.is_finite() || self.accuracy_threshold <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "accuracy_threshold {} must be finite and positive",
                self.accuracy_threshold
            )));
        }
        if self.sample_size < 2 {
            return Err(Error::InvalidParam(
                "sample_size must be at least 2 to estimate correlations".into(),
            ));
        }
        if self.check_interval == 0 {
            return Err(Error::InvalidParam(
                "check_interval must be at least 1".into(),
            ));
        }
        if self.min_neurons == 0 {
            return Err(Error::InvalidParam("min_neurons must be at least 1".into()));
        }
        Ok(())
    }
}

/// Audit record of one attempted removal. A pair merge has `b != a`; a
/// constant-neuron fold is encoded with `b == a`, `abs_r = 0`, `alpha = 0`
/// and `beta` holding the folded constant.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneEvent {
    pub step: usize,
    pub layer: usize,
    pub a: usize,
    pub b: usize,
    pub abs_r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub accuracy_after: f64,
    pub committed: bool,
}

impl PruneEvent {
    pub fn is_fold(&self) -> bool {
        self.a == self.b
    }
}
