//! The gated pruning step and the full train-and-prune loop.

use super::correlation::{
    correlation_matrix, estimate_merge_params, find_most_correlated_pair, sample_rows,
};
use super::merge::{fold_constant_neuron, merge_neurons};
use super::{CandidatePair, PruneConfig, PruneEvent};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::net::accuracy_of;
use crate::net::{backward, generate_noise_targets, loss_parts, sgd_step};
use crate::net::{Network, NoiseConfig, NoiseKind, TrainConfig};
use rand::Rng;

/// One pruning attempt: greedily remove neurons while the gate allows it.
///
/// Constant-activation neurons are folded away first; then, repeatedly, the
/// globally most correlated pair across all prunable layers is merged
/// tentatively and kept only if accuracy on `(x_val, y_val)` stays at or
/// above the threshold. The first rejected removal stops the loop, so the
/// returned network always satisfies the gate. Correlations are re-estimated
/// from fresh activations after every committed removal.
///
/// `step` is the training-iteration stamp written into the events. At most
/// `cfg.sample_size` rows of `x_val` (drawn once per call) feed the
/// correlation estimates; the gate always evaluates the full `(x_val, y_val)`.
pub fn prune_step<R: Rng>(
    net: &Network,
    x_val: &Matrix,
    y_val: &Matrix,
    cfg: &PruneConfig,
    step: usize,
    rng: &mut R,
) -> Result<(Network, Vec<PruneEvent>)> {
    cfg.validate()?;
    if x_val.rows() < 2 {
        return Err(Error::TooFewRows {
            required: 2,
            got: x_val.rows(),
        });
    }
    let sample = if cfg.sample_size >= x_val.rows() {
        x_val.clone()
    } else {
        sample_rows(x_val, cfg.sample_size, rng)?
    };

    let mut net = net.clone();
    let mut events = Vec::new();
    while events.iter().filter(|e: &&PruneEvent| e.committed).count() < cfg.max_merges_per_check {
        let acts = net.hidden_activations(&sample)?;
        let Some((candidate, event_shape)) = next_candidate(&net, &acts, cfg)? else {
            break;
        };
        let accuracy = candidate.evaluate(x_val, y_val)?.0;
        let committed = accuracy >= cfg.accuracy_threshold;
        events.push(PruneEvent {
            step,
            accuracy_after: accuracy,
            committed,
            ..event_shape
        });
        if !committed {
            break;
        }
        net = candidate;
    }
    Ok((net, events))
}

/// The next removal to try: the first constant neuron in layer-then-index
/// order if any exists, otherwise the highest-|r| pair across all layers.
/// Only layers strictly wider than `min_neurons` are touched. Returns the
/// tentatively rewritten network plus the event skeleton describing it.
fn next_candidate(
    net: &Network,
    acts: &[Matrix],
    cfg: &PruneConfig,
) -> Result<Option<(Network, PruneEvent)>> {
    let prunable: Vec<usize> = (0..net.hidden_layers().len())
        .filter(|&l| net.hidden_layers()[l].out_dim() > cfg.min_neurons)
        .collect();

    for &layer in &prunable {
        let (_, sds) = acts[layer].column_stats()?;
        if let Some(a) = sds.iter().position(|&sd| sd == 0.0) {
            let c = acts[layer].column(a)[0];
            let folded = fold_constant_neuron(net, layer, a, c)?;
            let event = PruneEvent {
                step: 0,
                layer,
                a,
                b: a,
                abs_r: 0.0,
                alpha: 0.0,
                beta: c,
                accuracy_after: 0.0,
                committed: false,
            };
            return Ok(Some((folded, event)));
        }
    }

    let mut best: Option<CandidatePair> = None;
    for &layer in &prunable {
        let (corr, constant) = correlation_matrix(&acts[layer])?;
        if let Some(pair) = find_most_correlated_pair(&corr, &constant, layer) {
            if best.is_none_or(|b| pair.abs_r > b.abs_r) {
                best = Some(pair);
            }
        }
    }
    let Some(pair) = best else {
        return Ok(None);
    };
    let col_a = acts[pair.layer].column(pair.a);
    let col_b = acts[pair.layer].column(pair.b);
    let params = estimate_merge_params(&col_a, &col_b)?;
    let merged = merge_neurons(net, pair.layer, pair, params)?;
    let event = PruneEvent {
        step: 0,
        layer: pair.layer,
        a: pair.a,
        b: pair.b,
        abs_r: pair.abs_r,
        alpha: params.alpha,
        beta: params.beta,
        accuracy_after: 0.0,
        committed: false,
    };
    Ok(Some((merged, event)))
}

/// Per-iteration training metrics. `train_acc` is measured on the minibatch
/// before the update; `val_acc` is the latest gate-set accuracy, refreshed at
/// every prune check.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub task_loss: f64,
    pub noise_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

/// One prune check: when it ran, the largest |r| among the pair merges it
/// attempted (None if it attempted none), and how many removals stuck.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRecord {
    pub step: usize,
    pub max_abs_r: Option<f64>,
    pub committed: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub iterations: Vec<IterationRecord>,
    pub checks: Vec<CheckRecord>,
    pub events: Vec<PruneEvent>,
}

/// Train with noise outputs and prune as accuracy allows.
///
/// Each iteration draws fresh noise targets, takes one SGD step on the
/// combined loss, and every `pc.check_interval` steps runs a [`prune_step`]
/// against a gate set: a fixed, seeded subset of the training data of up to
/// `pc.sample_size` rows, chosen once at the start. Returns the final network
/// with the noise head stripped, plus the full training history.
pub fn noiseout_train<R: Rng>(
    net: Network,
    x: &Matrix,
    y: &Matrix,
    tc: &TrainConfig,
    nc: &NoiseConfig,
    pc: &PruneConfig,
    rng: &mut R,
) -> Result<(Network, TrainHistory)> {
    tc.validate()?;
    nc.validate()?;
    pc.validate()?;
    if x.rows() != y.rows() {
        return Err(Error::ShapeMismatch {
            op: "noiseout_train",
            lhs_rows: x.rows(),
            lhs_cols: x.cols(),
            rhs_rows: y.rows(),
            rhs_cols: y.cols(),
        });
    }
    if x.rows() < 2 {
        return Err(Error::TooFewRows {
            required: 2,
            got: x.rows(),
        });
    }
    if (nc.kind != NoiseKind::None) != net.noise_head().is_some() {
        return Err(Error::InvalidParam(
            "noise config does not match the network's noise head".into(),
        ));
    }

    let (x_gate, y_gate) = if pc.sample_size >= x.rows() {
        (x.clone(), y.clone())
    } else {
        let mut idx = rand::seq::index::sample(rng, x.rows(), pc.sample_size).into_vec();
        idx.sort_unstable();
        (x.select_rows(&idx)?, y.select_rows(&idx)?)
    };

    let mut net = net;
    let mut history = TrainHistory::default();
    let mut val_acc = net.evaluate(&x_gate, &y_gate)?.0;
    let mut step = 0usize;
    'epochs: for epoch in 0u64.. {
        let order = crate::data::shuffled_indices(x.rows(), tc.rng_seed, epoch);
        for chunk in order.chunks(tc.batch_size) {
            if step == tc.iterations {
                break 'epochs;
            }
            let bx = x.select_rows(chunk)?;
            let by = y.select_rows(chunk)?;
            let targets = if nc.kind != NoiseKind::None {
                Some(generate_noise_targets(nc, bx.rows(), rng)?)
            } else {
                None
            };
            let trace = net.forward(&bx)?;
            let (task_loss, noise_loss) = loss_parts(&trace, &by, targets.as_ref())?;
            let train_acc = accuracy_of(&trace.task_output, &by);
            let grads = backward(&net, &trace, &by, targets.as_ref(), nc.loss_weight)?;
            net = sgd_step(net, &grads, tc.learning_rate)?;
            step += 1;
            history.iterations.push(IterationRecord {
                iteration: step,
                task_loss,
                noise_loss,
                train_acc,
                val_acc,
            });

            if step % pc.check_interval == 0 {
                let (pruned, events) = prune_step(&net, &x_gate, &y_gate, pc, step, rng)?;
                net = pruned;
                val_acc = net.evaluate(&x_gate, &y_gate)?.0;
                history.checks.push(CheckRecord {
                    step,
                    max_abs_r: events
                        .iter()
                        .filter(|e| !e.is_fold())
                        .map(|e| e.abs_r)
                        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r)))),
                    committed: events.iter().filter(|e| e.committed).count(),
                });
                history.events.extend(events);
            }
        }
    }
    Ok((net.strip_noise_outputs(), history))
}
