//! Structural removal of a hidden neuron, with the weight rewrites that keep
//! the network's function (approximately) intact.
//!
//! Removing neuron `a` from a layer means deleting its weight row and bias in
//! that layer, and its weight column in every consumer: the next hidden
//! layer, or both heads when the layer is the last one. If `a`'s activation
//! is `alpha * b + beta`, the consumer sees the same pre-activations after
//! `column_b += alpha * column_a` and `bias += beta * column_a`.

use super::{CandidatePair, MergeParams};
use crate::error::{Error, Result};
use crate::net::{DenseLayer, Network};

/// Remove neuron `pair.a`, folding its contribution into `pair.b` via the
/// fitted `alpha` and `beta`. The layer shrinks by one neuron.
pub fn merge_neurons(
    net: &Network,
    layer: usize,
    pair: CandidatePair,
    p: MergeParams,
) -> Result<Network> {
    let width = check_layer(net, layer, 2)?;
    for idx in [pair.a, pair.b] {
        if idx >= width {
            return Err(Error::IndexOutOfRange {
                axis: "neuron",
                index: idx,
                len: width,
            });
        }
    }
    if pair.a == pair.b {
        return Err(Error::InvalidParam(format!(
            "cannot merge neuron {} with itself",
            pair.a
        )));
    }
    remove_neuron(net, layer, pair.a, Some((pair.b, p.alpha)), p.beta)
}

/// Remove neuron `a` whose activation is the constant `c` on the sample,
/// folding `c` times its outgoing weights into the consumers' biases.
pub fn fold_constant_neuron(net: &Network, layer: usize, a: usize, c: f64) -> Result<Network> {
    let width = check_layer(net, layer, 2)?;
    if a >= width {
        return Err(Error::IndexOutOfRange {
            axis: "neuron",
            index: a,
            len: width,
        });
    }
    remove_neuron(net, layer, a, None, c)
}

/// Layer bounds check; the layer must keep at least `min - 1` neurons after
/// one removal. Returns the current width.
fn check_layer(net: &Network, layer: usize, min: usize) -> Result<usize> {
    let Some(l) = net.hidden.get(layer) else {
        return Err(Error::IndexOutOfRange {
            axis: "hidden layer",
            index: layer,
            len: net.hidden.len(),
        });
    };
    let width = l.out_dim();
    if width < min {
        return Err(Error::LayerTooNarrow { layer, width, min });
    }
    Ok(width)
}

/// Shared removal: delete neuron `a` from `layer`, rewriting every consumer.
/// `into` carries `(b, alpha)` for a pair merge; `beta` is the constant fed
/// into consumer biases (the fitted intercept, or the folded constant).
fn remove_neuron(
    net: &Network,
    layer: usize,
    a: usize,
    into: Option<(usize, f64)>,
    beta: f64,
) -> Result<Network> {
    let mut out = net.clone();
    let source = &net.hidden[layer];
    out.hidden[layer] = DenseLayer {
        weights: source.weights.delete_row(a)?,
        bias: {
            let mut b = source.bias.clone();
            b.remove(a);
            b
        },
        activation: source.activation,
    };

    let last = net.hidden.len() - 1;
    if layer == last {
        out.task_head = adjust_consumer(&net.task_head, a, into, beta)?;
        if let Some(noise) = &net.noise_head {
            out.noise_head = Some(adjust_consumer(noise, a, into, beta)?);
        }
    } else {
        out.hidden[layer + 1] = adjust_consumer(&net.hidden[layer + 1], a, into, beta)?;
    }
    Ok(out)
}

fn adjust_consumer(
    consumer: &DenseLayer,
    a: usize,
    into: Option<(usize, f64)>,
    beta: f64,
) -> Result<DenseLayer> {
    let weights = match into {
        Some((b, alpha)) => consumer.weights.axpy_column(b, a, alpha)?,
        None => consumer.weights.clone(),
    };
    let mut bias = consumer.bias.clone();
    for (bv, row) in bias.iter_mut().zip(0..consumer.out_dim()) {
        *bv += beta * consumer.weights.get(row, a);
    }
    Ok(DenseLayer {
        weights: weights.delete_column(a)?,
        bias,
        activation: consumer.activation,
    })
}
