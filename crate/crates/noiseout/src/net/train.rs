//! Forward pass, loss, backpropagation, SGD, noise-target generation, and
//! evaluation.
//!
//! The combined training loss is `task + loss_weight * noise`, where the task
//! term is mean cross-entropy (softmax head, or binary cross-entropy for a
//! single sigmoid output) and the noise term is mean squared error over every
//! noise-head entry. Gradients are plain batch averages, so doubling the
//! batch does not double the step size.

use super::{Network, NoiseConfig, NoiseKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Probabilities are clamped to this floor before taking logs, so a confident
/// mistake costs a large finite number instead of NaN.
const PROB_FLOOR: f64 = 1e-12;

/// Everything the forward pass computed, kept for backpropagation: the input
/// batch, per-hidden-layer pre-activations and activations, and both head
/// outputs.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub hidden_pre: Vec<Matrix>,
    pub hidden: Vec<Matrix>,
    pub task_output: Matrix,
    pub noise_output: Option<Matrix>,
}

/// Loss gradients with the same shapes as the network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<LayerGradients>,
    pub task_head: LayerGradients,
    pub noise_head: Option<LayerGradients>,
}

impl Network {
    /// Run the batch through every layer and both heads.
    pub fn forward(&self, x: &Matrix) -> Result<ForwardTrace> {
        if x.cols() != self.input_dim {
            return Err(self.input_shape_error("forward", x));
        }
        let mut hidden_pre = Vec::with_capacity(self.hidden.len());
        let mut hidden = Vec::with_capacity(self.hidden.len());
        let mut a = x;
        for layer in &self.hidden {
            let z = layer.affine(a);
            let mut act = z.clone();
            layer.activation.apply(&mut act);
            hidden_pre.push(z);
            hidden.push(act);
            a = hidden.last().expect("just pushed");
        }
        let task_output = self.task_head.forward(a);
        let noise_output = self.noise_head.as_ref().map(|h| h.forward(a));
        Ok(ForwardTrace {
            input: x.clone(),
            hidden_pre,
            hidden,
            task_output,
            noise_output,
        })
    }

    /// Task-head outputs only; skips the noise head and keeps no trace.
    pub fn forward_task(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim {
            return Err(self.input_shape_error("forward", x));
        }
        let mut a = self.hidden[0].forward(x);
        for layer in &self.hidden[1..] {
            a = layer.forward(&a);
        }
        Ok(self.task_head.forward(&a))
    }

    /// Post-activation values of hidden layers `0..=layer`, returning the
    /// last. Stops propagating as soon as the requested layer is reached.
    pub(crate) fn hidden_up_to(&self, x: &Matrix, layer: usize) -> Result<Matrix> {
        if layer >= self.hidden.len() {
            return Err(Error::IndexOutOfRange {
                axis: "hidden layer",
                index: layer,
                len: self.hidden.len(),
            });
        }
        if x.cols() != self.input_dim {
            return Err(self.input_shape_error("forward", x));
        }
        let mut a = self.hidden[0].forward(x);
        for l in &self.hidden[1..=layer] {
            a = l.forward(&a);
        }
        Ok(a)
    }

    /// Post-activation values of every hidden layer in one pass.
    pub(crate) fn hidden_activations(&self, x: &Matrix) -> Result<Vec<Matrix>> {
        if x.cols() != self.input_dim {
            return Err(self.input_shape_error("forward", x));
        }
        let mut acts = Vec::with_capacity(self.hidden.len());
        let mut a = x;
        for layer in &self.hidden {
            acts.push(layer.forward(a));
            a = acts.last().expect("just pushed");
        }
        Ok(acts)
    }

    /// Accuracy and mean task loss on a labeled batch; the noise head is
    /// ignored. Accuracy is argmax agreement, or 0.5-rounding agreement for a
    /// single binary output.
    pub fn evaluate(&self, x: &Matrix, y_task: &Matrix) -> Result<(f64, f64)> {
        if x.rows() == 0 {
            return Err(Error::TooFewRows {
                required: 1,
                got: 0,
            });
        }
        let p = self.forward_task(x)?;
        check_same_shape("evaluate", &p, y_task)?;
        Ok((accuracy_of(&p, y_task), task_loss(&p, y_task)))
    }

    fn input_shape_error(&self, op: &'static str, x: &Matrix) -> Error {
        let w = &self.hidden[0].weights;
        Error::ShapeMismatch {
            op,
            lhs_rows: x.rows(),
            lhs_cols: x.cols(),
            rhs_rows: w.rows(),
            rhs_cols: w.cols(),
        }
    }
}

/// Combined loss: task term plus `lambda` times the noise term.
pub fn loss(
    trace: &ForwardTrace,
    y_task: &Matrix,
    y_noise: Option<&Matrix>,
    lambda: f64,
) -> Result<f64> {
    let (task, noise) = loss_parts(trace, y_task, y_noise)?;
    Ok(task + lambda * noise)
}

/// The two raw loss terms `(task, noise)` before weighting. The noise term is
/// 0 when no targets are supplied.
pub fn loss_parts(
    trace: &ForwardTrace,
    y_task: &Matrix,
    y_noise: Option<&Matrix>,
) -> Result<(f64, f64)> {
    if trace.task_output.rows() == 0 {
        return Err(Error::TooFewRows {
            required: 1,
            got: 0,
        });
    }
    check_same_shape("loss", &trace.task_output, y_task)?;
    let task = task_loss(&trace.task_output, y_task);
    let noise = match (trace.noise_output.as_ref(), y_noise) {
        (Some(a), Some(t)) => {
            check_same_shape("loss", a, t)?;
            let mut sum = 0.0;
            for (av, tv) in a.data().iter().zip(t.data()) {
                let d = av - tv;
                sum += d * d;
            }
            sum / a.data().len() as f64
        }
        (None, Some(_)) => {
            return Err(Error::StaleTrace {
                detail: "noise targets supplied but the trace has no noise output".into(),
            })
        }
        (_, None) => 0.0,
    };
    Ok((task, noise))
}

/// Gradients of [`loss`] with respect to every weight and bias.
///
/// `trace` must come from [`Network::forward`] on this same network; a trace
/// taken before a pruning step no longer matches and is rejected.
pub fn backward(
    net: &Network,
    trace: &ForwardTrace,
    y_task: &Matrix,
    y_noise: Option<&Matrix>,
    lambda: f64,
) -> Result<Gradients> {
    validate_trace(net, trace)?;
    check_same_shape("backward", &trace.task_output, y_task)?;
    let n = trace.input.rows();
    if n == 0 {
        return Err(Error::TooFewRows {
            required: 1,
            got: 0,
        });
    }
    let nf = n as f64;
    let last = trace.hidden.last().expect("networks have a hidden layer");

    // Softmax + cross-entropy and sigmoid + binary cross-entropy share the
    // same pre-activation gradient.
    let dz_task = scaled_diff(&trace.task_output, y_task, 1.0 / nf);
    let task_grads = LayerGradients {
        weights: dz_task.transpose().matmul(last)?,
        bias: column_sums(&dz_task),
    };
    let mut dh = dz_task.matmul(&net.task_head.weights)?;

    let noise_grads = match (net.noise_head.as_ref(), trace.noise_output.as_ref()) {
        (Some(head), Some(a)) => {
            if let Some(t) = y_noise {
                check_same_shape("backward", a, t)?;
                let scale = 2.0 * lambda / (nf * head.out_dim() as f64);
                let mut dz = a.clone();
                for (d, &t) in dz.data_mut().iter_mut().zip(t.data()) {
                    let av = *d;
                    *d = (av - t) * scale * av * (1.0 - av);
                }
                add_assign(&mut dh, &dz.matmul(&head.weights)?);
                Some(LayerGradients {
                    weights: dz.transpose().matmul(last)?,
                    bias: column_sums(&dz),
                })
            } else {
                // No targets this step: the noise head contributes nothing.
                Some(LayerGradients {
                    weights: Matrix::zeros(head.out_dim(), head.in_dim()),
                    bias: vec![0.0; head.out_dim()],
                })
            }
        }
        _ => None,
    };

    let mut hidden_grads = Vec::with_capacity(net.hidden.len());
    for l in (0..net.hidden.len()).rev() {
        let act = net.hidden[l].activation;
        let mut dz = dh;
        for (d, &a) in dz.data_mut().iter_mut().zip(trace.hidden[l].data()) {
            *d *= act.derivative_from_output(a);
        }
        let prev = if l == 0 { &trace.input } else { &trace.hidden[l - 1] };
        hidden_grads.push(LayerGradients {
            weights: dz.transpose().matmul(prev)?,
            bias: column_sums(&dz),
        });
        dh = if l > 0 {
            dz.matmul(&net.hidden[l].weights)?
        } else {
            dz
        };
    }
    hidden_grads.reverse();

    Ok(Gradients {
        hidden: hidden_grads,
        task_head: task_grads,
        noise_head: noise_grads,
    })
}

/// One plain SGD update: every parameter moves by `-lr` times its gradient.
pub fn sgd_step(net: Network, grads: &Gradients, lr: f64) -> Result<Network> {
    let mut net = net;
    if grads.hidden.len() != net.hidden.len()
        || grads.noise_head.is_some() != net.noise_head.is_some()
    {
        return Err(Error::StaleTrace {
            detail: "gradient layer set does not match the network".into(),
        });
    }
    {
        let layers = net
            .hidden
            .iter_mut()
            .chain(std::iter::once(&mut net.task_head))
            .chain(net.noise_head.iter_mut());
        let grad_layers = grads
            .hidden
            .iter()
            .chain(std::iter::once(&grads.task_head))
            .chain(grads.noise_head.iter());
        for (layer, g) in layers.zip(grad_layers) {
            if layer.weights.rows() != g.weights.rows()
                || layer.weights.cols() != g.weights.cols()
            {
                return Err(Error::ShapeMismatch {
                    op: "sgd_step",
                    lhs_rows: layer.weights.rows(),
                    lhs_cols: layer.weights.cols(),
                    rhs_rows: g.weights.rows(),
                    rhs_cols: g.weights.cols(),
                });
            }
            for (w, &gw) in layer.weights.data_mut().iter_mut().zip(g.weights.data()) {
                *w -= lr * gw;
            }
            for (b, &gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * gb;
            }
        }
    }
    Ok(net)
}

/// Fresh batch of noise targets, one row per sample. Gaussian draws are
/// clamped into [0, 1] to stay reachable by the sigmoid head.
pub fn generate_noise_targets<R: Rng>(
    noise: &NoiseConfig,
    batch: usize,
    rng: &mut R,
) -> Result<Matrix> {
    noise.validate()?;
    let count = batch * noise.width;
    let data: Vec<f64> = match noise.kind {
        NoiseKind::None => return Err(Error::NoNoiseTargets),
        NoiseKind::Gaussian => {
            let dist = Normal::new(noise.gaussian_mean, noise.gaussian_sd)
                .map_err(|e| Error::InvalidParam(format!("gaussian noise targets: {e}")))?;
            (0..count)
                .map(|_| dist.sample(rng).clamp(0.0, 1.0))
                .collect()
        }
        NoiseKind::Binomial => (0..count)
            .map(|_| f64::from(rng.random_bool(noise.bernoulli_p)))
            .collect(),
        NoiseKind::Constant => vec![noise.constant_value; count],
    };
    Matrix::from_vec(batch, noise.width, data)
}

fn validate_trace(net: &Network, trace: &ForwardTrace) -> Result<()> {
    let fail = |detail: String| Err(Error::StaleTrace { detail });
    if trace.input.cols() != net.input_dim {
        return fail(format!(
            "trace input width {} vs network input {}",
            trace.input.cols(),
            net.input_dim
        ));
    }
    if trace.hidden.len() != net.hidden.len() || trace.hidden_pre.len() != net.hidden.len() {
        return fail(format!(
            "trace has {} hidden layers, network has {}",
            trace.hidden.len(),
            net.hidden.len()
        ));
    }
    for (l, (h, layer)) in trace.hidden.iter().zip(&net.hidden).enumerate() {
        if h.cols() != layer.out_dim() {
            return fail(format!(
                "hidden layer {} width {} vs network width {}",
                l,
                h.cols(),
                layer.out_dim()
            ));
        }
    }
    if trace.task_output.cols() != net.task_head.out_dim() {
        return fail(format!(
            "task output width {} vs head width {}",
            trace.task_output.cols(),
            net.task_head.out_dim()
        ));
    }
    match (&trace.noise_output, &net.noise_head) {
        (Some(a), Some(h)) if a.cols() != h.out_dim() => fail(format!(
            "noise output width {} vs head width {}",
            a.cols(),
            h.out_dim()
        )),
        (Some(_), None) => fail("trace has a noise output but the network has no noise head".into()),
        (None, Some(_)) => fail("network has a noise head but the trace has no noise output".into()),
        _ => Ok(()),
    }
}

/// Fraction of rows where the prediction agrees with the target: argmax
/// agreement, or 0.5-rounding agreement for a single binary column.
pub(crate) fn accuracy_of(p: &Matrix, y: &Matrix) -> f64 {
    let n = p.rows();
    let mut correct = 0usize;
    if p.cols() == 1 {
        for i in 0..n {
            correct += usize::from((p.get(i, 0) >= 0.5) == (y.get(i, 0) >= 0.5));
        }
    } else {
        for i in 0..n {
            correct += usize::from(argmax(p.row(i)) == argmax(y.row(i)));
        }
    }
    correct as f64 / n as f64
}

/// Mean cross-entropy for a softmax head, or mean binary cross-entropy for a
/// single sigmoid output.
fn task_loss(p: &Matrix, y: &Matrix) -> f64 {
    let n = p.rows() as f64;
    let mut sum = 0.0;
    if p.cols() == 1 {
        for (&pv, &yv) in p.data().iter().zip(y.data()) {
            sum -= yv * pv.clamp(PROB_FLOOR, 1.0).ln()
                + (1.0 - yv) * (1.0 - pv).clamp(PROB_FLOOR, 1.0).ln();
        }
    } else {
        for (&pv, &yv) in p.data().iter().zip(y.data()) {
            if yv != 0.0 {
                sum -= yv * pv.clamp(PROB_FLOOR, 1.0).ln();
            }
        }
    }
    sum / n
}

fn check_same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::ShapeMismatch {
            op,
            lhs_rows: a.rows(),
            lhs_cols: a.cols(),
            rhs_rows: b.rows(),
            rhs_cols: b.cols(),
        });
    }
    Ok(())
}

fn scaled_diff(a: &Matrix, b: &Matrix, s: f64) -> Matrix {
    let mut out = a.clone();
    for (o, &bv) in out.data_mut().iter_mut().zip(b.data()) {
        *o = (*o - bv) * s;
    }
    out
}

fn add_assign(a: &mut Matrix, b: &Matrix) {
    for (av, &bv) in a.data_mut().iter_mut().zip(b.data()) {
        *av += bv;
    }
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (s, &v) in sums.iter_mut().zip(m.row(r)) {
            *s += v;
        }
    }
    sums
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
