//! Feed-forward networks with two output heads.
//!
//! A [`Network`] is a stack of dense hidden layers feeding a task head
//! (softmax for multi-class, sigmoid for a single binary output) and,
//! optionally, a noise head: extra sigmoid outputs that chase freshly drawn
//! random targets every training step. The noise head exists only to shape
//! the hidden activations during training; [`Network::strip_noise_outputs`]
//! removes it without touching the task outputs.

mod io;
mod train;

pub use train::{
    backward, generate_noise_targets, loss, loss_parts, sgd_step, ForwardTrace, Gradients,
    LayerGradients,
};
pub(crate) use train::accuracy_of;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Elementwise nonlinearity of a layer. Softmax is row-wise and only valid on
/// the task head.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivationKind {
    Identity,
    Sigmoid,
    Relu,
    Tanh,
    Softmax,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Relu => "relu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Softmax => "softmax",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "identity" => ActivationKind::Identity,
            "sigmoid" => ActivationKind::Sigmoid,
            "relu" => ActivationKind::Relu,
            "tanh" => ActivationKind::Tanh,
            "softmax" => ActivationKind::Softmax,
            _ => return None,
        })
    }

    /// Apply in place to a matrix of pre-activations.
    pub(crate) fn apply(self, z: &mut Matrix) {
        match self {
            ActivationKind::Identity => {}
            ActivationKind::Sigmoid => {
                for v in z.data_mut() {
                    *v = 1.0 / (1.0 + (-*v).exp());
                }
            }
            ActivationKind::Relu => {
                for v in z.data_mut() {
                    *v = v.max(0.0);
                }
            }
            ActivationKind::Tanh => {
                for v in z.data_mut() {
                    *v = v.tanh();
                }
            }
            ActivationKind::Softmax => {
                let cols = z.cols();
                for row in z.data_mut().chunks_mut(cols) {
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for v in row.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    for v in row.iter_mut() {
                        *v /= sum;
                    }
                }
            }
        }
    }

    /// Derivative expressed through the activation's own output. Softmax has
    /// no elementwise derivative; its head is differentiated jointly with the
    /// cross-entropy loss and never reaches this path.
    pub(crate) fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            ActivationKind::Identity => 1.0,
            ActivationKind::Sigmoid => a * (1.0 - a),
            ActivationKind::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Tanh => 1.0 - a * a,
            ActivationKind::Softmax => unreachable!("softmax is differentiated with its loss"),
        }
    }
}

/// Distribution the noise targets are drawn from, fresh every training step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Gaussian,
    Binomial,
    Constant,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Binomial => "binomial",
            NoiseKind::Constant => "constant",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "none" => NoiseKind::None,
            "gaussian" => NoiseKind::Gaussian,
            "binomial" => NoiseKind::Binomial,
            "constant" => NoiseKind::Constant,
            _ => return None,
        })
    }
}

/// Noise-head shape and target distribution.
///
/// `width` is the number of extra sigmoid outputs; `loss_weight` scales the
/// noise term of the combined loss. `kind == None` must pair with `width == 0`
/// and means no noise head at all.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub width: usize,
    pub gaussian_mean: f64,
    pub gaussian_sd: f64,
    pub constant_value: f64,
    pub bernoulli_p: f64,
    pub loss_weight: f64,
}

impl NoiseConfig {
    /// Gaussian targets centered in the sigmoid's range.
    pub fn gaussian(width: usize) -> Self {
        NoiseConfig {
            kind: NoiseKind::Gaussian,
            width,
            ..NoiseConfig::none()
        }
    }

    pub fn binomial(width: usize) -> Self {
        NoiseConfig {
            kind: NoiseKind::Binomial,
            width,
            ..NoiseConfig::none()
        }
    }

    pub fn constant(width: usize) -> Self {
        NoiseConfig {
            kind: NoiseKind::Constant,
            width,
            ..NoiseConfig::none()
        }
    }

    /// No noise head.
    pub fn none() -> Self {
        NoiseConfig {
            kind: NoiseKind::None,
            width: 0,
            gaussian_mean: 0.5,
            gaussian_sd: 0.2,
            constant_value: 0.5,
            bernoulli_p: 0.5,
            loss_weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.kind == NoiseKind::None) != (self.width == 0) {
            return Err(Error::InvalidParam(format!(
                "noise kind {} does not agree with noise width {}; kind none requires width 0 \
                 and every other kind requires width > 0",
                self.kind.name(),
                self.width
            )));
        }
        if !(0.0..=1.0).contains(&self.bernoulli_p) {
            return Err(Error::InvalidParam(format!(
                "bernoulli_p {} outside [0, 1]",
                self.bernoulli_p
            )));
        }
        if !self.gaussian_sd.is_finite() || self.gaussian_sd < 0.0 {
            return Err(Error::InvalidParam(format!(
                "gaussian_sd {} must be finite and non-negative",
                self.gaussian_sd
            )));
        }
        if !self.loss_weight.is_finite() || self.loss_weight < 0.0 {
            return Err(Error::InvalidParam(format!(
                "loss_weight {} must be finite and non-negative",
                self.loss_weight
            )));
        }
        Ok(())
    }
}

/// Training-loop knobs. `iterations` counts gradient steps, not epochs;
/// `rng_seed` drives the per-epoch batch shuffle.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub rng_seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "learning_rate {} must be finite and positive",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParam("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// One dense layer: `weights` is out_dim x in_dim, so row i holds neuron i's
/// incoming weights and column j its weight on input j.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
}

impl DenseLayer {
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    fn glorot<R: Rng>(out_dim: usize, in_dim: usize, activation: ActivationKind, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..out_dim * in_dim)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        DenseLayer {
            weights: Matrix::from_vec(out_dim, in_dim, data).expect("sized to fit"),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    /// `x` is batch x in_dim; returns batch x out_dim pre-activations.
    pub(crate) fn affine(&self, x: &Matrix) -> Matrix {
        debug_assert_eq!(x.cols(), self.in_dim());
        let (n, out) = (x.rows(), self.out_dim());
        let mut z = Matrix::zeros(n, out);
        for i in 0..n {
            let xi = x.row(i);
            let zi = &mut z.data_mut()[i * out..(i + 1) * out];
            for o in 0..out {
                let wo = self.weights.row(o);
                let mut s = self.bias[o];
                for (xk, wk) in xi.iter().zip(wo) {
                    s += xk * wk;
                }
                zi[o] = s;
            }
        }
        z
    }

    pub(crate) fn forward(&self, x: &Matrix) -> Matrix {
        let mut z = self.affine(x);
        self.activation.apply(&mut z);
        z
    }
}

/// Dense feed-forward network. Both heads read the last hidden layer.
///
/// Construct through [`Network::init`] or [`Network::load_model`]; the layer
/// fields are public so callers can inspect or edit parameters in place
/// (weight surgery, gradient checking), but widths must stay consistent:
/// each layer's `in_dim` equals the previous layer's `out_dim` and both heads
/// read the last hidden layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub(crate) input_dim: usize,
    pub hidden: Vec<DenseLayer>,
    pub task_head: DenseLayer,
    pub noise_head: Option<DenseLayer>,
}

impl Network {
    /// Fresh network with Glorot-uniform weights and zero biases,
    /// deterministic in `seed`.
    ///
    /// The task head gets softmax for two or more classes and a single
    /// sigmoid output when `class_count` is 1 (binary targets in {0,1}).
    pub fn init(
        input_dim: usize,
        hidden_dims: &[usize],
        class_count: usize,
        noise: &NoiseConfig,
        activation: ActivationKind,
        seed: u64,
    ) -> Result<Network> {
        if input_dim == 0 {
            return Err(Error::InvalidParam("input_dim must be at least 1".into()));
        }
        if class_count == 0 {
            return Err(Error::InvalidParam("class_count must be at least 1".into()));
        }
        if hidden_dims.is_empty() {
            return Err(Error::NoHiddenLayer);
        }
        if let Some(&w) = hidden_dims.iter().find(|&&w| w == 0) {
            return Err(Error::InvalidParam(format!(
                "hidden layer width {w} must be at least 1"
            )));
        }
        if activation == ActivationKind::Softmax {
            return Err(Error::InvalidParam(
                "softmax is reserved for the task head".into(),
            ));
        }
        noise.validate()?;

        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut hidden = Vec::with_capacity(hidden_dims.len());
        let mut in_dim = input_dim;
        for &out_dim in hidden_dims {
            hidden.push(DenseLayer::glorot(out_dim, in_dim, activation, &mut rng));
            in_dim = out_dim;
        }
        let head_act = if class_count >= 2 {
            ActivationKind::Softmax
        } else {
            ActivationKind::Sigmoid
        };
        let task_head = DenseLayer::glorot(class_count, in_dim, head_act, &mut rng);
        let noise_head = if noise.width > 0 {
            Some(DenseLayer::glorot(
                noise.width,
                in_dim,
                ActivationKind::Sigmoid,
                &mut rng,
            ))
        } else {
            None
        };
        Ok(Network {
            input_dim,
            hidden,
            task_head,
            noise_head,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_layers(&self) -> &[DenseLayer] {
        &self.hidden
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.hidden.iter().map(DenseLayer::out_dim).collect()
    }

    pub fn task_head(&self) -> &DenseLayer {
        &self.task_head
    }

    pub fn noise_head(&self) -> Option<&DenseLayer> {
        self.noise_head.as_ref()
    }

    /// Width of the task head.
    pub fn class_count(&self) -> usize {
        self.task_head.out_dim()
    }

    /// Copy of this network without the noise head. Task outputs are
    /// unaffected: the noise head only ever read from the last hidden layer.
    pub fn strip_noise_outputs(&self) -> Network {
        Network {
            input_dim: self.input_dim,
            hidden: self.hidden.clone(),
            task_head: self.task_head.clone(),
            noise_head: None,
        }
    }

    /// Weights plus biases over every layer present, including the noise head
    /// if one is attached: sum of out_dim x (in_dim + 1).
    pub fn count_parameters(&self) -> usize {
        self.layers().map(|l| l.out_dim() * (l.in_dim() + 1)).sum()
    }

    pub(crate) fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.hidden
            .iter()
            .chain(std::iter::once(&self.task_head))
            .chain(self.noise_head.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_matches_requested_topology() {
        let net = Network::init(
            784,
            &[300, 100],
            10,
            &NoiseConfig::none(),
            ActivationKind::Sigmoid,
            7,
        )
        .unwrap();
        assert_eq!(net.input_dim(), 784);
        assert_eq!(net.hidden_widths(), vec![300, 100]);
        assert_eq!(net.class_count(), 10);
        assert_eq!(net.task_head().activation, ActivationKind::Softmax);
        assert!(net.noise_head().is_none());
    }

    #[test]
    fn init_is_deterministic_in_seed() {
        let mk = || {
            Network::init(
                4,
                &[5, 3],
                2,
                &NoiseConfig::gaussian(6),
                ActivationKind::Tanh,
                99,
            )
            .unwrap()
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn init_attaches_noise_head_to_last_hidden_layer() {
        let net = Network::init(
            2,
            &[2],
            1,
            &NoiseConfig::gaussian(8),
            ActivationKind::Tanh,
            3,
        )
        .unwrap();
        let noise = net.noise_head().unwrap();
        assert_eq!(noise.out_dim(), 8);
        assert_eq!(noise.in_dim(), 2);
        assert_eq!(noise.activation, ActivationKind::Sigmoid);
        // Binary task: one sigmoid output, not softmax.
        assert_eq!(net.task_head().out_dim(), 1);
        assert_eq!(net.task_head().activation, ActivationKind::Sigmoid);
    }

    #[test]
    fn init_rejects_bad_shapes() {
        let none = NoiseConfig::none();
        assert!(matches!(
            Network::init(2, &[], 2, &none, ActivationKind::Sigmoid, 0),
            Err(Error::NoHiddenLayer)
        ));
        assert!(Network::init(2, &[0], 2, &none, ActivationKind::Sigmoid, 0).is_err());
        assert!(Network::init(2, &[2], 2, &none, ActivationKind::Softmax, 0).is_err());
        let mut bad = NoiseConfig::none();
        bad.width = 4;
        assert!(Network::init(2, &[2], 2, &bad, ActivationKind::Sigmoid, 0).is_err());
        let mut bad = NoiseConfig::gaussian(4);
        bad.width = 0;
        assert!(Network::init(2, &[2], 2, &bad, ActivationKind::Sigmoid, 0).is_err());
    }

    #[test]
    fn glorot_bounds_hold() {
        let net = Network::init(
            10,
            &[20],
            3,
            &NoiseConfig::none(),
            ActivationKind::Sigmoid,
            1,
        )
        .unwrap();
        let limit = (6.0 / (10 + 20) as f64).sqrt();
        assert!(net.hidden[0]
            .weights
            .data()
            .iter()
            .all(|w| w.abs() < limit));
        assert!(net.hidden[0].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn parameter_counts() {
        let mk = |hidden: &[usize], classes| {
            Network::init(
                784,
                hidden,
                classes,
                &NoiseConfig::none(),
                ActivationKind::Sigmoid,
                0,
            )
            .unwrap()
            .count_parameters()
        };
        assert_eq!(mk(&[300, 100], 10), 266_610);
        assert_eq!(mk(&[13, 12], 10), 10_503);
        let tiny = Network::init(
            2,
            &[2],
            1,
            &NoiseConfig::none(),
            ActivationKind::Sigmoid,
            0,
        )
        .unwrap();
        assert_eq!(tiny.count_parameters(), 9);
    }

    #[test]
    fn strip_noise_outputs_drops_the_expected_parameters() {
        let net = Network::init(
            30,
            &[20, 10],
            5,
            &NoiseConfig::gaussian(512),
            ActivationKind::Sigmoid,
            5,
        )
        .unwrap();
        let stripped = net.strip_noise_outputs();
        assert!(stripped.noise_head().is_none());
        assert_eq!(
            net.count_parameters() - stripped.count_parameters(),
            512 * (10 + 1)
        );
        // Idempotent.
        assert_eq!(stripped.strip_noise_outputs(), stripped);
    }

    #[test]
    fn activation_names_round_trip() {
        for kind in [
            ActivationKind::Identity,
            ActivationKind::Sigmoid,
            ActivationKind::Relu,
            ActivationKind::Tanh,
            ActivationKind::Softmax,
        ] {
            assert_eq!(ActivationKind::from_name(kind.name()), Some(kind));
        }
        assert_eq!(ActivationKind::from_name("gelu"), None);
        for kind in [
            NoiseKind::None,
            NoiseKind::Gaussian,
            NoiseKind::Binomial,
            NoiseKind::Constant,
        ] {
            assert_eq!(NoiseKind::from_name(kind.name()), Some(kind));
        }
    }
}
