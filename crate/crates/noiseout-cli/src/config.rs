//! Flat `section.key = value` configuration with documented defaults.
//!
//! Every knob has a default, so an empty (or absent) config file is a valid
//! run. Unknown keys are rejected rather than ignored: a typo should fail
//! loudly, not silently fall back to a default. Command-line flags override
//! file values; the fully resolved map is echoed into `summary.json`.

use crate::UsageError;
use anyhow::{Context, Result};
use noiseout::data::{load_mnist_idx, synthetic_xor};
use noiseout::{ActivationKind, Dataset, Network, NoiseConfig, NoiseKind, PruneConfig, TrainConfig};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Every key the config file accepts, with its default value.
pub const DEFAULTS: &[(&str, &str)] = &[
    // data.kind: "xor" (synthetic, self-contained) or "mnist" (IDX files).
    ("data.kind", "xor"),
    ("data.mnist_images", "data/mnist/train-images-idx3-ubyte"),
    ("data.mnist_labels", "data/mnist/train-labels-idx1-ubyte"),
    // Optional held-out pair for test metrics; empty = reuse the train set.
    ("data.test_images", ""),
    ("data.test_labels", ""),
    // Keep only the first N training rows (0 = all). Applied before training.
    ("data.limit", "0"),
    ("data.xor_n", "256"),
    ("data.xor_jitter", "0.05"),
    // Comma-separated hidden widths, e.g. "300,100".
    ("arch.hidden", "300,100"),
    ("arch.activation", "sigmoid"),
    ("arch.classes", "0"), // 0 = infer from the dataset
    ("train.learning_rate", "0.5"),
    ("train.batch_size", "128"),
    ("train.epochs", "20"),
    // Explicit gradient-step budget; 0 = epochs * ceil(rows / batch).
    ("train.iterations", "0"),
    // "none", "gaussian", "binomial" or "constant".
    ("noise.kind", "gaussian"),
    ("noise.k", "512"),
    ("noise.lambda", "1.0"),
    ("prune.accuracy_threshold", "0.95"),
    ("prune.sample_size", "4096"),
    // Steps between prune checks; 0 = once per epoch.
    ("prune.check_interval", "0"),
    ("prune.min_neurons", "1"),
    ("prune.max_merges_per_check", "10000"),
    ("run.seed", "42"),
    ("run.out", "out"),
    ("correlate.runs", "100"),
    ("correlate.record_interval", "10"),
    ("correlate.probe_layer", "0"),
];

#[derive(Clone, Debug)]
pub struct Config {
    map: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl Config {
    pub fn defaults() -> Config {
        Config {
            map: DEFAULTS
                .iter()
                .map(|&(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// Defaults, then the file (if given), line format `section.key = value`.
    /// `#` starts a comment; blank lines are skipped.
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let mut cfg = Config::defaults();
        let Some(path) = path else { return Ok(cfg) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "{}:{}: expected `section.key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Overwrite one key; the key must be a known one.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.map.contains_key(key) {
            return Err(usage(format!("unknown config key `{key}`")));
        }
        self.map.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// The resolved key/value map, for echoing into reports.
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.map
    }

    fn raw(&self, key: &str) -> &str {
        self.map
            .get(key)
            .unwrap_or_else(|| panic!("config key {key} has no default"))
    }

    pub fn get_str(&self, key: &str) -> &str {
        self.raw(key)
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.raw(key)
            .parse()
            .map_err(|_| usage(format!("{key} = `{}` is not a non-negative integer", self.raw(key))))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        self.raw(key)
            .parse()
            .map_err(|_| usage(format!("{key} = `{}` is not a non-negative integer", self.raw(key))))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.raw(key)
            .parse()
            .map_err(|_| usage(format!("{key} = `{}` is not a number", self.raw(key))))
    }

    pub fn seed(&self) -> Result<u64> {
        self.get_u64("run.seed")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get_str("run.out"))
    }

    pub fn hidden_widths(&self) -> Result<Vec<usize>> {
        let raw = self.get_str("arch.hidden");
        let widths: Vec<usize> = raw
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| usage(format!("arch.hidden = `{raw}` is not a width list like 300,100")))?;
        if widths.is_empty() || widths.contains(&0) {
            return Err(usage("arch.hidden needs at least one nonzero width"));
        }
        Ok(widths)
    }

    pub fn activation(&self) -> Result<ActivationKind> {
        let name = self.get_str("arch.activation");
        match ActivationKind::from_name(name) {
            Some(ActivationKind::Softmax) | None => Err(usage(format!(
                "arch.activation = `{name}` is not a hidden-layer activation"
            ))),
            Some(a) => Ok(a),
        }
    }

    pub fn noise_config(&self) -> Result<NoiseConfig> {
        let k = self.get_usize("noise.k")?;
        let mut nc = match self.get_str("noise.kind") {
            "none" => NoiseConfig::none(),
            "gaussian" => NoiseConfig::gaussian(k),
            "binomial" => NoiseConfig::binomial(k),
            "constant" => NoiseConfig::constant(k),
            other => return Err(usage(format!("noise.kind = `{other}` is not a noise kind"))),
        };
        nc.loss_weight = self.get_f64("noise.lambda")?;
        nc.validate().map_err(|e| usage(e.to_string()))?;
        Ok(nc)
    }

    /// Noise config with the kind swapped out, for the correlate sweep.
    pub fn noise_config_of_kind(&self, kind: NoiseKind) -> Result<NoiseConfig> {
        let k = self.get_usize("noise.k")?;
        let mut nc = match kind {
            NoiseKind::None => NoiseConfig::none(),
            NoiseKind::Gaussian => NoiseConfig::gaussian(k),
            NoiseKind::Binomial => NoiseConfig::binomial(k),
            NoiseKind::Constant => NoiseConfig::constant(k),
        };
        nc.loss_weight = self.get_f64("noise.lambda")?;
        nc.validate().map_err(|e| usage(e.to_string()))?;
        Ok(nc)
    }

    /// Gradient-step budget for a dataset of `rows` rows.
    pub fn train_config(&self, rows: usize) -> Result<TrainConfig> {
        let batch_size = self.get_usize("train.batch_size")?;
        if batch_size == 0 {
            return Err(usage("train.batch_size must be at least 1"));
        }
        let explicit = self.get_usize("train.iterations")?;
        let iterations = if explicit > 0 {
            explicit
        } else {
            self.get_usize("train.epochs")? * rows.div_ceil(batch_size)
        };
        let tc = TrainConfig {
            learning_rate: self.get_f64("train.learning_rate")?,
            batch_size,
            iterations,
            rng_seed: self.seed()?,
        };
        tc.validate().map_err(|e| usage(e.to_string()))?;
        Ok(tc)
    }

    pub fn prune_config(&self, steps_per_epoch: usize) -> Result<PruneConfig> {
        let interval = self.get_usize("prune.check_interval")?;
        let pc = PruneConfig {
            accuracy_threshold: self.get_f64("prune.accuracy_threshold")?,
            sample_size: self.get_usize("prune.sample_size")?,
            check_interval: if interval > 0 { interval } else { steps_per_epoch },
            min_neurons: self.get_usize("prune.min_neurons")?,
            max_merges_per_check: self.get_usize("prune.max_merges_per_check")?,
        };
        pc.validate().map_err(|e| usage(e.to_string()))?;
        Ok(pc)
    }

    /// The dataset the run trains on (and that `eval` scores).
    pub fn train_dataset(&self) -> Result<Dataset> {
        let ds = match self.get_str("data.kind") {
            "xor" => synthetic_xor(
                self.get_usize("data.xor_n")?,
                self.get_f64("data.xor_jitter")?,
                self.seed()?,
            )
            .map_err(|e| usage(e.to_string()))?,
            "mnist" => {
                let images = self.get_str("data.mnist_images");
                let labels = self.get_str("data.mnist_labels");
                load_mnist_idx(Path::new(images), Path::new(labels))
                    .with_context(|| format!("loading mnist from {images} / {labels}"))?
            }
            other => return Err(usage(format!("data.kind = `{other}` is not a dataset kind"))),
        };
        let limit = self.get_usize("data.limit")?;
        if limit > 0 && limit < ds.len() {
            let keep: Vec<usize> = (0..limit).collect();
            return Ok(Dataset {
                x: ds.x.select_rows(&keep)?,
                y: ds.y.select_rows(&keep)?,
                name: format!("{}[..{limit}]", ds.name),
            });
        }
        Ok(ds)
    }

    /// Held-out data for test metrics. XOR redraws with a shifted seed; MNIST
    /// uses the configured test pair, falling back to the train set when the
    /// paths are empty.
    pub fn test_dataset(&self, train: &Dataset) -> Result<Dataset> {
        match self.get_str("data.kind") {
            "xor" => synthetic_xor(
                self.get_usize("data.xor_n")?,
                self.get_f64("data.xor_jitter")?,
                self.seed()?.wrapping_add(1),
            )
            .map_err(|e| usage(e.to_string())),
            _ => {
                let images = self.get_str("data.test_images");
                let labels = self.get_str("data.test_labels");
                if images.is_empty() || labels.is_empty() {
                    return Ok(train.clone());
                }
                load_mnist_idx(Path::new(images), Path::new(labels))
                    .with_context(|| format!("loading mnist from {images} / {labels}"))
            }
        }
    }

    /// Fresh network matching the architecture section and the dataset shape.
    /// The noise head is passed in because `correlate` swaps kinds per run.
    pub fn build_network(&self, ds: &Dataset, noise: &NoiseConfig, seed: u64) -> Result<Network> {
        let classes = match self.get_usize("arch.classes")? {
            0 => ds.y.cols(),
            c => c,
        };
        Network::init(
            ds.x.cols(),
            &self.hidden_widths()?,
            classes,
            noise,
            self.activation()?,
            seed,
        )
        .map_err(|e| usage(e.to_string()))
    }
}
