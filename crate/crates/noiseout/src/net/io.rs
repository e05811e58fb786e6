//! Binary model files.
//!
//! Layout: one ASCII header line, then raw little-endian 64-bit floats.
//!
//! ```text
//! NOUT1 <input_dim> <out>:<activation>;<out>:<activation>;...\n
//! ```
//!
//! Specs run hidden layers first, then the task head; a noise head, if
//! present, comes last with a `!noise` suffix. After the newline every layer
//! is stored in header order, weights row-major then bias. Input widths are
//! not stored; they chain from `input_dim`, and both heads read the last
//! hidden layer. The payload length must match the header exactly.

use super::{ActivationKind, DenseLayer, Network};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &str = "NOUT1";

impl Network {
    /// Write the network to `path` in the NOUT1 format.
    pub fn save_model(&self, path: &Path) -> Result<()> {
        let mut specs = Vec::new();
        for layer in &self.hidden {
            specs.push(format!("{}:{}", layer.out_dim(), layer.activation.name()));
        }
        specs.push(format!(
            "{}:{}",
            self.task_head.out_dim(),
            self.task_head.activation.name()
        ));
        if let Some(noise) = &self.noise_head {
            specs.push(format!(
                "{}:{}!noise",
                noise.out_dim(),
                noise.activation.name()
            ));
        }
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{MAGIC} {} {}", self.input_dim, specs.join(";"))?;
        for layer in self.layers() {
            for &v in layer.weights.data() {
                w.write_all(&v.to_le_bytes())?;
            }
            for &v in &layer.bias {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Read a network back from a NOUT1 file.
    pub fn load_model(path: &Path) -> Result<Network> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;

        let magic_ok = bytes.len() > MAGIC.len()
            && &bytes[..MAGIC.len()] == MAGIC.as_bytes()
            && bytes[MAGIC.len()] == b' ';
        if !magic_ok {
            let found: String = String::from_utf8_lossy(&bytes)
                .chars()
                .take(MAGIC.len())
                .collect();
            return Err(Error::ModelMagic {
                expected: MAGIC.into(),
                found,
            });
        }
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::ModelHeader("missing end of header line".into()))?;
        let header = std::str::from_utf8(&bytes[..newline])
            .map_err(|_| Error::ModelHeader("header is not valid UTF-8".into()))?;
        let payload = &bytes[newline + 1..];

        let mut fields = header.split_whitespace();
        fields.next(); // magic, already checked
        let input_dim: usize = fields
            .next()
            .ok_or_else(|| Error::ModelHeader("missing input width".into()))?
            .parse()
            .map_err(|_| Error::ModelHeader("input width is not a number".into()))?;
        let spec_list = fields
            .next()
            .ok_or_else(|| Error::ModelHeader("missing layer list".into()))?;
        if fields.next().is_some() {
            return Err(Error::ModelHeader("trailing fields after layer list".into()));
        }
        if input_dim == 0 {
            return Err(Error::ModelHeader("input width must be at least 1".into()));
        }

        let mut dims = Vec::new();
        let mut noise_spec = None;
        let specs: Vec<&str> = spec_list.split(';').collect();
        for (i, spec) in specs.iter().enumerate() {
            let (spec, is_noise) = match spec.strip_suffix("!noise") {
                Some(s) => (s, true),
                None => (*spec, false),
            };
            if is_noise && i + 1 != specs.len() {
                return Err(Error::ModelHeader(
                    "noise head must be the last layer".into(),
                ));
            }
            let (out, act) = spec
                .split_once(':')
                .ok_or_else(|| Error::ModelHeader(format!("malformed layer spec {spec:?}")))?;
            let out: usize = out
                .parse()
                .map_err(|_| Error::ModelHeader(format!("bad layer width in {spec:?}")))?;
            if out == 0 {
                return Err(Error::ModelHeader("layer width must be at least 1".into()));
            }
            let act = ActivationKind::from_name(act)
                .ok_or_else(|| Error::ModelHeader(format!("unknown activation {act:?}")))?;
            if is_noise {
                if act != ActivationKind::Sigmoid {
                    return Err(Error::ModelHeader("noise head must be sigmoid".into()));
                }
                noise_spec = Some((out, act));
            } else {
                dims.push((out, act));
            }
        }
        if dims.len() < 2 {
            return Err(Error::ModelHeader(
                "need at least one hidden layer and a task head".into(),
            ));
        }
        let (task_out, task_act) = dims.pop().expect("checked above");
        if dims.iter().any(|&(_, act)| act == ActivationKind::Softmax) {
            return Err(Error::ModelHeader(
                "softmax is only valid on the task head".into(),
            ));
        }

        // Input widths chain through the hidden stack; both heads read the
        // last hidden layer.
        let last_hidden = dims.last().expect("at least one hidden layer").0;
        let mut shapes: Vec<(usize, usize, ActivationKind)> = Vec::new();
        let mut in_dim = input_dim;
        for &(out, act) in &dims {
            shapes.push((out, in_dim, act));
            in_dim = out;
        }
        shapes.push((task_out, last_hidden, task_act));
        if let Some((out, act)) = noise_spec {
            shapes.push((out, last_hidden, act));
        }

        let expected: usize = shapes.iter().map(|&(o, i, _)| o * (i + 1) * 8).sum();
        if payload.len() != expected {
            return Err(Error::PayloadSize {
                expected,
                found: payload.len(),
            });
        }

        let mut floats = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
        let mut layers = Vec::with_capacity(shapes.len());
        for &(out, inp, act) in &shapes {
            let weights =
                Matrix::from_vec(out, inp, floats.by_ref().take(out * inp).collect())?;
            let bias: Vec<f64> = floats.by_ref().take(out).collect();
            layers.push(DenseLayer {
                weights,
                bias,
                activation: act,
            });
        }
        let noise_head = noise_spec.map(|_| layers.pop().expect("noise layer parsed"));
        let task_head = layers.pop().expect("task layer parsed");
        Ok(Network {
            input_dim,
            hidden: layers,
            task_head,
            noise_head,
        })
    }
}
