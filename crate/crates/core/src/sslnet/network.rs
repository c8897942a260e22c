use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{sigmoid, softmax_rows, Activation, Dense, Matrix};
use crate::error::{Error, Result};
use crate::relaxations::ProbVector;
use crate::rng::seeded_rng;

/// Per-attribute Bernoulli parameters, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeParam(Vec<f64>);

impl AttributeParam {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("attribute vector is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("attribute parameter {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Round each component at 0.5.
    pub fn to_binary(&self) -> Vec<bool> {
        self.0.iter().map(|&t| t > 0.5).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Distinct classes: a point on the simplex.
    Softmax,
    /// Independent binary attributes.
    Sigmoid,
}

/// Output of [`Network::forward`].
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Probs(ProbVector),
    Attributes(AttributeParam),
}

impl Prediction {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            Prediction::Probs(p) => p.as_slice(),
            Prediction::Attributes(a) => a.as_slice(),
        }
    }
}

/// Feed-forward network: affine layers with a shared hidden activation and
/// a softmax or sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Dense>,
    pub activation: Activation,
    pub head: Head,
}

pub(crate) struct ForwardTape {
    /// Input to each layer; `inputs[0]` is the batch itself.
    pub inputs: Vec<Matrix>,
    pub logits: Matrix,
    pub outputs: Matrix,
}

const MAGIC: &[u8; 8] = b"DSSLNET1";

impl Network {
    /// All-zero weights; sizes are `[input, hidden..., K]`.
    pub fn zeros(sizes: &[usize], activation: Activation, head: Head) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!(
                "layer sizes must have at least input and output widths, all positive: {sizes:?}"
            )));
        }
        if head == Head::Softmax && sizes[sizes.len() - 1] < 2 {
            return Err(Error::Config("softmax head needs at least 2 outputs".into()));
        }
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self {
            layers,
            activation,
            head,
        })
    }

    /// Uniform fan-in initialisation, biases zero.
    pub fn init(sizes: &[usize], activation: Activation, head: Head, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(sizes, activation, head)?;
        let mut rng = seeded_rng(seed);
        let last = net.layers.len() - 1;
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let gain = if i < last && activation == Activation::Relu {
                6.0
            } else {
                3.0
            };
            let bound = (gain / layer.inputs as f64).sqrt();
            for w in layer.weights.iter_mut() {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    /// Weights then bias of each layer, in order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.num_params(), "parameter count mismatch");
        let mut at = 0;
        for l in &mut self.layers {
            let n = l.weights.len();
            l.weights.copy_from_slice(&params[at..at + n]);
            at += n;
            let n = l.bias.len();
            l.bias.copy_from_slice(&params[at..at + n]);
            at += n;
        }
    }

    pub(crate) fn forward_tape(&self, batch: Matrix) -> ForwardTape {
        let mut inputs = vec![batch];
        let last = self.layers.len() - 1;
        for layer in &self.layers[..last] {
            let mut h = layer.forward(inputs.last().expect("nonempty"));
            self.activation.apply_in_place(&mut h);
            inputs.push(h);
        }
        let logits = self.layers[last].forward(inputs.last().expect("nonempty"));
        let outputs = match self.head {
            Head::Softmax => softmax_rows(&logits),
            Head::Sigmoid => Matrix {
                rows: logits.rows,
                cols: logits.cols,
                data: logits.data.iter().map(|&z| sigmoid(z)).collect(),
            },
        };
        ForwardTape {
            inputs,
            logits,
            outputs,
        }
    }

    /// Head outputs for a batch of inputs.
    pub fn predict(&self, batch: &Matrix) -> Result<Matrix> {
        if batch.cols != self.input_width() {
            return Err(Error::Domain(format!(
                "input width {} does not match network input {}",
                batch.cols,
                self.input_width()
            )));
        }
        Ok(self.forward_tape(batch.clone()).outputs)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Prediction> {
        let out = self.predict(&Matrix::from_rows(&[x], x.len()))?;
        let values = out.row(0).to_vec();
        Ok(match self.head {
            Head::Softmax => Prediction::Probs(ProbVector::new(values)?),
            Head::Sigmoid => Prediction::Attributes(AttributeParam::new(values)?),
        })
    }

    /// Reverse pass from `∂L/∂logits`; returns one gradient layer per layer.
    pub(crate) fn backward(&self, tape: &ForwardTape, dlogits: Matrix) -> Vec<Dense> {
        let mut grads: Vec<Dense> = self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect();
        let mut delta = dlogits;
        for i in (0..self.layers.len()).rev() {
            let dx = self.layers[i].backward(&tape.inputs[i], &delta, &mut grads[i], i > 0);
            if let Some(mut dx) = dx {
                self.activation.backprop_in_place(&tape.inputs[i], &mut dx);
                delta = dx;
            }
        }
        grads
    }

    /// Flat little-endian encoding: magic, activation, head, layer sizes,
    /// then every weight and bias as `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(match self.activation {
            Activation::Relu => 0,
            Activation::Tanh => 1,
        });
        out.push(match self.head {
            Head::Softmax => 0,
            Head::Sigmoid => 1,
        });
        let sizes = self.sizes();
        out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
        for s in sizes {
            out.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Config(format!("invalid network file: {m}"));
        if bytes.len() < 14 || &bytes[..8] != MAGIC {
            return Err(bad("bad magic"));
        }
        let activation = match bytes[8] {
            0 => Activation::Relu,
            1 => Activation::Tanh,
            _ => return Err(bad("unknown activation")),
        };
        let head = match bytes[9] {
            0 => Head::Softmax,
            1 => Head::Sigmoid,
            _ => return Err(bad("unknown head")),
        };
        let n = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
        let mut at = 14;
        let mut sizes = Vec::with_capacity(n);
        for _ in 0..n {
            let chunk = bytes.get(at..at + 8).ok_or_else(|| bad("truncated header"))?;
            sizes.push(u64::from_le_bytes(chunk.try_into().expect("8 bytes")) as usize);
            at += 8;
        }
        let mut net = Self::zeros(&sizes, activation, head)?;
        let count = net.num_params();
        if bytes.len() != at + 8 * count {
            return Err(bad("parameter block has the wrong length"));
        }
        let params: Vec<f64> = bytes[at..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        net.set_params(&params);
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_network_outputs() {
        let net = Network::zeros(&[3, 5, 4], Activation::Relu, Head::Softmax).unwrap();
        match net.forward(&[1.0, -2.0, 0.5]).unwrap() {
            Prediction::Probs(p) => assert_eq!(p.as_slice(), &[0.25; 4]),
            other => panic!("unexpected {other:?}"),
        }
        let net = Network::zeros(&[3, 5, 4], Activation::Tanh, Head::Sigmoid).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap().as_slice(), &[0.5; 4]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Network::zeros(&[3], Activation::Relu, Head::Softmax).is_err());
        assert!(Network::zeros(&[3, 1], Activation::Relu, Head::Softmax).is_err());
        let net = Network::zeros(&[3, 2], Activation::Relu, Head::Softmax).unwrap();
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn byte_round_trip() {
        let net = Network::init(&[2, 7, 3], Activation::Tanh, Head::Sigmoid, 5).unwrap();
        let back = Network::from_bytes(&net.to_bytes()).unwrap();
        assert_eq!(net, back);
        let mut bytes = net.to_bytes();
        bytes.pop();
        assert!(Network::from_bytes(&bytes).is_err());
        assert!(Network::from_bytes(b"nonsense-bytes").is_err());
    }

    #[test]
    fn init_is_seeded() {
        let a = Network::init(&[2, 8, 3], Activation::Relu, Head::Softmax, 1).unwrap();
        let b = Network::init(&[2, 8, 3], Activation::Relu, Head::Softmax, 1).unwrap();
        let c = Network::init(&[2, 8, 3], Activation::Relu, Head::Softmax, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn heads_respect_their_invariants(
            seed in 0u64..1000,
            x in proptest::collection::vec(-50.0f64..50.0, 3),
            scale in 0.1f64..20.0,
        ) {
            for head in [Head::Softmax, Head::Sigmoid] {
                let mut net = Network::init(&[3, 6, 6, 4], Activation::Relu, head, seed).unwrap();
                let p: Vec<f64> = net.params().iter().map(|w| w * scale).collect();
                net.set_params(&p);
                let out = net.forward(&x).unwrap();
                let v = out.as_slice();
                prop_assert!(v.iter().all(|t| (0.0..=1.0).contains(t)));
                if head == Head::Softmax {
                    prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
