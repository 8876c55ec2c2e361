use serde::{Deserialize, Serialize};

use crate::diffcore::{DeterministicRng, NodeId, Tape, Tensor, LEAKY_SLOPE};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HiddenActivation {
    LeakyRelu,
    Tanh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputActivation {
    Sigmoid,
    Identity,
    Tanh,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub hidden: HiddenActivation,
    pub output: OutputActivation,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, hidden: HiddenActivation, output: OutputActivation) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!(
                "an MLP needs at least two positive layer widths, got {widths:?}"
            )));
        }
        Ok(Self {
            widths,
            hidden,
            output,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `[fan_in, fan_out]`
    pub weight: Tensor,
    /// `[fan_out]`
    pub bias: Tensor,
}

/// Fully connected network; parameters are owned plain tensors and are put on
/// a tape fresh for every forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Layer>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: MlpSpec, rng: &mut DeterministicRng) -> Self {
        let layers = spec
            .widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut weight = Tensor::zeros(&[fan_in, fan_out]);
                for v in weight.data_mut() {
                    *v = rng.uniform_range(-limit, limit);
                }
                Layer {
                    weight,
                    bias: Tensor::zeros(&[fan_out]),
                }
            })
            .collect();
        Self { spec, layers }
    }

    pub fn zeros(spec: MlpSpec) -> Self {
        let layers = spec
            .widths
            .windows(2)
            .map(|w| Layer {
                weight: Tensor::zeros(&[w[0], w[1]]),
                bias: Tensor::zeros(&[w[1]]),
            })
            .collect();
        Self { spec, layers }
    }

    pub fn from_layers(spec: MlpSpec, layers: Vec<Layer>) -> Result<Self> {
        if layers.len() + 1 != spec.widths.len() {
            return Err(Error::contract("layer count does not match spec"));
        }
        for (layer, w) in layers.iter().zip(spec.widths.windows(2)) {
            if layer.weight.shape() != [w[0], w[1]] || layer.bias.shape() != [w[1]] {
                return Err(Error::Shape {
                    op: "mlp_layer",
                    lhs: vec![w[0], w[1]],
                    rhs: layer.weight.shape().to_vec(),
                });
            }
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Parameters in `w0, b0, w1, b1, ...` order.
    pub fn params(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    pub fn param_tensors(&self) -> usize {
        self.layers.len() * 2
    }

    /// Records the forward pass. Returns the output node and, when
    /// `trainable`, the parameter leaves in [`Mlp::params`] order.
    pub fn forward(&self, tape: &mut Tape, x: NodeId, trainable: bool) -> Result<(NodeId, Vec<NodeId>)> {
        let width = tape.value(x).cols();
        if tape.value(x).shape().len() != 2 || width != self.spec.input_dim() {
            return Err(Error::Shape {
                op: "mlp_forward",
                lhs: vec![self.spec.input_dim()],
                rhs: tape.value(x).shape().to_vec(),
            });
        }
        let mut params = Vec::new();
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let (w, b) = if trainable {
                let w = tape.param(layer.weight.clone());
                let b = tape.param(layer.bias.clone());
                params.push(w);
                params.push(b);
                (w, b)
            } else {
                (tape.constant(layer.weight.clone()), tape.constant(layer.bias.clone()))
            };
            let z = tape.matmul(h, w)?;
            let z = tape.add_bias(z, b)?;
            h = if i < last {
                match self.spec.hidden {
                    HiddenActivation::LeakyRelu => tape.leaky_relu(z, LEAKY_SLOPE)?,
                    HiddenActivation::Tanh => tape.tanh(z)?,
                }
            } else {
                match self.spec.output {
                    OutputActivation::Sigmoid => tape.sigmoid(z)?,
                    OutputActivation::Identity => z,
                    OutputActivation::Tanh => tape.tanh(z)?,
                }
            };
        }
        Ok((h, params))
    }
}
