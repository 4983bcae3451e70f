use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::archive::NamedTensors;
use crate::numerics::gradcheck::Differentiable;
use crate::numerics::{Layer, LayerMode, Parameter, RngState, Scalar, Tensor};

/// Named intermediate activation that can be exported as an embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingTap {
    pub name: String,
    /// Index of the layer whose output is the embedding.
    pub layer: usize,
    pub dim: usize,
}

/// Per-sample input a network accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputSpec {
    /// `[B, dim]`
    Features(usize),
    /// `[B, channels, H, W]`, any spatial size.
    Image { channels: usize },
}

/// A built feed-forward model: an ordered layer list plus its taps.
#[derive(Debug, Clone)]
pub struct ModelHandle<T: Scalar = f32> {
    layers: Vec<Layer<T>>,
    taps: Vec<EmbeddingTap>,
    input: InputSpec,
}

impl<T: Scalar> ModelHandle<T> {
    pub fn new(layers: Vec<Layer<T>>, taps: Vec<EmbeddingTap>, input: InputSpec) -> Result<Self> {
        let net = Self { layers, taps, input };
        let mut names = HashSet::new();
        for name in net
            .parameters()
            .iter()
            .map(|p| &p.name)
            .chain(net.layers.iter().flat_map(Layer::buffers).map(|b| &b.name))
        {
            if !names.insert(name.clone()) {
                return Err(Error::Config(format!("duplicate parameter name `{name}`")));
            }
        }
        for tap in &net.taps {
            if tap.layer >= net.layers.len() {
                return Err(Error::Config(format!("tap `{}` points past the last layer", tap.name)));
            }
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn taps(&self) -> &[EmbeddingTap] {
        &self.taps
    }

    pub fn input(&self) -> InputSpec {
        self.input
    }

    pub fn tap(&self, name: &str) -> Result<&EmbeddingTap> {
        self.taps
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Tap(name.to_owned()))
    }

    pub fn uses_rng(&self) -> bool {
        self.layers.iter().any(Layer::uses_rng)
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let ok = match self.input {
            InputSpec::Features(d) => x.rank() == 2 && x.shape()[1] == d,
            InputSpec::Image { channels } => x.rank() == 4 && x.shape()[1] == channels,
        };
        if ok {
            Ok(())
        } else {
            let expected = match self.input {
                InputSpec::Features(d) => vec![x.shape()[0], d],
                InputSpec::Image { channels } => vec![x.shape()[0], channels, 0, 0],
            };
            Err(Error::dim("network_input", x.shape(), &expected))
        }
    }

    /// Runs layers `0..=last`.
    pub fn forward_to(&mut self, x: &Tensor<T>, last: usize, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &mut self.layers[..=last] {
            h = layer.forward(&h, mode, rng)?;
        }
        Ok(h)
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<T>> {
        let last = self.layers.len() - 1;
        self.forward_to(x, last, mode, rng)
    }

    /// Eval-mode forward; never touches a generator.
    pub fn forward_eval(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward(x, LayerMode::Eval, &mut RngState::new(0))
    }

    /// Backpropagates through layers `last..=0`, returning the input gradient.
    pub fn backward_from(&mut self, last: usize, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = grad.clone();
        for layer in self.layers[..=last].iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let last = self.layers.len() - 1;
        self.backward_from(last, grad)
    }

    /// Eval-mode activation at `tap`.
    pub fn extract_embedding(&mut self, x: &Tensor<T>, tap: &str) -> Result<Tensor<T>> {
        let layer = self.tap(tap)?.layer;
        self.forward_to(x, layer, LayerMode::Eval, &mut RngState::new(0))
    }

    pub fn parameters(&self) -> Vec<&Parameter<T>> {
        self.layers.iter().flat_map(Layer::parameters).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<T>> {
        self.layers.iter_mut().flat_map(Layer::parameters_mut).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.value.len()).sum()
    }

    /// Every parameter followed by every buffer, in layer order.
    pub fn state_dict(&self) -> NamedTensors {
        let params = self.parameters().into_iter().map(|p| (p.name.clone(), p.value.cast()));
        let buffers = self
            .layers
            .iter()
            .flat_map(Layer::buffers)
            .map(|b| (b.name.clone(), b.value.cast()));
        params.chain(buffers).collect()
    }

    /// Replaces all parameters and buffers. Names and shapes must match exactly.
    pub fn load_state_dict(&mut self, entries: &NamedTensors) -> Result<()> {
        let mut by_name: HashMap<&str, &Tensor<f32>> = HashMap::new();
        for (n, t) in entries {
            if by_name.insert(n.as_str(), t).is_some() {
                return Err(Error::Archive(format!("entry `{n}` appears twice")));
            }
        }
        let mut used = 0;
        let mut assign = |name: &str, slot: &mut Tensor<T>| -> Result<()> {
            let t = by_name
                .get(name)
                .ok_or_else(|| Error::Archive(format!("missing entry `{name}`")))?;
            if t.shape() != slot.shape() {
                return Err(Error::Archive(format!(
                    "`{name}` has shape {:?}, model expects {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t.cast();
            used += 1;
            Ok(())
        };
        for layer in &mut self.layers {
            for p in layer.parameters_mut() {
                assign(&p.name, &mut p.value)?;
                p.zero_grad();
            }
            for b in layer.buffers_mut() {
                assign(&b.name, &mut b.value)?;
            }
        }
        if used != entries.len() {
            let known: HashSet<String> = self.state_dict().into_iter().map(|(n, _)| n).collect();
            let extra: Vec<&str> = entries
                .iter()
                .map(|(n, _)| n.as_str())
                .filter(|n| !known.contains(*n))
                .collect();
            return Err(Error::Archive(format!("unexpected entries: {}", extra.join(", "))));
        }
        Ok(())
    }
}

impl Differentiable for ModelHandle<f64> {
    fn forward(&mut self, x: &Tensor<f64>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<f64>> {
        ModelHandle::forward(self, x, mode, rng)
    }

    fn backward(&mut self, grad: &Tensor<f64>) -> Result<Tensor<f64>> {
        ModelHandle::backward(self, grad)
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
        ModelHandle::parameters_mut(self)
    }
}
