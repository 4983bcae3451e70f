use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::fusion::EarlyFusion;
use super::network::ModelHandle;
use crate::dataset::{batch_iterator, BinaryLabel, DEFAULT_BATCH_SIZE};
use crate::error::{Error, Result};
use crate::numerics::{bce_loss, sgd_step, LayerMode, Parameter, RngState, Tensor};

/// SGD hyperparameters for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Hyper {
    pub fn fnn() -> Self {
        Self {
            lr: 0.01,
            epochs: 15,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 0,
        }
    }

    pub fn cnn() -> Self {
        Self { lr: 0.001, ..Self::fnn() }
    }

    pub fn dual_cnn() -> Self {
        Self { epochs: 8, ..Self::cnn() }
    }

    /// The fusion head is a small fully connected network and trains like the FNNs.
    pub fn fusion_head() -> Self {
        Self::fnn()
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Parameter(format!("learning rate {} must be positive", self.lr)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Parameter("epochs and batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Anything trainable by [`train_model`]: maps a list of input tensors to
/// `[B, 2]` probabilities.
pub trait Classifier {
    fn forward_batch(&mut self, inputs: &[Tensor], mode: LayerMode, rng: &mut RngState) -> Result<Tensor>;
    fn backward_batch(&mut self, grad: &Tensor) -> Result<()>;
    fn trainable_mut(&mut self) -> Vec<&mut Parameter>;
}

fn expect_inputs(inputs: &[Tensor], n: usize) -> Result<()> {
    if inputs.len() == n {
        Ok(())
    } else {
        Err(Error::Input(format!("model takes {n} input tensor(s), got {}", inputs.len())))
    }
}

impl Classifier for ModelHandle {
    fn forward_batch(&mut self, inputs: &[Tensor], mode: LayerMode, rng: &mut RngState) -> Result<Tensor> {
        expect_inputs(inputs, 1)?;
        self.forward(&inputs[0], mode, rng)
    }

    fn backward_batch(&mut self, grad: &Tensor) -> Result<()> {
        self.backward(grad).map(drop)
    }

    fn trainable_mut(&mut self) -> Vec<&mut Parameter> {
        self.parameters_mut()
    }
}

impl Classifier for EarlyFusion {
    fn forward_batch(&mut self, inputs: &[Tensor], mode: LayerMode, rng: &mut RngState) -> Result<Tensor> {
        expect_inputs(inputs, 2)?;
        self.forward(&inputs[0], &inputs[1], mode, rng)
    }

    fn backward_batch(&mut self, grad: &Tensor) -> Result<()> {
        self.backward(grad)
    }

    fn trainable_mut(&mut self) -> Vec<&mut Parameter> {
        EarlyFusion::trainable_mut(self)
    }
}

/// Random-access supply of labelled samples.
pub trait TrainingSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Batched inputs (one tensor per model input) and labels for `items`.
    fn fetch(&self, items: &[usize]) -> Result<(Vec<Tensor>, Vec<BinaryLabel>)>;
}

/// Samples held as whole tensors, one per model input, sharing a leading axis.
#[derive(Debug, Clone)]
pub struct InMemorySource {
    inputs: Vec<Tensor>,
    labels: Vec<BinaryLabel>,
}

impl InMemorySource {
    pub fn new(inputs: Vec<Tensor>, labels: Vec<BinaryLabel>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Input("a source needs at least one input tensor".into()));
        }
        for t in &inputs {
            if t.batch() != labels.len() {
                return Err(Error::Input(format!(
                    "input with {} rows does not match {} labels",
                    t.batch(),
                    labels.len()
                )));
            }
        }
        Ok(Self { inputs, labels })
    }

    pub fn inputs(&self) -> &[Tensor] {
        &self.inputs
    }

    pub fn labels(&self) -> &[BinaryLabel] {
        &self.labels
    }
}

impl TrainingSource for InMemorySource {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn fetch(&self, items: &[usize]) -> Result<(Vec<Tensor>, Vec<BinaryLabel>)> {
        let inputs = self
            .inputs
            .iter()
            .map(|t| t.select_rows(items))
            .collect::<Result<_>>()?;
        Ok((inputs, items.iter().map(|&i| self.labels[i]).collect()))
    }
}

/// `[B, 2]` one-hot targets.
pub fn one_hot_targets(labels: &[BinaryLabel]) -> Tensor {
    let data = labels.iter().flat_map(|l| l.one_hot()).collect();
    Tensor::new(vec![labels.len(), 2], data).expect("two entries per label")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    /// Sample-weighted mean BCE per epoch.
    pub epoch_losses: Vec<f64>,
    /// Size-one tail batches that were not stepped on.
    pub skipped_batches: usize,
}

impl TrainingHistory {
    /// Tab-separated `epoch  mean_loss` table with a header line.
    pub fn to_table(&self) -> String {
        let mut out = String::from("epoch\tmean_loss\n");
        for (i, l) in self.epoch_losses.iter().enumerate() {
            let _ = writeln!(out, "{}\t{l:.6}", i + 1);
        }
        out
    }
}

/// Shuffled mini-batch SGD on mean BCE against one-hot targets.
///
/// The generator seeded from `hyper.seed` drives both the shuffle and the
/// dropout masks, so a run is reproducible bit for bit. A trailing batch of a
/// single sample is skipped because batch norm cannot normalize it.
pub fn train_model<C, S>(model: &mut C, source: &S, hyper: &Hyper) -> Result<TrainingHistory>
where
    C: Classifier + ?Sized,
    S: TrainingSource + ?Sized,
{
    hyper.validate()?;
    if source.len() < 2 {
        return Err(Error::Protocol(format!(
            "training needs at least 2 samples, got {}",
            source.len()
        )));
    }
    let mut rng = RngState::new(hyper.seed);
    let items: Vec<usize> = (0..source.len()).collect();
    let mut history = TrainingHistory::default();
    for epoch in 0..hyper.epochs {
        let (mut total, mut seen) = (0.0f64, 0usize);
        for batch in batch_iterator(&items, hyper.batch_size, &mut rng, true)? {
            if batch.len() < 2 {
                history.skipped_batches += 1;
                continue;
            }
            let (inputs, labels) = source.fetch(&batch)?;
            let probs = model.forward_batch(&inputs, LayerMode::Train, &mut rng)?;
            let (loss, grad) = bce_loss(&probs, &one_hot_targets(&labels))?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("loss became {loss} in epoch {}", epoch + 1)));
            }
            model.backward_batch(&grad)?;
            sgd_step(&mut model.trainable_mut(), hyper.lr)?;
            total += f64::from(loss) * batch.len() as f64;
            seen += batch.len();
        }
        history.epoch_losses.push(total / seen as f64);
    }
    Ok(history)
}

/// Eval-mode probabilities for every sample of `source`, in order.
pub fn predict_proba<C, S>(model: &mut C, source: &S, batch_size: usize) -> Result<Tensor>
where
    C: Classifier + ?Sized,
    S: TrainingSource + ?Sized,
{
    if batch_size == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(source.len() * 2);
    let items: Vec<usize> = (0..source.len()).collect();
    let mut rng = RngState::new(0);
    for chunk in items.chunks(batch_size) {
        let (inputs, _) = source.fetch(chunk)?;
        rows.extend_from_slice(model.forward_batch(&inputs, LayerMode::Eval, &mut rng)?.data());
    }
    Tensor::new(vec![source.len(), 2], rows)
}
