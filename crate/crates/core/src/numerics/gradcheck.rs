//! Central finite-difference verification of analytic gradients.
//!
//! Runs in double precision. The generator is re-seeded before every forward
//! pass so dropout masks are identical across the perturbed evaluations.

use super::layers::{Layer, LayerMode, Parameter};
use super::{RngState, Tensor};
use crate::error::{Error, Result};

/// Magnitude below which gradient differences are compared absolutely.
pub const REL_ERR_FLOOR: f64 = 1e-5;

/// Anything with a forward/backward pass and trainable parameters.
pub trait Differentiable {
    fn forward(&mut self, x: &Tensor<f64>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<f64>>;
    fn backward(&mut self, grad: &Tensor<f64>) -> Result<Tensor<f64>>;
    fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>>;
}

impl Differentiable for Layer<f64> {
    fn forward(&mut self, x: &Tensor<f64>, mode: LayerMode, rng: &mut RngState) -> Result<Tensor<f64>> {
        Layer::forward(self, x, mode, rng)
    }

    fn backward(&mut self, grad: &Tensor<f64>) -> Result<Tensor<f64>> {
        Layer::backward(self, grad)
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
        Layer::parameters_mut(self)
    }
}

/// Scalar objective evaluated on the model output: `(loss, dloss/doutput)`.
pub type ScalarLoss<'a> = &'a dyn Fn(&Tensor<f64>) -> Result<(f64, Tensor<f64>)>;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub h: f64,
    pub tol: f64,
    pub mode: LayerMode,
    pub seed: u64,
    pub check_input: bool,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            h: 1e-5,
            tol: 1e-4,
            mode: LayerMode::Train,
            seed: 0,
            check_input: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradEntry {
    pub name: String,
    pub elements: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<GradEntry>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tol
    }

    pub fn worst(&self) -> Option<&GradEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

fn eval_loss<M: Differentiable + ?Sized>(
    model: &mut M,
    x: &Tensor<f64>,
    loss: ScalarLoss<'_>,
    cfg: &GradCheckConfig,
) -> Result<f64> {
    let out = model.forward(x, cfg.mode, &mut RngState::new(cfg.seed))?;
    let (l, _) = loss(&out)?;
    if !l.is_finite() {
        return Err(Error::Numeric(format!("loss evaluated to {l}")));
    }
    Ok(l)
}

/// Compares the analytic gradient of `loss(model(input))` against central
/// differences `(f(θ+h) - f(θ-h)) / 2h` for every parameter element and,
/// when `cfg.check_input` is set, every input element.
pub fn finite_diff_check<M: Differentiable + ?Sized>(
    model: &mut M,
    input: &Tensor<f64>,
    loss: ScalarLoss<'_>,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    for p in model.parameters_mut() {
        p.zero_grad();
    }
    let out = model.forward(input, cfg.mode, &mut RngState::new(cfg.seed))?;
    let (l, dout) = loss(&out)?;
    if !l.is_finite() {
        return Err(Error::Numeric(format!("loss evaluated to {l}")));
    }
    let dx = model.backward(&dout)?;
    let analytic: Vec<(String, Vec<f64>)> = model
        .parameters_mut()
        .into_iter()
        .map(|p| (p.name.clone(), p.grad.data().to_vec()))
        .collect();

    let mut entries = Vec::new();
    for (pi, (name, grads)) in analytic.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for (i, &a) in grads.iter().enumerate() {
            let orig = model.parameters_mut()[pi].value.data()[i];
            model.parameters_mut()[pi].value.data_mut()[i] = orig + cfg.h;
            let up = eval_loss(model, input, loss, cfg)?;
            model.parameters_mut()[pi].value.data_mut()[i] = orig - cfg.h;
            let down = eval_loss(model, input, loss, cfg)?;
            model.parameters_mut()[pi].value.data_mut()[i] = orig;
            worst = worst.max(relative_error(a, (up - down) / (2.0 * cfg.h)));
        }
        entries.push(GradEntry {
            name: name.clone(),
            elements: grads.len(),
            max_rel_error: worst,
        });
    }

    if cfg.check_input {
        let mut x = input.clone();
        let mut worst: f64 = 0.0;
        for i in 0..x.len() {
            let orig = x.data()[i];
            x.data_mut()[i] = orig + cfg.h;
            let up = eval_loss(model, &x, loss, cfg)?;
            x.data_mut()[i] = orig - cfg.h;
            let down = eval_loss(model, &x, loss, cfg)?;
            x.data_mut()[i] = orig;
            worst = worst.max(relative_error(dx.data()[i], (up - down) / (2.0 * cfg.h)));
        }
        entries.push(GradEntry {
            name: "input".into(),
            elements: x.len(),
            max_rel_error: worst,
        });
    }

    Ok(GradCheckReport {
        entries,
        tol: cfg.tol,
    })
}

/// Loss `Σ w ⊙ out` for a fixed random `w`; exercises every output element.
pub fn projection_loss(shape: &[usize], seed: u64) -> impl Fn(&Tensor<f64>) -> Result<(f64, Tensor<f64>)> {
    let mut rng = RngState::new(seed);
    let n = shape.iter().product();
    let w = Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect::<Vec<_>>())
        .expect("projection weights match shape");
    move |out: &Tensor<f64>| {
        out.expect_shape("projection_loss", w.shape())?;
        let l = out.data().iter().zip(w.data()).map(|(a, b)| a * b).sum();
        Ok((l, w.clone()))
    }
}

/// Layer compositions with a standard gradient check case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerFamily {
    Dense,
    Conv,
    BatchNorm,
    Residual,
    SigmoidBce,
}

impl LayerFamily {
    pub const ALL: [LayerFamily; 5] = [
        LayerFamily::Dense,
        LayerFamily::Conv,
        LayerFamily::BatchNorm,
        LayerFamily::Residual,
        LayerFamily::SigmoidBce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerFamily::Dense => "dense",
            LayerFamily::Conv => "conv",
            LayerFamily::BatchNorm => "batchnorm",
            LayerFamily::Residual => "residual block",
            LayerFamily::SigmoidBce => "sigmoid+bce",
        }
    }
}

fn random_tensor(shape: &[usize], rng: &mut RngState) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.normal()).collect()).expect("sized to shape")
}

fn jitter(p: &mut Parameter<f64>, base: f64, rng: &mut RngState) {
    for v in p.value.data_mut() {
        *v = base + 0.5 * rng.normal();
    }
}

/// Builds the `family` case from `seed` (weights, input and loss) and checks it.
/// Layers holding batch norm run in Train mode so batch statistics are
/// differentiated too.
pub fn check_layer_family(family: LayerFamily, seed: u64, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    use super::layers::{BatchNorm, Conv2d, Dense, Init, ResidualBlock, Sigmoid};
    use super::loss::bce_loss;

    let mut rng = RngState::new(seed);
    let cfg = GradCheckConfig { seed, ..*cfg };
    match family {
        LayerFamily::Dense => {
            let mut layer = Layer::Dense(Dense::new("fc", 5, 3, Init::He, &mut rng));
            let x = random_tensor(&[4, 5], &mut rng);
            finite_diff_check(&mut layer, &x, &projection_loss(&[4, 3], seed ^ 1), &cfg)
        }
        LayerFamily::Conv => {
            let mut layer = Layer::Conv2d(Conv2d::new("conv", 2, 3, 3, 2, 1, Init::He, &mut rng));
            for p in layer.parameters_mut() {
                jitter(p, 0.0, &mut rng);
            }
            let x = random_tensor(&[2, 2, 5, 5], &mut rng);
            finite_diff_check(&mut layer, &x, &projection_loss(&[2, 3, 3, 3], seed ^ 1), &cfg)
        }
        LayerFamily::BatchNorm => {
            let mut bn = BatchNorm::new("bn", 3);
            jitter(&mut bn.gamma, 1.0, &mut rng);
            jitter(&mut bn.beta, 0.0, &mut rng);
            let mut layer = Layer::BatchNorm(bn);
            let x = random_tensor(&[3, 3, 2, 2], &mut rng);
            finite_diff_check(&mut layer, &x, &projection_loss(&[3, 3, 2, 2], seed ^ 1), &cfg)
        }
        LayerFamily::Residual => {
            let mut layer = Layer::Residual(Box::new(ResidualBlock::basic("block", 2, 3, 2, &mut rng)));
            let x = random_tensor(&[2, 2, 4, 4], &mut rng);
            finite_diff_check(&mut layer, &x, &projection_loss(&[2, 3, 2, 2], seed ^ 1), &cfg)
        }
        LayerFamily::SigmoidBce => {
            struct DenseSigmoid(Dense<f64>, Sigmoid<f64>);
            impl Differentiable for DenseSigmoid {
                fn forward(&mut self, x: &Tensor<f64>, _: LayerMode, _: &mut RngState) -> Result<Tensor<f64>> {
                    let z = self.0.forward(x)?;
                    Ok(self.1.forward(&z))
                }
                fn backward(&mut self, grad: &Tensor<f64>) -> Result<Tensor<f64>> {
                    let g = self.1.backward(grad)?;
                    self.0.backward(&g)
                }
                fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
                    vec![&mut self.0.weight, &mut self.0.bias]
                }
            }
            let mut model = DenseSigmoid(Dense::new("fc", 4, 2, Init::Xavier, &mut rng), Sigmoid::new());
            let x = random_tensor(&[6, 4], &mut rng);
            let y = Tensor::new(vec![6, 2], (0..12).map(|_| (rng.uniform() < 0.5) as u8 as f64).collect())?;
            let loss = move |p: &Tensor<f64>| bce_loss(p, &y);
            finite_diff_check(&mut model, &x, &loss, &cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::layers::{Dense, Init, Sigmoid};
    use crate::numerics::loss::bce_loss;

    struct DenseSigmoid {
        dense: Dense<f64>,
        sigmoid: Sigmoid<f64>,
        corrupt: f64,
    }

    impl Differentiable for DenseSigmoid {
        fn forward(&mut self, x: &Tensor<f64>, _: LayerMode, _: &mut RngState) -> Result<Tensor<f64>> {
            let z = self.dense.forward(x)?;
            Ok(self.sigmoid.forward(&z))
        }

        fn backward(&mut self, grad: &Tensor<f64>) -> Result<Tensor<f64>> {
            let g = self.sigmoid.backward(grad)?;
            let dx = self.dense.backward(&g)?;
            for v in self.dense.weight.grad.data_mut() {
                *v *= self.corrupt;
            }
            Ok(dx)
        }

        fn parameters_mut(&mut self) -> Vec<&mut Parameter<f64>> {
            vec![&mut self.dense.weight, &mut self.dense.bias]
        }
    }

    fn setup(corrupt: f64) -> (DenseSigmoid, Tensor<f64>, Tensor<f64>) {
        let mut rng = RngState::new(11);
        let model = DenseSigmoid {
            dense: Dense::new("fc", 3, 2, Init::Xavier, &mut rng),
            sigmoid: Sigmoid::new(),
            corrupt,
        };
        let x = Tensor::new(vec![4, 3], (0..12).map(|_| rng.normal()).collect()).unwrap();
        let y = Tensor::new(vec![4, 2], (0..8).map(|i| (i % 3 == 0) as u8 as f64).collect()).unwrap();
        (model, x, y)
    }

    #[test]
    fn dense_sigmoid_bce_passes() {
        let (mut model, x, y) = setup(1.0);
        let loss = move |p: &Tensor<f64>| bce_loss(p, &y);
        let report = finite_diff_check(&mut model, &x, &loss, &GradCheckConfig::default()).unwrap();
        assert_eq!(report.entries.len(), 3);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn corrupted_gradient_fails() {
        let (mut model, x, y) = setup(1.1);
        let loss = move |p: &Tensor<f64>| bce_loss(p, &y);
        let report = finite_diff_check(&mut model, &x, &loss, &GradCheckConfig::default()).unwrap();
        assert!(!report.passed());
        assert_eq!(report.worst().unwrap().name, "fc.weight");
    }

    #[test]
    fn parameterless_model_reports_nothing() {
        let mut relu = Layer::<f64>::Relu(Default::default());
        let x = Tensor::from_vec(vec![0.5, -1.0]).reshape(&[1, 2]).unwrap();
        let loss = projection_loss(&[1, 2], 0);
        let cfg = GradCheckConfig {
            check_input: false,
            ..Default::default()
        };
        let report = finite_diff_check(&mut relu, &x, &loss, &cfg).unwrap();
        assert!(report.entries.is_empty());
        assert!(report.passed());
    }

    #[test]
    fn non_finite_loss_is_numeric_error() {
        let mut relu = Layer::<f64>::Relu(Default::default());
        let x = Tensor::from_vec(vec![0.5]).reshape(&[1, 1]).unwrap();
        let loss = |_: &Tensor<f64>| Ok((f64::NAN, Tensor::zeros(&[1, 1])));
        let err = finite_diff_check(&mut relu, &x, &loss, &GradCheckConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }
}
