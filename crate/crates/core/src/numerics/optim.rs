use super::{Parameter, Scalar};
use crate::error::{Error, Result};

/// Plain SGD: `value -= lr * grad`, then clear every gradient.
pub fn sgd_step<T: Scalar>(params: &mut [&mut Parameter<T>], lr: f64) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Parameter(format!("learning rate must be positive, got {lr}")));
    }
    let lr = T::from_f64_lossy(lr);
    for p in params.iter_mut() {
        let Parameter { value, grad, .. } = &mut **p;
        for (v, &g) in value.data_mut().iter_mut().zip(grad.data()) {
            *v -= lr * g;
        }
        p.zero_grad();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    fn param(v: f64, g: f64) -> Parameter<f64> {
        let mut p = Parameter::new("p", Tensor::from_vec(vec![v]));
        p.grad = Tensor::from_vec(vec![g]);
        p
    }

    #[test]
    fn single_step() {
        let mut p = param(1.0, 0.5);
        sgd_step(&mut [&mut p], 0.1).unwrap();
        assert!((p.value.data()[0] - 0.95).abs() < 1e-15);
        assert_eq!(p.grad.data()[0], 0.0);
    }

    #[test]
    fn zero_gradient_leaves_value() {
        let mut p = param(3.0, 0.0);
        sgd_step(&mut [&mut p], 0.5).unwrap();
        assert_eq!(p.value.data()[0], 3.0);
    }

    #[test]
    fn two_steps_are_linear() {
        let (lr, g) = (0.25, 0.5);
        let mut p = param(2.0, g);
        sgd_step(&mut [&mut p], lr).unwrap();
        p.grad = Tensor::from_vec(vec![g]);
        sgd_step(&mut [&mut p], lr).unwrap();
        assert_eq!(p.value.data()[0], 2.0 - 2.0 * lr * g);
    }

    #[test]
    fn non_positive_rate_is_rejected() {
        let mut p = param(1.0, 1.0);
        assert!(matches!(sgd_step(&mut [&mut p], 0.0), Err(Error::Parameter(_))));
        assert!(sgd_step(&mut [&mut p], -0.1).is_err());
        assert_eq!(p.value.data()[0], 1.0);
    }
}
