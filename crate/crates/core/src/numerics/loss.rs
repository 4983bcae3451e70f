use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Lower bound applied to every logarithm argument.
pub const BCE_EPS: f64 = 1e-7;

/// Mean binary cross-entropy `-(y ln p + (1-y) ln(1-p))` over all elements,
/// with the gradient with respect to `p`.
///
/// Each log argument is floored at [`BCE_EPS`], so a perfect prediction costs
/// exactly zero while a fully wrong one costs `-ln(BCE_EPS)` rather than
/// infinity. The gradient is taken on the floored values.
pub fn bce_loss<T: Scalar>(p: &Tensor<T>, y: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    p.expect_shape("bce_loss", y.shape())?;
    let eps = T::from_f64_lossy(BCE_EPS);
    let n = T::from_usize(p.len()).unwrap();
    let mut total = T::zero();
    let mut grad = Vec::with_capacity(p.len());

    for (i, (&pi, &yi)) in p.data().iter().zip(y.data()).enumerate() {
        if yi != T::zero() && yi != T::one() {
            return Err(Error::Label(format!("target at {i} is {yi:?}, expected 0 or 1")));
        }
        if !pi.is_finite() {
            return Err(Error::Numeric(format!("probability at {i} is {pi:?}")));
        }
        if pi < T::zero() || pi > T::one() {
            return Err(Error::Input(format!("probability at {i} is {pi:?}, outside [0, 1]")));
        }
        let pos = pi.max(eps);
        let neg = (T::one() - pi).max(eps);
        let term = if yi == T::one() { -pos.ln() } else { -neg.ln() };
        total += term;
        let g = if yi == T::one() { -T::one() / pos } else { T::one() / neg };
        grad.push(g / n);
    }
    Ok((total / n, Tensor::new(p.shape().to_vec(), grad)?))
}
