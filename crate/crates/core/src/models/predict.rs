use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

fn check_probs<T: Scalar>(op: &'static str, p: &Tensor<T>) -> Result<()> {
    if p.rank() != 2 || p.shape()[1] != 2 {
        return Err(Error::dim(op, p.shape(), &[p.shape()[0], 2]));
    }
    if let Some(v) = p.data().iter().find(|v| !(T::zero()..=T::one()).contains(*v)) {
        return Err(Error::Input(format!("{op}: probability {v:?} outside [0, 1]")));
    }
    Ok(())
}

fn argmax2<T: Scalar>(p0: T, p1: T) -> usize {
    usize::from(p1 > p0)
}

/// Per-row argmax of a `[B, 2]` probability tensor; ties go to class 0.
pub fn predict_class<T: Scalar>(probs: &Tensor<T>) -> Result<Vec<usize>> {
    check_probs("predict_class", probs)?;
    Ok((0..probs.batch())
        .map(|i| {
            let r = probs.row(i);
            argmax2(r[0], r[1])
        })
        .collect())
}

/// Averages two models' probabilities and takes the per-row argmax;
/// ties go to class 0.
pub fn late_fusion_predict<T: Scalar>(probs_a: &Tensor<T>, probs_b: &Tensor<T>) -> Result<Vec<usize>> {
    check_probs("late_fusion_predict", probs_a)?;
    check_probs("late_fusion_predict", probs_b)?;
    if probs_a.shape() != probs_b.shape() {
        return Err(Error::dim("late_fusion_predict", probs_a.shape(), probs_b.shape()));
    }
    let two = T::one() + T::one();
    Ok((0..probs_a.batch())
        .map(|i| {
            let (a, b) = (probs_a.row(i), probs_b.row(i));
            argmax2((a[0] + b[0]) / two, (a[1] + b[1]) / two)
        })
        .collect())
}
