use crate::math;
use crate::{Error, Result};

fn check(pred: &[f64], reference: &[f64]) -> Result<()> {
    if pred.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyBatch("metric inputs"));
    }
    Ok(())
}

/// `||pred - ref||_2 / ||ref||_2`.
pub fn relative_l2(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check(pred, reference)?;
    let num: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(Error::DivisionByZero("relative L2 of an all-zero reference"));
    }
    Ok(math::sqrt(num / den))
}

/// Mean squared error.
pub fn mse(pred: &[f64], reference: &[f64]) -> Result<f64> {
    check(pred, reference)?;
    let s: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    Ok(s / pred.len() as f64)
}

/// Copy of `v` with its mean removed.
pub fn demean(v: &[f64]) -> alloc::vec::Vec<f64> {
    let m = if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    v.iter().map(|x| x - m).collect()
}
