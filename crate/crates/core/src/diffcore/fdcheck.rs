use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Compares analytic gradients against central finite differences.
///
/// `f` maps a parameter set to `(value, gradients)`, with one gradient tensor
/// per parameter tensor. Returns the largest
/// `|analytic - numeric| / max(1, |analytic|)` over every coordinate.
pub fn finite_difference_check<F>(mut f: F, params: &[Tensor], step: f64) -> Result<f64>
where
    F: FnMut(&[Tensor]) -> Result<(f64, Vec<Tensor>)>,
{
    if !(step > 0.0) {
        return Err(Error::contract(format!("finite-difference step must be positive, got {step}")));
    }
    let (v1, analytic) = f(params)?;
    let (v2, _) = f(params)?;
    if v1.to_bits() != v2.to_bits() {
        return Err(Error::contract(format!(
            "function is not deterministic: {v1} then {v2}"
        )));
    }
    if analytic.len() != params.len() {
        return Err(Error::contract(format!(
            "{} gradients for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    for (g, p) in analytic.iter().zip(params) {
        if g.shape() != p.shape() {
            return Err(Error::Shape {
                op: "finite_difference_check",
                lhs: p.shape().to_vec(),
                rhs: g.shape().to_vec(),
            });
        }
    }

    let mut work = params.to_vec();
    let mut worst = 0.0_f64;
    for t in 0..params.len() {
        for i in 0..params[t].len() {
            let orig = params[t].data()[i];
            work[t].data_mut()[i] = orig + step;
            let (plus, _) = f(&work)?;
            work[t].data_mut()[i] = orig - step;
            let (minus, _) = f(&work)?;
            work[t].data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[t].data()[i];
            let err = (a - numeric).abs() / a.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
