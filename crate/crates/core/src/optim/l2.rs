use crate::error::{Error, Result};
use crate::numeric::Tensor;

/// `λ Σ ‖W‖²` over `kernels`; adds `2λW` into the matching gradient.
pub fn l2_penalty(kernels: &[&Tensor], lambda: f64, grads: &mut [&mut Tensor]) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("L2 strength must be non-negative, got {lambda}")));
    }
    if kernels.len() != grads.len() {
        return Err(Error::invalid("kernel and gradient lists differ in length"));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let mut penalty = 0.0;
    for (w, g) in kernels.iter().zip(grads.iter_mut()) {
        penalty += w.sum_squares();
        g.axpy(2.0 * lambda, w)?;
    }
    Ok(lambda * penalty)
}
