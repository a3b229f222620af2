use crate::error::{Error, Result};
use crate::numeric::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    /// Normalizes along the last axis.
    Softmax,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax of one vector, written into `out`.
pub fn softmax_into(x: &[f64], out: &mut [f64]) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = (v - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    softmax_into(x, &mut out);
    out
}

/// Applies `kind` elementwise, or per last-axis vector for softmax.
pub fn activation(kind: Activation, x: &Tensor) -> Result<Tensor> {
    match kind {
        Activation::Sigmoid => Ok(x.map(sigmoid)),
        Activation::Tanh => Ok(x.map(f64::tanh)),
        Activation::Softmax => {
            if x.rank() > 2 {
                return Err(Error::invalid(
                    "softmax expects a vector or a batch of vectors",
                ));
            }
            let width = *x.shape().last().unwrap();
            let mut out = x.clone();
            for (src, dst) in x.data().chunks_exact(width).zip(out.data_mut().chunks_exact_mut(width)) {
                softmax_into(src, dst);
            }
            Ok(out)
        }
    }
}

/// Vector-Jacobian product of the activation, given its output `y`.
pub(crate) fn activation_backward(kind: Activation, y: &[f64], grad_y: &[f64]) -> Vec<f64> {
    match kind {
        Activation::Sigmoid => y.iter().zip(grad_y).map(|(y, g)| g * y * (1.0 - y)).collect(),
        Activation::Tanh => y.iter().zip(grad_y).map(|(y, g)| g * (1.0 - y * y)).collect(),
        Activation::Softmax => {
            let inner: f64 = y.iter().zip(grad_y).map(|(y, g)| y * g).sum();
            y.iter().zip(grad_y).map(|(y, g)| y * (g - inner)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(0.0f64.tanh(), 0.0);
        let s = softmax(&[0.0, 0.0, 0.0]);
        for v in s {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_extremes_are_finite() {
        assert_eq!(sigmoid(-1e6), 0.0);
        assert_eq!(sigmoid(1e6), 1.0);
        assert!(sigmoid(-800.0).is_finite());
    }

    #[test]
    fn softmax_batch_rows() {
        let x = Tensor::from_rows(&[vec![1.0, 1.0], vec![1000.0, 0.0]]).unwrap();
        let y = activation(Activation::Softmax, &x).unwrap();
        assert_eq!(y.row(0), &[0.5, 0.5]);
        assert!((y.row(1)[0] - 1.0).abs() < 1e-12);
        assert!(y.is_finite());
    }
}
