use crate::error::{Error, Result};
use crate::layers::Phase;
use crate::numeric::{RngStream, Tensor};

/// Realized additive noise; `None` when the layer was inert.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    eps: Option<Vec<f64>>,
}

impl NoiseDraw {
    pub fn apply(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        if let Some(eps) = &self.eps {
            for (v, e) in out.data_mut().iter_mut().zip(eps) {
                *v += e;
            }
        }
        out
    }
}

/// Adds N(0, stddev²) noise in training; identity in evaluation.
/// Its backward pass is the identity.
pub fn gaussian_noise(x: &Tensor, stddev: f64, phase: Phase, rng: &mut RngStream) -> Result<(Tensor, NoiseDraw)> {
    if !(stddev >= 0.0) || !stddev.is_finite() {
        return Err(Error::invalid(format!("noise stddev must be non-negative, got {stddev}")));
    }
    let draw = if phase == Phase::Eval || stddev == 0.0 {
        NoiseDraw { eps: None }
    } else {
        NoiseDraw {
            eps: Some((0..x.len()).map(|_| rng.normal(0.0, stddev)).collect()),
        }
    };
    Ok((draw.apply(x), draw))
}

/// Per-element survivor scale: 0 for dropped units, 1/(1-rate) otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    scale: Option<Vec<f64>>,
}

impl DropoutMask {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.scale {
            None => x.to_vec(),
            Some(s) => x.iter().zip(s).map(|(v, k)| v * k).collect(),
        }
    }

    pub fn backward(&self, grad: &[f64]) -> Vec<f64> {
        self.apply(grad)
    }
}

/// Inverted dropout.
pub fn dropout(x: &[f64], rate: f64, phase: Phase, rng: &mut RngStream) -> Result<(Vec<f64>, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    let mask = if phase == Phase::Eval || rate == 0.0 {
        DropoutMask { scale: None }
    } else {
        let keep = 1.0 / (1.0 - rate);
        DropoutMask {
            scale: Some(
                (0..x.len())
                    .map(|_| if rng.bernoulli(rate) { 0.0 } else { keep })
                    .collect(),
            ),
        }
    };
    Ok((mask.apply(x), mask))
}
