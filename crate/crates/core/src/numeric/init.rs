use crate::error::{Error, Result};
use crate::numeric::{RngStream, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    GlorotUniform,
    /// Gaussian draws, resampled while they fall beyond two standard
    /// deviations of the mean.
    TruncatedNormal { mean: f64, stddev: f64 },
    Zeros,
}

/// Fan-in and fan-out for the layouts used here: `[n]`, `[out × in]`, and
/// convolution filters `[height × width × filters]`.
pub fn fans(shape: &[usize]) -> (usize, usize) {
    match shape {
        [n] => (*n, *n),
        [out, inp] => (*inp, *out),
        [h, w, f] => (h * w, h * w * f),
        other => {
            let n: usize = other.iter().product();
            (n, n)
        }
    }
}

pub fn init_params(scheme: Init, shape: &[usize], rng: &mut RngStream) -> Result<Tensor> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::invalid(format!("bad parameter shape {shape:?}")));
    }
    let n: usize = shape.iter().product();
    let values = match scheme {
        Init::Zeros => vec![0.0; n],
        Init::GlorotUniform => {
            let (fan_in, fan_out) = fans(shape);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..n).map(|_| rng.uniform(-limit, limit)).collect()
        }
        Init::TruncatedNormal { mean, stddev } => {
            if !(stddev > 0.0) || !stddev.is_finite() || !mean.is_finite() {
                return Err(Error::invalid(format!(
                    "truncated normal needs a positive finite stddev, got {stddev}"
                )));
            }
            (0..n)
                .map(|_| loop {
                    let z = rng.standard_normal();
                    if z.abs() <= 2.0 {
                        break mean + stddev * z;
                    }
                })
                .collect()
        }
    };
    Tensor::new(shape.to_vec(), values)
}
