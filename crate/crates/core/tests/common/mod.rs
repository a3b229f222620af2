#![allow(dead_code)]

pub mod gradcheck;
pub mod pipeline;

use tweetnet::numeric::{RngStream, Tensor};

pub fn random_tensor(shape: &[usize], scale: f64, rng: &mut RngStream) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.uniform(-scale, scale)).collect()).unwrap()
}

pub fn random_vec(n: usize, scale: f64, rng: &mut RngStream) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-scale, scale)).collect()
}

/// Inclusive integer draw.
pub fn between(lo: usize, hi: usize, rng: &mut RngStream) -> usize {
    lo + rng.below(hi - lo + 1)
}
