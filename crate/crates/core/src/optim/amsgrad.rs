use crate::error::{Error, Result};
use crate::numeric::Tensor;

/// First-order update rules. Moment buffers are created lazily on the
/// first step and mirror the parameter shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// Adam with a running maximum of the second moment and no bias
    /// correction.
    Amsgrad,
    /// Plain bias-corrected Adam.
    Adam,
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    v_hat: Vec<Tensor>,
}

/// Alias matching the optimizer state the KEIS models train with.
pub type AmsgradState = Optimizer;

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Optimizer {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
            v_hat: Vec::new(),
        }
    }

    pub fn amsgrad(lr: f64) -> Self {
        Self::new(OptimizerKind::Amsgrad, lr)
    }

    pub fn adam(lr: f64) -> Self {
        Self::new(OptimizerKind::Adam, lr)
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Running maxima of the second moment (empty before the first step).
    pub fn v_hat(&self) -> &[Tensor] {
        &self.v_hat
    }

    pub fn update(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::invalid(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(Error::DimensionMismatch {
                    op: "optimizer step",
                    left: p.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| g.zeros_like()).collect();
            self.v = grads.iter().map(|g| g.zeros_like()).collect();
            if self.kind == OptimizerKind::Amsgrad {
                self.v_hat = grads.iter().map(|g| g.zeros_like()).collect();
            }
        } else if self.m.len() != grads.len() || self.m.iter().zip(grads).any(|(m, g)| m.shape() != g.shape()) {
            return Err(Error::invalid("parameter set changed between optimizer steps"));
        }
        self.step += 1;
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        let t = self.step as i32;
        let (c1, c2) = (1.0 - b1.powi(t), 1.0 - b2.powi(t));
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            match self.kind {
                OptimizerKind::Amsgrad => {
                    let vh = self.v_hat[i].data_mut();
                    for (j, (theta, &gj)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                        m[j] = b1 * m[j] + (1.0 - b1) * gj;
                        v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                        vh[j] = vh[j].max(v[j]);
                        *theta -= lr * m[j] / (vh[j].sqrt() + eps);
                    }
                }
                OptimizerKind::Adam => {
                    for (j, (theta, &gj)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                        m[j] = b1 * m[j] + (1.0 - b1) * gj;
                        v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                        *theta -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

/// One AMSGrad update of `params` in place.
pub fn amsgrad_step(state: &mut Optimizer, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
    state.update(params, grads)
}
