use crate::error::{Error, Result};
use crate::layers::{NamedParam, ParamKind, Parameterized};
use crate::numeric::{activation_backward, init_params, matvec_acc, matvec_t_acc, sigmoid, softmax_into, Activation, Init, RngStream, Tensor};

/// Fully connected layer `act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `[out × in]`
    pub w: Tensor,
    pub b: Tensor,
    pub activation: Option<Activation>,
}

#[derive(Debug, Clone)]
pub struct DenseTrace {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dense {
    pub fn new(input: usize, output: usize, activation: Option<Activation>, init: Init, rng: &mut RngStream) -> Result<Self> {
        Ok(Dense {
            w: init_params(init, &[output, input], rng)?,
            b: Tensor::zeros(&[output]),
            activation,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Dense {
            w: self.w.zeros_like(),
            b: self.b.zeros_like(),
            activation: self.activation,
        }
    }

    pub fn input_size(&self) -> usize {
        self.w.cols()
    }

    pub fn output_size(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseTrace)> {
        let y = dense(x, &self.w, &self.b, self.activation)?;
        Ok((
            y.clone(),
            DenseTrace { x: x.to_vec(), y },
        ))
    }

    pub fn backward(&self, trace: &DenseTrace, grad_y: &[f64], grads: &mut Dense) -> Result<Vec<f64>> {
        if grad_y.len() != self.output_size() {
            return Err(Error::DimensionMismatch {
                op: "dense backward",
                left: vec![self.output_size()],
                right: vec![grad_y.len()],
            });
        }
        let d_a = match self.activation {
            Some(kind) => activation_backward(kind, &trace.y, grad_y),
            None => grad_y.to_vec(),
        };
        let cols = self.input_size();
        for (row, &g) in grads.w.data_mut().chunks_exact_mut(cols).zip(&d_a) {
            for (dst, &xv) in row.iter_mut().zip(&trace.x) {
                *dst += g * xv;
            }
        }
        for (dst, g) in grads.b.data_mut().iter_mut().zip(&d_a) {
            *dst += g;
        }
        let mut dx = vec![0.0; cols];
        matvec_t_acc(self.w.data(), cols, &d_a, &mut dx);
        Ok(dx)
    }
}

/// `act(W x + b)` for a single vector.
pub fn dense(x: &[f64], w: &Tensor, b: &Tensor, act: Option<Activation>) -> Result<Vec<f64>> {
    if w.rank() != 2 || w.cols() != x.len() || b.shape() != [w.rows()] {
        return Err(Error::DimensionMismatch {
            op: "dense",
            left: w.shape().to_vec(),
            right: vec![x.len()],
        });
    }
    let mut a = b.data().to_vec();
    matvec_acc(w.data(), w.cols(), x, &mut a);
    Ok(match act {
        None => a,
        Some(Activation::Sigmoid) => a.into_iter().map(sigmoid).collect(),
        Some(Activation::Tanh) => a.into_iter().map(f64::tanh).collect(),
        Some(Activation::Softmax) => {
            let mut out = vec![0.0; a.len()];
            softmax_into(&a, &mut out);
            out
        }
    })
}

impl Parameterized for Dense {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        vec![
            NamedParam::new("W", ParamKind::Kernel, &self.w),
            NamedParam::new("b", ParamKind::Bias, &self.b),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }
}
