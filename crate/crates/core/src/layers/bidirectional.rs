use crate::error::{Error, Result};
use crate::layers::{NamedParam, Parameterized, RecurrentCell};
use crate::numeric::Tensor;

/// Two cells, one reading the sequence forward and one reading it reversed.
/// Output row `t` is `[forward_t | backward_t]` with the backward half
/// re-aligned to the original time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Bidirectional<C> {
    pub forward: C,
    pub backward: C,
}

#[derive(Debug, Clone)]
pub struct BiTrace<T> {
    forward: T,
    backward: T,
}

impl<C: RecurrentCell> Bidirectional<C> {
    pub fn new(forward: C, backward: C) -> Result<Self> {
        if forward.input_size() != backward.input_size() {
            return Err(Error::DimensionMismatch {
                op: "bidirectional",
                left: vec![forward.input_size()],
                right: vec![backward.input_size()],
            });
        }
        Ok(Bidirectional { forward, backward })
    }

    pub fn output_size(&self) -> usize {
        self.forward.hidden_size() + self.backward.hidden_size()
    }

    pub fn input_size(&self) -> usize {
        self.forward.input_size()
    }

    pub fn run(&self, xs: &Tensor) -> Result<(Tensor, BiTrace<C::SeqTrace>)> {
        let (fwd, fwd_trace) = self.forward.forward_seq(xs)?;
        let (bwd, bwd_trace) = self.backward.forward_seq(&xs.reversed_rows())?;
        let out = fwd.hcat(&bwd.reversed_rows())?;
        Ok((
            out,
            BiTrace {
                forward: fwd_trace,
                backward: bwd_trace,
            },
        ))
    }

    pub fn backward(
        &self,
        trace: &BiTrace<C::SeqTrace>,
        grad_out: &Tensor,
        grads: &mut Self,
    ) -> Result<Tensor> {
        let (g_fwd, g_bwd) = grad_out.hsplit(self.forward.hidden_size())?;
        let mut dx = self.forward.backward_seq(&trace.forward, &g_fwd, &mut grads.forward)?;
        let dx_rev = self
            .backward
            .backward_seq(&trace.backward, &g_bwd.reversed_rows(), &mut grads.backward)?;
        dx.add_assign(&dx_rev.reversed_rows())?;
        Ok(dx)
    }

    pub fn zeros_like(&self) -> Self {
        Bidirectional {
            forward: self.forward.zeros_like(),
            backward: self.backward.zeros_like(),
        }
    }
}

impl<C: RecurrentCell> Parameterized for Bidirectional<C> {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        let mut out: Vec<_> = self
            .forward
            .named_params()
            .into_iter()
            .map(|p| p.prefixed("fwd"))
            .collect();
        out.extend(self.backward.named_params().into_iter().map(|p| p.prefixed("bwd")));
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.forward.params_mut();
        out.extend(self.backward.params_mut());
        out
    }
}

/// Runs a bidirectional pass over a list of step vectors.
pub fn bidirectional_run<C: RecurrentCell>(
    forward: &C,
    backward: &C,
    seq: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    if seq.is_empty() {
        return Err(Error::invalid("bidirectional run over an empty sequence"));
    }
    let xs = Tensor::from_rows(seq)?;
    let layer = Bidirectional::new(forward.clone(), backward.clone())?;
    let (out, _) = layer.run(&xs)?;
    Ok((0..out.rows()).map(|t| out.row(t).to_vec()).collect())
}
