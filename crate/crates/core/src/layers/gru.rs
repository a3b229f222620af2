use crate::error::{Error, Result};
use crate::layers::{check_seq, NamedParam, ParamKind, Parameterized, RecurrentCell};
use crate::numeric::{gemm, init_params, matvec_acc, matvec_t_acc, sigmoid, Init, MatRef, RngStream, Tensor};

/// Gated recurrent unit with separate update, reset and candidate biases.
///
/// ```text
/// z_t = σ(W_z x_t + U_z h_{t-1} + b_z)
/// r_t = σ(W_r x_t + U_r h_{t-1} + b_r)
/// h̃_t = tanh(W_h x_t + r_t ⊙ (U_h h_{t-1}) + b_h)
/// h_t = (1 - z_t) ⊙ h_{t-1} + z_t ⊙ h̃_t
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    /// Input kernels, `[hidden × input]`.
    pub w_z: Tensor,
    pub w_r: Tensor,
    pub w_h: Tensor,
    /// Recurrent kernels, `[hidden × hidden]`.
    pub u_z: Tensor,
    pub u_r: Tensor,
    pub u_h: Tensor,
    pub b_z: Tensor,
    pub b_r: Tensor,
    pub b_h: Tensor,
}

/// Everything one step produced, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GruStepTrace {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub h_candidate: Vec<f64>,
    pub h: Vec<f64>,
}

/// Per-timestep gate values for a whole sequence, each `[len × hidden]`.
#[derive(Debug, Clone)]
pub struct GruSeqTrace {
    xs: Tensor,
    h_prev: Tensor,
    z: Tensor,
    r: Tensor,
    h_candidate: Tensor,
    /// `U_h h_{t-1}`, needed for the reset-gate gradient.
    uh: Tensor,
}

impl GruCell {
    pub fn new(input: usize, hidden: usize, rng: &mut RngStream) -> Result<Self> {
        let k = |rng: &mut RngStream, cols| init_params(Init::GlorotUniform, &[hidden, cols], rng);
        Ok(GruCell {
            w_z: k(rng, input)?,
            w_r: k(rng, input)?,
            w_h: k(rng, input)?,
            u_z: k(rng, hidden)?,
            u_r: k(rng, hidden)?,
            u_h: k(rng, hidden)?,
            b_z: Tensor::zeros(&[hidden]),
            b_r: Tensor::zeros(&[hidden]),
            b_h: Tensor::zeros(&[hidden]),
        })
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(&[hidden, input]);
        let u = || Tensor::zeros(&[hidden, hidden]);
        let b = || Tensor::zeros(&[hidden]);
        GruCell {
            w_z: w(),
            w_r: w(),
            w_h: w(),
            u_z: u(),
            u_r: u(),
            u_h: u(),
            b_z: b(),
            b_r: b(),
            b_h: b(),
        }
    }

    /// Rejects cells whose nine tensors disagree on (input, hidden).
    pub fn validate(&self) -> Result<()> {
        let (h, i) = (self.hidden_size(), self.input_size());
        let ok = [&self.w_z, &self.w_r, &self.w_h].iter().all(|w| w.shape() == [h, i])
            && [&self.u_z, &self.u_r, &self.u_h].iter().all(|u| u.shape() == [h, h])
            && [&self.b_z, &self.b_r, &self.b_h].iter().all(|b| b.shape() == [h]);
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("GRU cell tensors are not shape-consistent"))
        }
    }

    /// One step given precomputed input projections `W_* x`.
    fn step_projected(&self, xz: &[f64], xr: &[f64], xh: &[f64], h_prev: &[f64], out: StepOut<'_>) {
        let hidden = self.hidden_size();
        let StepOut { z, r, hc, uh, h } = out;
        z.copy_from_slice(xz);
        r.copy_from_slice(xr);
        uh.fill(0.0);
        matvec_acc(self.u_z.data(), hidden, h_prev, z);
        matvec_acc(self.u_r.data(), hidden, h_prev, r);
        matvec_acc(self.u_h.data(), hidden, h_prev, uh);
        for j in 0..hidden {
            z[j] = sigmoid(z[j] + self.b_z.data()[j]);
            r[j] = sigmoid(r[j] + self.b_r.data()[j]);
            hc[j] = (xh[j] + r[j] * uh[j] + self.b_h.data()[j]).tanh();
            h[j] = (1.0 - z[j]) * h_prev[j] + z[j] * hc[j];
        }
    }
}

struct StepOut<'a> {
    z: &'a mut [f64],
    r: &'a mut [f64],
    hc: &'a mut [f64],
    uh: &'a mut [f64],
    h: &'a mut [f64],
}

/// Single GRU step.
pub fn gru_step(cell: &GruCell, x: &[f64], h_prev: &[f64]) -> Result<GruStepTrace> {
    let (hidden, input) = (cell.hidden_size(), cell.input_size());
    if x.len() != input || h_prev.len() != hidden {
        return Err(Error::DimensionMismatch {
            op: "gru_step",
            left: vec![input, hidden],
            right: vec![x.len(), h_prev.len()],
        });
    }
    let proj = |w: &Tensor| {
        let mut out = vec![0.0; hidden];
        matvec_acc(w.data(), input, x, &mut out);
        out
    };
    let (xz, xr, xh) = (proj(&cell.w_z), proj(&cell.w_r), proj(&cell.w_h));
    let mut z = vec![0.0; hidden];
    let mut r = vec![0.0; hidden];
    let mut hc = vec![0.0; hidden];
    let mut uh = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    cell.step_projected(
        &xz,
        &xr,
        &xh,
        h_prev,
        StepOut {
            z: &mut z,
            r: &mut r,
            hc: &mut hc,
            uh: &mut uh,
            h: &mut h,
        },
    );
    Ok(GruStepTrace {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        z,
        r,
        h_candidate: hc,
        h,
    })
}

/// `xs · Wᵀ` for every kernel in one product each: `[len × hidden]`.
pub(crate) fn project(xs: &Tensor, w: &Tensor) -> Tensor {
    let (len, input) = (xs.rows(), xs.cols());
    let hidden = w.rows();
    let mut out = Tensor::zeros(&[len, hidden]);
    gemm(
        len,
        input,
        hidden,
        MatRef::row_major(xs.data(), input),
        MatRef::transposed(w.data(), input),
        out.data_mut(),
        false,
    );
    out
}

/// `grad_w += dAᵀ · inputs` where `dA` is `[len × hidden]`, `inputs` `[len × cols]`.
pub(crate) fn accumulate_outer(grad_w: &mut Tensor, d_a: &Tensor, inputs: &Tensor) {
    let (len, hidden, cols) = (d_a.rows(), d_a.cols(), inputs.cols());
    gemm(
        hidden,
        len,
        cols,
        MatRef::transposed(d_a.data(), hidden),
        MatRef::row_major(inputs.data(), cols),
        grad_w.data_mut(),
        true,
    );
}

/// `grad_x += dA · W` where `W` is `[hidden × input]`.
pub(crate) fn accumulate_input_grad(grad_x: &mut Tensor, d_a: &Tensor, w: &Tensor) {
    let (len, hidden, input) = (d_a.rows(), d_a.cols(), w.cols());
    gemm(
        len,
        hidden,
        input,
        MatRef::row_major(d_a.data(), hidden),
        MatRef::row_major(w.data(), input),
        grad_x.data_mut(),
        true,
    );
}

impl RecurrentCell for GruCell {
    type SeqTrace = GruSeqTrace;

    fn input_size(&self) -> usize {
        self.w_z.cols()
    }

    fn hidden_size(&self) -> usize {
        self.w_z.rows()
    }

    fn forward_seq(&self, xs: &Tensor) -> Result<(Tensor, GruSeqTrace)> {
        check_seq("gru", xs, self.input_size())?;
        let (len, hidden) = (xs.rows(), self.hidden_size());
        let xz = project(xs, &self.w_z);
        let xr = project(xs, &self.w_r);
        let xh = project(xs, &self.w_h);
        let mut hs = Tensor::zeros(&[len, hidden]);
        let mut h_prev = Tensor::zeros(&[len, hidden]);
        let mut z = Tensor::zeros(&[len, hidden]);
        let mut r = Tensor::zeros(&[len, hidden]);
        let mut hc = Tensor::zeros(&[len, hidden]);
        let mut uh = Tensor::zeros(&[len, hidden]);
        let mut h = vec![0.0; hidden];
        for t in 0..len {
            h_prev.row_mut(t).copy_from_slice(&h);
            self.step_projected(
                xz.row(t),
                xr.row(t),
                xh.row(t),
                h_prev.row(t),
                StepOut {
                    z: z.row_mut(t),
                    r: r.row_mut(t),
                    hc: hc.row_mut(t),
                    uh: uh.row_mut(t),
                    h: hs.row_mut(t),
                },
            );
            h.copy_from_slice(hs.row(t));
        }
        let trace = GruSeqTrace {
            xs: xs.clone(),
            h_prev,
            z,
            r,
            h_candidate: hc,
            uh,
        };
        Ok((hs, trace))
    }

    fn backward_seq(&self, trace: &GruSeqTrace, grad_hs: &Tensor, grads: &mut GruCell) -> Result<Tensor> {
        let (len, hidden) = (trace.z.rows(), self.hidden_size());
        if grad_hs.shape() != [len, hidden] {
            return Err(Error::DimensionMismatch {
                op: "gru backward",
                left: vec![len, hidden],
                right: grad_hs.shape().to_vec(),
            });
        }
        let mut d_az = Tensor::zeros(&[len, hidden]);
        let mut d_ar = Tensor::zeros(&[len, hidden]);
        let mut d_ah = Tensor::zeros(&[len, hidden]);
        // gradient reaching U_h h_{t-1}: dA_h ⊙ r
        let mut d_uh = Tensor::zeros(&[len, hidden]);
        let mut dh_next = vec![0.0; hidden];
        let mut dh_prev = vec![0.0; hidden];
        for t in (0..len).rev() {
            let (z, r, hc, uh, hp) = (
                trace.z.row(t),
                trace.r.row(t),
                trace.h_candidate.row(t),
                trace.uh.row(t),
                trace.h_prev.row(t),
            );
            let g = grad_hs.row(t);
            for j in 0..hidden {
                let dh = g[j] + dh_next[j];
                let dz = dh * (hc[j] - hp[j]);
                let dhc = dh * z[j];
                let dah = dhc * (1.0 - hc[j] * hc[j]);
                let dr = dah * uh[j];
                d_az.row_mut(t)[j] = dz * z[j] * (1.0 - z[j]);
                d_ar.row_mut(t)[j] = dr * r[j] * (1.0 - r[j]);
                d_ah.row_mut(t)[j] = dah;
                d_uh.row_mut(t)[j] = dah * r[j];
                dh_prev[j] = dh * (1.0 - z[j]);
            }
            matvec_t_acc(self.u_z.data(), hidden, d_az.row(t), &mut dh_prev);
            matvec_t_acc(self.u_r.data(), hidden, d_ar.row(t), &mut dh_prev);
            matvec_t_acc(self.u_h.data(), hidden, d_uh.row(t), &mut dh_prev);
            std::mem::swap(&mut dh_next, &mut dh_prev);
        }

        accumulate_outer(&mut grads.w_z, &d_az, &trace.xs);
        accumulate_outer(&mut grads.w_r, &d_ar, &trace.xs);
        accumulate_outer(&mut grads.w_h, &d_ah, &trace.xs);
        accumulate_outer(&mut grads.u_z, &d_az, &trace.h_prev);
        accumulate_outer(&mut grads.u_r, &d_ar, &trace.h_prev);
        accumulate_outer(&mut grads.u_h, &d_uh, &trace.h_prev);
        d_az.col_sums_into(grads.b_z.data_mut());
        d_ar.col_sums_into(grads.b_r.data_mut());
        d_ah.col_sums_into(grads.b_h.data_mut());

        let mut grad_xs = Tensor::zeros(trace.xs.shape());
        accumulate_input_grad(&mut grad_xs, &d_az, &self.w_z);
        accumulate_input_grad(&mut grad_xs, &d_ar, &self.w_r);
        accumulate_input_grad(&mut grad_xs, &d_ah, &self.w_h);
        Ok(grad_xs)
    }

    fn zeros_like(&self) -> Self {
        GruCell::zeros(self.input_size(), self.hidden_size())
    }
}

impl Parameterized for GruCell {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        use ParamKind::{Bias, Kernel};
        vec![
            NamedParam::new("W_z", Kernel, &self.w_z),
            NamedParam::new("W_r", Kernel, &self.w_r),
            NamedParam::new("W_h", Kernel, &self.w_h),
            NamedParam::new("U_z", Kernel, &self.u_z),
            NamedParam::new("U_r", Kernel, &self.u_r),
            NamedParam::new("U_h", Kernel, &self.u_h),
            NamedParam::new("b_z", Bias, &self.b_z),
            NamedParam::new("b_r", Bias, &self.b_r),
            NamedParam::new("b_h", Bias, &self.b_h),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }
}
