use crate::error::{Error, Result};
use crate::layers::gru::{accumulate_input_grad, accumulate_outer, project};
use crate::layers::{check_seq, NamedParam, ParamKind, Parameterized, RecurrentCell};
use crate::numeric::{init_params, matvec_acc, matvec_t_acc, sigmoid, Init, RngStream, Tensor};

/// Standard LSTM cell (input, forget, output gates and a tanh candidate).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_i: Tensor,
    pub w_f: Tensor,
    pub w_o: Tensor,
    pub w_g: Tensor,
    pub u_i: Tensor,
    pub u_f: Tensor,
    pub u_o: Tensor,
    pub u_g: Tensor,
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_o: Tensor,
    pub b_g: Tensor,
}

#[derive(Debug, Clone)]
pub struct LstmSeqTrace {
    xs: Tensor,
    h_prev: Tensor,
    c_prev: Tensor,
    i: Tensor,
    f: Tensor,
    o: Tensor,
    g: Tensor,
    /// tanh(c_t)
    tc: Tensor,
}

impl LstmCell {
    /// Glorot kernels, zero biases except a forget bias of one.
    pub fn new(input: usize, hidden: usize, rng: &mut RngStream) -> Result<Self> {
        let k = |rng: &mut RngStream, cols| init_params(Init::GlorotUniform, &[hidden, cols], rng);
        Ok(LstmCell {
            w_i: k(rng, input)?,
            w_f: k(rng, input)?,
            w_o: k(rng, input)?,
            w_g: k(rng, input)?,
            u_i: k(rng, hidden)?,
            u_f: k(rng, hidden)?,
            u_o: k(rng, hidden)?,
            u_g: k(rng, hidden)?,
            b_i: Tensor::zeros(&[hidden]),
            b_f: Tensor::filled(&[hidden], 1.0),
            b_o: Tensor::zeros(&[hidden]),
            b_g: Tensor::zeros(&[hidden]),
        })
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(&[hidden, input]);
        let u = || Tensor::zeros(&[hidden, hidden]);
        let b = || Tensor::zeros(&[hidden]);
        LstmCell {
            w_i: w(),
            w_f: w(),
            w_o: w(),
            w_g: w(),
            u_i: u(),
            u_f: u(),
            u_o: u(),
            u_g: u(),
            b_i: b(),
            b_f: b(),
            b_o: b(),
            b_g: b(),
        }
    }

    fn gates(&self) -> [(&Tensor, &Tensor, &Tensor); 4] {
        [
            (&self.w_i, &self.u_i, &self.b_i),
            (&self.w_f, &self.u_f, &self.b_f),
            (&self.w_o, &self.u_o, &self.b_o),
            (&self.w_g, &self.u_g, &self.b_g),
        ]
    }

    /// Pre-activations for the four gates given input projections.
    fn step_projected(&self, proj: [&[f64]; 4], h: &[f64], c: &[f64], out: [&mut [f64]; 6]) {
        let hidden = self.hidden_size();
        let [i, f, o, g, c_new, h_new] = out;
        for (dst, (src, (_, u, b))) in [&mut *i, &mut *f, &mut *o, &mut *g]
            .into_iter()
            .zip(proj.into_iter().zip(self.gates()))
        {
            dst.copy_from_slice(src);
            matvec_acc(u.data(), hidden, h, dst);
            for (d, bias) in dst.iter_mut().zip(b.data()) {
                *d += bias;
            }
        }
        for j in 0..hidden {
            i[j] = sigmoid(i[j]);
            f[j] = sigmoid(f[j]);
            o[j] = sigmoid(o[j]);
            g[j] = g[j].tanh();
            c_new[j] = f[j] * c[j] + i[j] * g[j];
            h_new[j] = o[j] * c_new[j].tanh();
        }
    }
}

/// One LSTM step from state `(h, c)` to `(h', c')`.
pub fn lstm_step(cell: &LstmCell, x: &[f64], h: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (hidden, input) = (cell.hidden_size(), cell.input_size());
    if x.len() != input || h.len() != hidden || c.len() != hidden {
        return Err(Error::DimensionMismatch {
            op: "lstm_step",
            left: vec![input, hidden, hidden],
            right: vec![x.len(), h.len(), c.len()],
        });
    }
    let proj: Vec<Vec<f64>> = cell
        .gates()
        .iter()
        .map(|(w, _, _)| {
            let mut out = vec![0.0; hidden];
            matvec_acc(w.data(), input, x, &mut out);
            out
        })
        .collect();
    let buf = || vec![0.0; hidden];
    let (mut i, mut f, mut o, mut g) = (buf(), buf(), buf(), buf());
    let (mut c_new, mut h_new) = (buf(), buf());
    cell.step_projected(
        [&proj[0], &proj[1], &proj[2], &proj[3]],
        h,
        c,
        [&mut i, &mut f, &mut o, &mut g, &mut c_new, &mut h_new],
    );
    Ok((h_new, c_new))
}

impl RecurrentCell for LstmCell {
    type SeqTrace = LstmSeqTrace;

    fn input_size(&self) -> usize {
        self.w_i.cols()
    }

    fn hidden_size(&self) -> usize {
        self.w_i.rows()
    }

    fn forward_seq(&self, xs: &Tensor) -> Result<(Tensor, LstmSeqTrace)> {
        check_seq("lstm", xs, self.input_size())?;
        let (len, hidden) = (xs.rows(), self.hidden_size());
        let proj: Vec<Tensor> = self.gates().iter().map(|(w, _, _)| project(xs, w)).collect();
        let z = || Tensor::zeros(&[len, hidden]);
        let (mut hs, mut h_prev, mut c_prev) = (z(), z(), z());
        let (mut i, mut f, mut o, mut g, mut tc) = (z(), z(), z(), z(), z());
        let mut h = vec![0.0; hidden];
        let mut c = vec![0.0; hidden];
        let mut c_new = vec![0.0; hidden];
        for t in 0..len {
            h_prev.row_mut(t).copy_from_slice(&h);
            c_prev.row_mut(t).copy_from_slice(&c);
            self.step_projected(
                [proj[0].row(t), proj[1].row(t), proj[2].row(t), proj[3].row(t)],
                &h,
                &c,
                [
                    i.row_mut(t),
                    f.row_mut(t),
                    o.row_mut(t),
                    g.row_mut(t),
                    &mut c_new,
                    hs.row_mut(t),
                ],
            );
            for (dst, cv) in tc.row_mut(t).iter_mut().zip(&c_new) {
                *dst = cv.tanh();
            }
            h.copy_from_slice(hs.row(t));
            std::mem::swap(&mut c, &mut c_new);
        }
        let trace = LstmSeqTrace {
            xs: xs.clone(),
            h_prev,
            c_prev,
            i,
            f,
            o,
            g,
            tc,
        };
        Ok((hs, trace))
    }

    fn backward_seq(&self, trace: &LstmSeqTrace, grad_hs: &Tensor, grads: &mut LstmCell) -> Result<Tensor> {
        let (len, hidden) = (trace.i.rows(), self.hidden_size());
        if grad_hs.shape() != [len, hidden] {
            return Err(Error::DimensionMismatch {
                op: "lstm backward",
                left: vec![len, hidden],
                right: grad_hs.shape().to_vec(),
            });
        }
        let z = || Tensor::zeros(&[len, hidden]);
        let (mut d_ai, mut d_af, mut d_ao, mut d_ag) = (z(), z(), z(), z());
        let mut dh_next = vec![0.0; hidden];
        let mut dc_next = vec![0.0; hidden];
        let mut dh_prev = vec![0.0; hidden];
        for t in (0..len).rev() {
            let (i, f, o, g, tc, cp) = (
                trace.i.row(t),
                trace.f.row(t),
                trace.o.row(t),
                trace.g.row(t),
                trace.tc.row(t),
                trace.c_prev.row(t),
            );
            let gh = grad_hs.row(t);
            for j in 0..hidden {
                let dh = gh[j] + dh_next[j];
                let d_o = dh * tc[j];
                let dc = dc_next[j] + dh * o[j] * (1.0 - tc[j] * tc[j]);
                d_ai.row_mut(t)[j] = dc * g[j] * i[j] * (1.0 - i[j]);
                d_af.row_mut(t)[j] = dc * cp[j] * f[j] * (1.0 - f[j]);
                d_ao.row_mut(t)[j] = d_o * o[j] * (1.0 - o[j]);
                d_ag.row_mut(t)[j] = dc * i[j] * (1.0 - g[j] * g[j]);
                dc_next[j] = dc * f[j];
            }
            dh_prev.fill(0.0);
            matvec_t_acc(self.u_i.data(), hidden, d_ai.row(t), &mut dh_prev);
            matvec_t_acc(self.u_f.data(), hidden, d_af.row(t), &mut dh_prev);
            matvec_t_acc(self.u_o.data(), hidden, d_ao.row(t), &mut dh_prev);
            matvec_t_acc(self.u_g.data(), hidden, d_ag.row(t), &mut dh_prev);
            std::mem::swap(&mut dh_next, &mut dh_prev);
        }

        let pairs = [
            (&d_ai, &mut grads.w_i, &mut grads.u_i, &mut grads.b_i),
            (&d_af, &mut grads.w_f, &mut grads.u_f, &mut grads.b_f),
            (&d_ao, &mut grads.w_o, &mut grads.u_o, &mut grads.b_o),
            (&d_ag, &mut grads.w_g, &mut grads.u_g, &mut grads.b_g),
        ];
        for (d_a, gw, gu, gb) in pairs {
            accumulate_outer(gw, d_a, &trace.xs);
            accumulate_outer(gu, d_a, &trace.h_prev);
            d_a.col_sums_into(gb.data_mut());
        }
        let mut grad_xs = Tensor::zeros(trace.xs.shape());
        for (d_a, w) in [(&d_ai, &self.w_i), (&d_af, &self.w_f), (&d_ao, &self.w_o), (&d_ag, &self.w_g)] {
            accumulate_input_grad(&mut grad_xs, d_a, w);
        }
        Ok(grad_xs)
    }

    fn zeros_like(&self) -> Self {
        LstmCell::zeros(self.input_size(), self.hidden_size())
    }
}

impl Parameterized for LstmCell {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        use ParamKind::{Bias, Kernel};
        vec![
            NamedParam::new("W_i", Kernel, &self.w_i),
            NamedParam::new("W_f", Kernel, &self.w_f),
            NamedParam::new("W_o", Kernel, &self.w_o),
            NamedParam::new("W_g", Kernel, &self.w_g),
            NamedParam::new("U_i", Kernel, &self.u_i),
            NamedParam::new("U_f", Kernel, &self.u_f),
            NamedParam::new("U_o", Kernel, &self.u_o),
            NamedParam::new("U_g", Kernel, &self.u_g),
            NamedParam::new("b_i", Bias, &self.b_i),
            NamedParam::new("b_f", Bias, &self.b_f),
            NamedParam::new("b_o", Bias, &self.b_o),
            NamedParam::new("b_g", Bias, &self.b_g),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_i,
            &mut self.w_f,
            &mut self.w_o,
            &mut self.w_g,
            &mut self.u_i,
            &mut self.u_f,
            &mut self.u_o,
            &mut self.u_g,
            &mut self.b_i,
            &mut self.b_f,
            &mut self.b_o,
            &mut self.b_g,
        ]
    }
}
