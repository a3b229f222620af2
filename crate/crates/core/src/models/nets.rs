use crate::error::{Error, Result};
use crate::layers::{
    dropout, gaussian_noise, global_average_pool, global_average_pool_backward, BiTrace, Bidirectional, BranchTrace,
    ConvBranch, Dense, DenseTrace, DropoutMask, Embedding, GruCell, GruSeqTrace, LstmCell, LstmSeqTrace, NamedParam,
    Parameterized, Phase, RecurrentCell,
};
use crate::models::spec::*;
use crate::numeric::{Activation, Init, RngStream, Tensor};

fn output_layer(input: usize, head: Head, init: Init, rng: &mut RngStream) -> Result<Dense> {
    let act = match head {
        Head::Binary => Activation::Sigmoid,
        Head::ThreeClass => Activation::Softmax,
    };
    Dense::new(input, head.outputs(), Some(act), init, rng)
}

/// Steps covered by the mask prefix; at least one so that an empty tweet
/// still reads a single (padding) step.
pub(crate) fn active_len(mask: &[u8]) -> usize {
    mask.iter().take_while(|&&m| m != 0).count().max(1)
}

fn prefixed<'a>(prefix: &str, params: Vec<NamedParam<'a>>) -> impl Iterator<Item = NamedParam<'a>> + 'a {
    let prefix = prefix.to_string();
    params.into_iter().map(move |p| p.prefixed(&prefix))
}

// ---------------------------------------------------------------------------
// embedding → BiGRU → noise → average pool → dense → dropout → head

#[derive(Debug, Clone, PartialEq)]
pub struct BigruNet {
    pub embedding: Embedding,
    pub rnn: Bidirectional<GruCell>,
    pub hidden: Dense,
    pub output: Dense,
}

#[derive(Debug, Clone)]
pub struct BigruTrace {
    ids: Vec<usize>,
    rnn: BiTrace<GruSeqTrace>,
    rnn_shape: Vec<usize>,
    hidden: DenseTrace,
    dropout: DropoutMask,
    output: DenseTrace,
}

impl BigruNet {
    pub fn new(spec: &ModelSpec, table: Tensor, rng: &mut RngStream) -> Result<Self> {
        let d = spec.input_dim;
        let rnn = Bidirectional::new(
            GruCell::new(d, BIGRU_HIDDEN, rng)?,
            GruCell::new(d, BIGRU_HIDDEN, rng)?,
        )?;
        Ok(BigruNet {
            embedding: Embedding::new(table, spec.train_embeddings)?,
            hidden: Dense::new(rnn.output_size(), DENSE_UNITS, None, Init::GlorotUniform, rng)?,
            output: output_layer(DENSE_UNITS, spec.head, Init::GlorotUniform, rng)?,
            rnn,
        })
    }

    pub fn forward(&self, ids: &[usize], mask: &[u8], phase: Phase, rng: &mut RngStream) -> Result<(Vec<f64>, BigruTrace)> {
        let n = active_len(mask);
        let x = self.embedding.lookup(&ids[..n])?;
        let (h, rnn_trace) = self.rnn.run(&x)?;
        let (h, _) = gaussian_noise(&h, NOISE_STDDEV, phase, rng)?;
        let pooled = global_average_pool(&h, &vec![1; n])?;
        let (a, hidden) = self.hidden.forward(&pooled)?;
        let (a, drop) = dropout(&a, BIGRU_DROPOUT, phase, rng)?;
        let (p, output) = self.output.forward(&a)?;
        Ok((
            p,
            BigruTrace {
                ids: ids[..n].to_vec(),
                rnn: rnn_trace,
                rnn_shape: h.shape().to_vec(),
                hidden,
                dropout: drop,
                output,
            },
        ))
    }

    pub fn backward(&self, trace: &BigruTrace, grad_p: &[f64], grads: &mut Self) -> Result<()> {
        let g = self.output.backward(&trace.output, grad_p, &mut grads.output)?;
        let g = trace.dropout.backward(&g);
        let g = self.hidden.backward(&trace.hidden, &g, &mut grads.hidden)?;
        let n = trace.rnn_shape[0];
        let g = global_average_pool_backward(&trace.rnn_shape, &vec![1; n], &g)?;
        let g = self.rnn.backward(&trace.rnn, &g, &mut grads.rnn)?;
        if self.embedding.trainable {
            self.embedding.backward(&trace.ids, &g, &mut grads.embedding)?;
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        BigruNet {
            embedding: self.embedding.zeros_like(),
            rnn: self.rnn.zeros_like(),
            hidden: self.hidden.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

impl Parameterized for BigruNet {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        prefixed("embedding", self.embedding.named_params())
            .chain(prefixed("bigru", self.rnn.named_params()))
            .chain(prefixed("dense", self.hidden.named_params()))
            .chain(prefixed("output", self.output.named_params()))
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.embedding.params_mut();
        out.extend(self.rnn.params_mut());
        out.extend(self.hidden.params_mut());
        out.extend(self.output.params_mut());
        out
    }
}

// ---------------------------------------------------------------------------
// embedding → noise → conv branches (max over time) → concat → dropout →
// dense → head

#[derive(Debug, Clone, PartialEq)]
pub struct CnnNet {
    pub embedding: Embedding,
    pub branches: Vec<ConvBranch>,
    pub hidden: Dense,
    pub output: Dense,
}

#[derive(Debug, Clone)]
pub struct CnnTrace {
    ids: Vec<usize>,
    branches: Vec<BranchTrace>,
    dropout: DropoutMask,
    hidden: DenseTrace,
    output: DenseTrace,
}

impl CnnNet {
    pub fn new(spec: &ModelSpec, table: Tensor, rng: &mut RngStream) -> Result<Self> {
        let d = spec.input_dim;
        let branches = CNN_HEIGHTS
            .iter()
            .map(|&h| ConvBranch::new(h, d, CNN_FILTERS, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(CnnNet {
            embedding: Embedding::new(table, spec.train_embeddings)?,
            branches,
            hidden: Dense::new(CNN_HEIGHTS.len() * CNN_FILTERS, DENSE_UNITS, None, Init::GlorotUniform, rng)?,
            output: output_layer(DENSE_UNITS, spec.head, Init::GlorotUniform, rng)?,
        })
    }

    pub fn forward(&self, ids: &[usize], phase: Phase, rng: &mut RngStream) -> Result<(Vec<f64>, CnnTrace)> {
        let x = self.embedding.lookup(ids)?;
        let (x, _) = gaussian_noise(&x, NOISE_STDDEV, phase, rng)?;
        let mut features = Vec::with_capacity(self.branches.len() * CNN_FILTERS);
        let mut traces = Vec::with_capacity(self.branches.len());
        for branch in &self.branches {
            let (pooled, trace) = branch.forward(&x)?;
            features.extend(pooled);
            traces.push(trace);
        }
        let (f, drop) = dropout(&features, CNN_DROPOUT, phase, rng)?;
        let (a, hidden) = self.hidden.forward(&f)?;
        let (p, output) = self.output.forward(&a)?;
        Ok((
            p,
            CnnTrace {
                ids: ids.to_vec(),
                branches: traces,
                dropout: drop,
                hidden,
                output,
            },
        ))
    }

    pub fn backward(&self, trace: &CnnTrace, grad_p: &[f64], grads: &mut Self) -> Result<()> {
        let g = self.output.backward(&trace.output, grad_p, &mut grads.output)?;
        let g = self.hidden.backward(&trace.hidden, &g, &mut grads.hidden)?;
        let g = trace.dropout.backward(&g);
        let mut dx: Option<Tensor> = None;
        for (i, (branch, bt)) in self.branches.iter().zip(&trace.branches).enumerate() {
            let slice = &g[i * branch.n_filters()..(i + 1) * branch.n_filters()];
            let d = branch.backward(bt, slice, &mut grads.branches[i])?;
            match dx.as_mut() {
                Some(acc) => acc.add_assign(&d)?,
                None => dx = Some(d),
            }
        }
        if self.embedding.trainable {
            if let Some(dx) = dx {
                self.embedding.backward(&trace.ids, &dx, &mut grads.embedding)?;
            }
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        CnnNet {
            embedding: self.embedding.zeros_like(),
            branches: self.branches.iter().map(ConvBranch::zeros_like).collect(),
            hidden: self.hidden.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

impl Parameterized for CnnNet {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        let mut out: Vec<_> = prefixed("embedding", self.embedding.named_params()).collect();
        for (b, h) in self.branches.iter().zip(CNN_HEIGHTS) {
            out.extend(prefixed(&format!("conv{h}"), b.named_params()));
        }
        out.extend(prefixed("dense", self.hidden.named_params()));
        out.extend(prefixed("output", self.output.named_params()));
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.embedding.params_mut();
        for b in &mut self.branches {
            out.extend(b.params_mut());
        }
        out.extend(self.hidden.params_mut());
        out.extend(self.output.params_mut());
        out
    }
}

// ---------------------------------------------------------------------------
// contextual vectors → noise → Bi-LSTM → (Bi-)GRU → average pool → dropout
// → head

#[derive(Debug, Clone, PartialEq)]
pub enum SecondRnn {
    Bidirectional(Bidirectional<GruCell>),
    Forward(GruCell),
}

#[derive(Debug, Clone)]
enum SecondTrace {
    Bidirectional(BiTrace<GruSeqTrace>),
    Forward(GruSeqTrace),
}

impl SecondRnn {
    fn run(&self, xs: &Tensor) -> Result<(Tensor, SecondTrace)> {
        match self {
            SecondRnn::Bidirectional(bi) => bi.run(xs).map(|(o, t)| (o, SecondTrace::Bidirectional(t))),
            SecondRnn::Forward(cell) => cell.forward_seq(xs).map(|(o, t)| (o, SecondTrace::Forward(t))),
        }
    }

    fn backward(&self, trace: &SecondTrace, grad: &Tensor, grads: &mut SecondRnn) -> Result<Tensor> {
        match (self, trace, grads) {
            (SecondRnn::Bidirectional(bi), SecondTrace::Bidirectional(t), SecondRnn::Bidirectional(g)) => {
                bi.backward(t, grad, g)
            }
            (SecondRnn::Forward(cell), SecondTrace::Forward(t), SecondRnn::Forward(g)) => cell.backward_seq(t, grad, g),
            _ => Err(Error::invalid("recurrent layer variant changed between passes")),
        }
    }

    fn output_size(&self) -> usize {
        match self {
            SecondRnn::Bidirectional(bi) => bi.output_size(),
            SecondRnn::Forward(cell) => cell.hidden_size(),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            SecondRnn::Bidirectional(bi) => SecondRnn::Bidirectional(bi.zeros_like()),
            SecondRnn::Forward(cell) => SecondRnn::Forward(cell.zeros_like()),
        }
    }

    fn named_params(&self) -> Vec<NamedParam<'_>> {
        match self {
            SecondRnn::Bidirectional(bi) => prefixed("bigru", bi.named_params()).collect(),
            SecondRnn::Forward(cell) => prefixed("gru", cell.named_params()).collect(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            SecondRnn::Bidirectional(bi) => bi.params_mut(),
            SecondRnn::Forward(cell) => cell.params_mut(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextNet {
    pub lstm: Bidirectional<LstmCell>,
    pub gru: SecondRnn,
    pub output: Dense,
}

#[derive(Debug, Clone)]
pub struct ContextTrace {
    lstm: BiTrace<LstmSeqTrace>,
    gru: SecondTrace,
    gru_shape: Vec<usize>,
    dropout: DropoutMask,
    output: DenseTrace,
}

impl ContextNet {
    pub fn new(spec: &ModelSpec, rng: &mut RngStream) -> Result<Self> {
        let d = spec.input_dim;
        let h = CONTEXT_RNN_HIDDEN;
        let lstm = Bidirectional::new(LstmCell::new(d, h, rng)?, LstmCell::new(d, h, rng)?)?;
        let gru = if spec.second_rnn_bidirectional {
            SecondRnn::Bidirectional(Bidirectional::new(GruCell::new(2 * h, h, rng)?, GruCell::new(2 * h, h, rng)?)?)
        } else {
            SecondRnn::Forward(GruCell::new(2 * h, h, rng)?)
        };
        let init = Init::TruncatedNormal {
            mean: 0.0,
            stddev: CONTEXT_HEAD_STDDEV,
        };
        Ok(ContextNet {
            output: output_layer(gru.output_size(), spec.head, init, rng)?,
            lstm,
            gru,
        })
    }

    pub fn forward(&self, values: &Tensor, mask: &[u8], phase: Phase, rng: &mut RngStream) -> Result<(Vec<f64>, ContextTrace)> {
        let n = active_len(mask);
        let x = values.head_rows(n)?;
        let (x, _) = gaussian_noise(&x, NOISE_STDDEV, phase, rng)?;
        let (h1, lstm) = self.lstm.run(&x)?;
        let (h2, gru) = self.gru.run(&h1)?;
        let pooled = global_average_pool(&h2, &vec![1; n])?;
        let (a, drop) = dropout(&pooled, CONTEXT_DROPOUT, phase, rng)?;
        let (p, output) = self.output.forward(&a)?;
        Ok((
            p,
            ContextTrace {
                lstm,
                gru,
                gru_shape: h2.shape().to_vec(),
                dropout: drop,
                output,
            },
        ))
    }

    pub fn backward(&self, trace: &ContextTrace, grad_p: &[f64], grads: &mut Self) -> Result<()> {
        let g = self.output.backward(&trace.output, grad_p, &mut grads.output)?;
        let g = trace.dropout.backward(&g);
        let n = trace.gru_shape[0];
        let g = global_average_pool_backward(&trace.gru_shape, &vec![1; n], &g)?;
        let g = self.gru.backward(&trace.gru, &g, &mut grads.gru)?;
        self.lstm.backward(&trace.lstm, &g, &mut grads.lstm)?;
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        ContextNet {
            lstm: self.lstm.zeros_like(),
            gru: self.gru.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

impl Parameterized for ContextNet {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        prefixed("bilstm", self.lstm.named_params())
            .chain(self.gru.named_params())
            .chain(prefixed("output", self.output.named_params()))
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.lstm.params_mut();
        out.extend(self.gru.params_mut());
        out.extend(self.output.params_mut());
        out
    }
}
