//! The three classifier architectures and the weighted-ensemble rule.

mod ensemble;
mod nets;
mod spec;

pub use ensemble::{decide, ensemble_predict, ensemble_probs, Ensemble, EnsembleWeights};
pub use nets::{BigruNet, CnnNet, ContextNet, SecondRnn};
pub use spec::*;

use crate::error::{Error, Result};
use crate::layers::{NamedParam, Parameterized, Phase};
use crate::numeric::{RngStream, Tensor};
use crate::optim::LossKind;
use crate::textprep::{ContextualInput, EncodedInput, PAD_ID};

/// Input in the form a model consumes.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelInput {
    Tokens(EncodedInput),
    Contextual(ContextualInput),
}

#[derive(Debug, Clone, PartialEq)]
enum Network {
    Bigru(BigruNet),
    Cnn(CnnNet),
    Context(ContextNet),
}

/// An instantiated, trainable network together with the spec it realizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    net: Network,
}

/// A training-mode forward pass, retained for [`Model::backward`].
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub probs: Vec<f64>,
    trace: Trace,
}

#[derive(Debug, Clone)]
enum Trace {
    Bigru(nets::BigruTrace),
    Cnn(nets::CnnTrace),
    Context(nets::ContextTrace),
}

impl Model {
    /// Builds a model with a randomly initialized embedding table
    /// (uniform in ±0.05, padding row zero).
    pub fn build(spec: ModelSpec, rng: &mut RngStream) -> Result<Self> {
        spec.validate()?;
        let table = match spec.input_mode() {
            InputMode::Tokens => {
                let mut t = Tensor::zeros(&[spec.vocab_size, spec.input_dim]);
                for v in t.data_mut().iter_mut().skip(spec.input_dim) {
                    *v = rng.uniform(-0.05, 0.05);
                }
                Some(t)
            }
            InputMode::Contextual => None,
        };
        Self::assemble(spec, table, rng)
    }

    /// Builds a token model around a pretrained `[vocab × dim]` table.
    pub fn build_with_embeddings(spec: ModelSpec, table: Tensor, rng: &mut RngStream) -> Result<Self> {
        spec.validate()?;
        if spec.input_mode() != InputMode::Tokens {
            return Err(Error::invalid(format!("{} takes no embedding table", spec.architecture)));
        }
        if table.shape() != [spec.vocab_size, spec.input_dim] {
            return Err(Error::DimensionMismatch {
                op: "embedding table",
                left: vec![spec.vocab_size, spec.input_dim],
                right: table.shape().to_vec(),
            });
        }
        Self::assemble(spec, Some(table), rng)
    }

    fn assemble(spec: ModelSpec, table: Option<Tensor>, rng: &mut RngStream) -> Result<Self> {
        let net = match (spec.architecture, table) {
            (Architecture::KeisBigru, Some(t)) => Network::Bigru(BigruNet::new(&spec, t, rng)?),
            (Architecture::KeisCnn, Some(t)) => Network::Cnn(CnnNet::new(&spec, t, rng)?),
            (Architecture::BertBiHead, None) => Network::Context(ContextNet::new(&spec, rng)?),
            _ => unreachable!("input mode checked by the caller"),
        };
        Ok(Model { spec, net })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn loss_kind(&self) -> LossKind {
        match self.spec.head {
            Head::Binary => LossKind::BinaryCrossEntropy,
            Head::ThreeClass => LossKind::CategoricalCrossEntropy,
        }
    }

    fn check_input(&self, input: &ModelInput) -> Result<()> {
        let spec = &self.spec;
        match (input, spec.input_mode()) {
            (ModelInput::Tokens(e), InputMode::Tokens) => {
                if e.ids.len() != spec.seq_len || e.mask.len() != spec.seq_len {
                    return Err(Error::DimensionMismatch {
                        op: "model input",
                        left: vec![spec.seq_len],
                        right: vec![e.ids.len(), e.mask.len()],
                    });
                }
                if let Some(&bad) = e.ids.iter().find(|&&id| id >= spec.vocab_size) {
                    return Err(Error::invalid(format!(
                        "token id {bad} outside vocabulary of {}",
                        spec.vocab_size
                    )));
                }
                Ok(())
            }
            (ModelInput::Contextual(c), InputMode::Contextual) => {
                if c.values.shape() != [spec.seq_len, spec.input_dim] || c.mask.len() != spec.seq_len {
                    return Err(Error::DimensionMismatch {
                        op: "model input",
                        left: vec![spec.seq_len, spec.input_dim],
                        right: c.values.shape().to_vec(),
                    });
                }
                Ok(())
            }
            _ => Err(Error::invalid(format!(
                "{} expects {:?} input",
                spec.architecture,
                spec.input_mode()
            ))),
        }
    }

    fn run(&self, input: &ModelInput, phase: Phase, rng: &mut RngStream) -> Result<ForwardPass> {
        self.check_input(input)?;
        let (probs, trace) = match (&self.net, input) {
            (Network::Bigru(net), ModelInput::Tokens(e)) => {
                let (p, t) = net.forward(&e.ids, &e.mask, phase, rng)?;
                (p, Trace::Bigru(t))
            }
            (Network::Cnn(net), ModelInput::Tokens(e)) => {
                let (p, t) = net.forward(&e.ids, phase, rng)?;
                (p, Trace::Cnn(t))
            }
            (Network::Context(net), ModelInput::Contextual(c)) => {
                let (p, t) = net.forward(&c.values, &c.mask, phase, rng)?;
                (p, Trace::Context(t))
            }
            _ => unreachable!("checked by check_input"),
        };
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("{} output", self.spec.architecture)));
        }
        Ok(ForwardPass { probs, trace })
    }

    /// Class probabilities in evaluation mode: `[P(positive)]` for a binary
    /// head, a 3-vector for the three-class head.
    pub fn predict(&self, input: &ModelInput) -> Result<Vec<f64>> {
        // eval mode never draws from the stream
        let mut rng = RngStream::new(0, 0);
        Ok(self.run(input, Phase::Eval, &mut rng)?.probs)
    }

    /// Training-mode forward pass with noise and dropout drawn from `rng`.
    pub fn forward_train(&self, input: &ModelInput, rng: &mut RngStream) -> Result<ForwardPass> {
        self.run(input, Phase::Train, rng)
    }

    /// Accumulates parameter gradients for `grad_probs` (the loss gradient
    /// with respect to the output probabilities) into `grads`, which must
    /// come from [`Model::zeros_like`].
    pub fn backward(&self, pass: &ForwardPass, grad_probs: &[f64], grads: &mut Model) -> Result<()> {
        if grad_probs.len() != pass.probs.len() {
            return Err(Error::DimensionMismatch {
                op: "model backward",
                left: vec![pass.probs.len()],
                right: vec![grad_probs.len()],
            });
        }
        match (&self.net, &pass.trace, &mut grads.net) {
            (Network::Bigru(n), Trace::Bigru(t), Network::Bigru(g)) => n.backward(t, grad_probs, g),
            (Network::Cnn(n), Trace::Cnn(t), Network::Cnn(g)) => n.backward(t, grad_probs, g),
            (Network::Context(n), Trace::Context(t), Network::Context(g)) => n.backward(t, grad_probs, g),
            _ => Err(Error::invalid("forward pass and gradient buffer belong to different architectures")),
        }
    }

    /// Gradient buffer with this model's exact parameter layout, all zeros.
    pub fn zeros_like(&self) -> Model {
        let net = match &self.net {
            Network::Bigru(n) => Network::Bigru(n.zeros_like()),
            Network::Cnn(n) => Network::Cnn(n.zeros_like()),
            Network::Context(n) => Network::Context(n.zeros_like()),
        };
        Model {
            spec: self.spec.clone(),
            net,
        }
    }

    pub fn zero_grads(&mut self) {
        for t in self.params_mut() {
            t.fill(0.0);
        }
    }

    /// Padding id used by token models.
    pub fn pad_id(&self) -> usize {
        PAD_ID
    }

    pub fn network_bigru(&self) -> Option<&BigruNet> {
        match &self.net {
            Network::Bigru(n) => Some(n),
            _ => None,
        }
    }

    pub fn network_cnn(&self) -> Option<&CnnNet> {
        match &self.net {
            Network::Cnn(n) => Some(n),
            _ => None,
        }
    }

    pub fn network_context(&self) -> Option<&ContextNet> {
        match &self.net {
            Network::Context(n) => Some(n),
            _ => None,
        }
    }
}

impl Parameterized for Model {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        match &self.net {
            Network::Bigru(n) => n.named_params(),
            Network::Cnn(n) => n.named_params(),
            Network::Context(n) => n.named_params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match &mut self.net {
            Network::Bigru(n) => n.params_mut(),
            Network::Cnn(n) => n.params_mut(),
            Network::Context(n) => n.params_mut(),
        }
    }
}

/// Closed-form parameter count of the model a spec describes.
pub fn expected_param_count(spec: &ModelSpec) -> usize {
    let gru = |i: usize, h: usize| 3 * (h * i + h * h + h);
    let lstm = |i: usize, h: usize| 4 * (h * i + h * h + h);
    let dense = |i: usize, o: usize| i * o + o;
    let out = spec.head.outputs();
    let d = spec.input_dim;
    match spec.architecture {
        Architecture::KeisBigru => {
            spec.vocab_size * d
                + 2 * gru(d, BIGRU_HIDDEN)
                + dense(2 * BIGRU_HIDDEN, DENSE_UNITS)
                + dense(DENSE_UNITS, out)
        }
        Architecture::KeisCnn => {
            spec.vocab_size * d
                + CNN_HEIGHTS.iter().map(|h| h * d * CNN_FILTERS + CNN_FILTERS).sum::<usize>()
                + dense(CNN_HEIGHTS.len() * CNN_FILTERS, DENSE_UNITS)
                + dense(DENSE_UNITS, out)
        }
        Architecture::BertBiHead => {
            let h = CONTEXT_RNN_HIDDEN;
            let second = if spec.second_rnn_bidirectional {
                2 * gru(2 * h, h) + dense(2 * h, out)
            } else {
                gru(2 * h, h) + dense(h, out)
            };
            2 * lstm(d, h) + second
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::ContextualInput;

    fn tokens(spec: &ModelSpec, ids: &[usize]) -> ModelInput {
        let mut e = EncodedInput {
            ids: vec![PAD_ID; spec.seq_len],
            mask: vec![0; spec.seq_len],
        };
        for (i, &id) in ids.iter().enumerate() {
            e.ids[i] = id;
            e.mask[i] = 1;
        }
        ModelInput::Tokens(e)
    }

    #[test]
    fn kernel_shapes_follow_embedding_width() {
        let mut rng = RngStream::new(0, 0);
        let m = Model::build(ModelSpec::keis_bigru(10, 300, 8, Head::Binary), &mut rng).unwrap();
        let net = m.network_bigru().unwrap();
        for w in [&net.rnn.forward.w_z, &net.rnn.forward.w_r, &net.rnn.backward.w_h] {
            assert_eq!(w.shape(), &[128, 300]);
        }
        let m = Model::build(ModelSpec::keis_cnn(10, 400, 8, Head::Binary), &mut rng).unwrap();
        let shapes: Vec<_> = m
            .network_cnn()
            .unwrap()
            .branches
            .iter()
            .map(|b| b.filters.shape().to_vec())
            .collect();
        assert_eq!(shapes, vec![vec![1, 400, 36], vec![3, 400, 36], vec![5, 400, 36], vec![7, 400, 36]]);
    }

    #[test]
    fn param_counts_match_closed_form() {
        let mut rng = RngStream::new(1, 0);
        let specs = [
            ModelSpec::keis_bigru(12, 6, 8, Head::Binary),
            ModelSpec::keis_cnn(12, 6, 8, Head::ThreeClass),
            ModelSpec::bert_bi_head(8, 6, Head::Binary),
            ModelSpec {
                second_rnn_bidirectional: false,
                ..ModelSpec::bert_bi_head(8, 6, Head::ThreeClass)
            },
        ];
        for spec in specs {
            let m = Model::build(spec.clone(), &mut rng).unwrap();
            assert_eq!(m.param_count(), expected_param_count(&spec), "{spec:?}");
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        let spec = ModelSpec::keis_cnn(12, 6, 8, Head::Binary);
        let a = Model::build(spec.clone(), &mut RngStream::new(5, 0)).unwrap();
        let b = Model::build(spec, &mut RngStream::new(5, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_model_predicts_uniform() {
        let mut rng = RngStream::new(2, 0);
        for head in [Head::Binary, Head::ThreeClass] {
            let spec = ModelSpec::keis_bigru(12, 6, 8, head);
            let mut m = Model::build(spec.clone(), &mut rng).unwrap();
            m.zero_grads();
            let p = m.predict(&tokens(&spec, &[3, 4, 5])).unwrap();
            let expected = match head {
                Head::Binary => vec![0.5],
                Head::ThreeClass => vec![1.0 / 3.0; 3],
            };
            for (a, b) in p.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn eval_prediction_is_repeatable() {
        let mut rng = RngStream::new(3, 0);
        let spec = ModelSpec::bert_bi_head(5, 6, Head::Binary);
        let m = Model::build(spec, &mut rng).unwrap();
        let input = ModelInput::Contextual(ContextualInput {
            values: crate::numeric::init_params(crate::numeric::Init::GlorotUniform, &[6, 5], &mut rng).unwrap(),
            mask: vec![1, 1, 1, 1, 0, 0],
        });
        let a = m.predict(&input).unwrap();
        let b = m.predict(&input).unwrap();
        assert_eq!(a, b);
        assert!(a[0] > 0.0 && a[0] < 1.0);
    }

    #[test]
    fn wrong_input_mode_rejected() {
        let mut rng = RngStream::new(3, 0);
        let spec = ModelSpec::keis_bigru(12, 6, 8, Head::Binary);
        let m = Model::build(spec, &mut rng).unwrap();
        let input = ModelInput::Contextual(ContextualInput {
            values: Tensor::zeros(&[8, 6]),
            mask: vec![1; 8],
        });
        assert!(m.predict(&input).is_err());
    }
}
