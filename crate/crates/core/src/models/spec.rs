use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// BiGRU width per direction in the word-embedding model.
pub const BIGRU_HIDDEN: usize = 128;
/// Standard deviation of the training-time Gaussian noise layers.
pub const NOISE_STDDEV: f64 = 0.1;
/// Width of the hidden dense layer in both word-embedding models.
pub const DENSE_UNITS: usize = 35;
pub const BIGRU_DROPOUT: f64 = 0.2;
pub const CNN_DROPOUT: f64 = 0.25;
pub const CNN_HEIGHTS: [usize; 4] = [1, 3, 5, 7];
pub const CNN_FILTERS: usize = 36;
/// Bi-LSTM and Bi-GRU width per direction in the contextual head.
pub const CONTEXT_RNN_HIDDEN: usize = 300;
pub const CONTEXT_DROPOUT: f64 = 0.2;
/// Truncated-normal stddev of the contextual head's output kernel.
pub const CONTEXT_HEAD_STDDEV: f64 = 0.02;
/// Default fixed sequence length for both input modes.
pub const DEFAULT_MAX_LEN: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    KeisBigru,
    KeisCnn,
    BertBiHead,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::KeisBigru => "keis_bigru",
            Architecture::KeisCnn => "keis_cnn",
            Architecture::BertBiHead => "bert_bi_head",
        }
    }

    pub fn input_mode(self) -> InputMode {
        match self {
            Architecture::BertBiHead => InputMode::Contextual,
            _ => InputMode::Tokens,
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keis_bigru" => Ok(Architecture::KeisBigru),
            "keis_cnn" => Ok(Architecture::KeisCnn),
            "bert_bi_head" => Ok(Architecture::BertBiHead),
            other => Err(Error::invalid(format!("unknown architecture '{other}'"))),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputMode {
    /// Token ids looked up in an embedding table.
    Tokens,
    /// Precomputed per-token contextual vectors from an external encoder.
    Contextual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    /// One sigmoid unit: P(positive class).
    Binary,
    /// Three softmax units.
    ThreeClass,
}

impl Head {
    pub fn outputs(self) -> usize {
        match self {
            Head::Binary => 1,
            Head::ThreeClass => 3,
        }
    }

    pub fn classes(self) -> usize {
        match self {
            Head::Binary => 2,
            Head::ThreeClass => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Head::Binary => "binary",
            Head::ThreeClass => "three_class",
        }
    }

    pub fn for_classes(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Head::Binary),
            3 => Ok(Head::ThreeClass),
            _ => Err(Error::invalid(format!("no output head for {n} classes"))),
        }
    }
}

/// Declarative architecture description. Layer widths, noise and dropout
/// rates are fixed constants of each architecture; only the input
/// geometry, the head, and two switches vary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub head: Head,
    /// Rows of the embedding table, including the padding and OOV rows.
    /// Zero for contextual input.
    pub vocab_size: usize,
    /// Embedding width, or contextual vector width.
    pub input_dim: usize,
    pub seq_len: usize,
    pub train_embeddings: bool,
    /// Contextual head only: run the second recurrent layer in both
    /// directions (otherwise forward only).
    pub second_rnn_bidirectional: bool,
}

impl ModelSpec {
    pub fn keis_bigru(vocab_size: usize, embed_dim: usize, seq_len: usize, head: Head) -> Self {
        ModelSpec {
            architecture: Architecture::KeisBigru,
            head,
            vocab_size,
            input_dim: embed_dim,
            seq_len,
            train_embeddings: false,
            second_rnn_bidirectional: true,
        }
    }

    pub fn keis_cnn(vocab_size: usize, embed_dim: usize, seq_len: usize, head: Head) -> Self {
        ModelSpec {
            architecture: Architecture::KeisCnn,
            ..Self::keis_bigru(vocab_size, embed_dim, seq_len, head)
        }
    }

    pub fn bert_bi_head(context_dim: usize, seq_len: usize, head: Head) -> Self {
        ModelSpec {
            architecture: Architecture::BertBiHead,
            head,
            vocab_size: 0,
            input_dim: context_dim,
            seq_len,
            train_embeddings: false,
            second_rnn_bidirectional: true,
        }
    }

    pub fn input_mode(&self) -> InputMode {
        self.architecture.input_mode()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(format!("inconsistent model spec: {msg}")));
        if self.input_dim == 0 {
            return bad("input dimension must be positive".into());
        }
        if self.seq_len == 0 {
            return bad("sequence length must be positive".into());
        }
        match self.architecture {
            Architecture::KeisBigru | Architecture::KeisCnn => {
                if self.vocab_size < 2 {
                    return bad("token models need a vocabulary with padding and OOV rows".into());
                }
            }
            Architecture::BertBiHead => {
                if self.vocab_size != 0 {
                    return bad("contextual input takes no vocabulary".into());
                }
                if self.train_embeddings {
                    return bad("contextual input has no embedding table to train".into());
                }
                if self.seq_len < 3 {
                    return bad("contextual sequences need room for [CLS] and [SEP]".into());
                }
            }
        }
        let min = CNN_HEIGHTS.iter().max().copied().unwrap_or(1);
        if self.architecture == Architecture::KeisCnn && self.seq_len < min {
            return bad(format!(
                "keis_cnn needs a sequence length of at least {min}, got {}",
                self.seq_len
            ));
        }
        Ok(())
    }

    /// Canonical text form; stored in checkpoints and hashed for the digest.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("architecture", self.architecture.name().into());
        kv("head", self.head.name().into());
        kv(
            "input",
            match self.input_mode() {
                InputMode::Tokens => "tokens".into(),
                InputMode::Contextual => "contextual".into(),
            },
        );
        kv("vocab_size", self.vocab_size.to_string());
        kv("input_dim", self.input_dim.to_string());
        kv("seq_len", self.seq_len.to_string());
        kv("train_embeddings", self.train_embeddings.to_string());
        kv("second_rnn_bidirectional", self.second_rnn_bidirectional.to_string());
        kv("hyperparameters", hyperparameter_line(self.architecture));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut architecture = None;
        let mut head = None;
        let mut input = None;
        let mut vocab_size = None;
        let mut input_dim = None;
        let mut seq_len = None;
        let mut train_embeddings = None;
        let mut second = None;
        let mut hyper = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse("model spec", n + 1, m);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<usize>().map_err(|_| err(format!("bad integer '{v}' for {k}")));
            let flag = |v: &str| v.parse::<bool>().map_err(|_| err(format!("bad boolean '{v}' for {k}")));
            match k {
                "architecture" => architecture = Some(v.parse::<Architecture>()?),
                "head" => {
                    head = Some(match v {
                        "binary" => Head::Binary,
                        "three_class" => Head::ThreeClass,
                        _ => return Err(err(format!("unknown head '{v}'"))),
                    })
                }
                "input" => input = Some(v.to_string()),
                "vocab_size" => vocab_size = Some(num(v)?),
                "input_dim" => input_dim = Some(num(v)?),
                "seq_len" => seq_len = Some(num(v)?),
                "train_embeddings" => train_embeddings = Some(flag(v)?),
                "second_rnn_bidirectional" => second = Some(flag(v)?),
                "hyperparameters" => hyper = Some(v.to_string()),
                _ => return Err(err(format!("unknown key '{k}'"))),
            }
        }
        let missing = |k: &str| Error::parse("model spec", 0, format!("missing key '{k}'"));
        let spec = ModelSpec {
            architecture: architecture.ok_or_else(|| missing("architecture"))?,
            head: head.ok_or_else(|| missing("head"))?,
            vocab_size: vocab_size.ok_or_else(|| missing("vocab_size"))?,
            input_dim: input_dim.ok_or_else(|| missing("input_dim"))?,
            seq_len: seq_len.ok_or_else(|| missing("seq_len"))?,
            train_embeddings: train_embeddings.ok_or_else(|| missing("train_embeddings"))?,
            second_rnn_bidirectional: second.ok_or_else(|| missing("second_rnn_bidirectional"))?,
        };
        let input = input.ok_or_else(|| missing("input"))?;
        let expected_input = match spec.input_mode() {
            InputMode::Tokens => "tokens",
            InputMode::Contextual => "contextual",
        };
        if input != expected_input {
            return Err(Error::invalid(format!(
                "{} takes {expected_input} input, spec says '{input}'",
                spec.architecture
            )));
        }
        let hyper = hyper.ok_or_else(|| missing("hyperparameters"))?;
        if hyper != hyperparameter_line(spec.architecture) {
            return Err(Error::invalid(format!(
                "unsupported hyperparameters for {}: '{hyper}'",
                spec.architecture
            )));
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Hex SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        digest_hex(self.to_text().as_bytes())
    }
}

pub(crate) fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn hyperparameter_line(arch: Architecture) -> String {
    match arch {
        Architecture::KeisBigru => format!(
            "bigru={BIGRU_HIDDEN} noise={NOISE_STDDEV} pool=average dense={DENSE_UNITS} dropout={BIGRU_DROPOUT}"
        ),
        Architecture::KeisCnn => format!(
            "noise={NOISE_STDDEV} conv={:?}x{CNN_FILTERS} pool=max dropout={CNN_DROPOUT} dense={DENSE_UNITS}",
            CNN_HEIGHTS
        ),
        Architecture::BertBiHead => format!(
            "noise={NOISE_STDDEV} bilstm={CONTEXT_RNN_HIDDEN} gru={CONTEXT_RNN_HIDDEN} pool=average dropout={CONTEXT_DROPOUT} head_init=truncated_normal({CONTEXT_HEAD_STDDEV})"
        ),
    }
}
