//! Small generated corpora with a planted, linearly separable signal. The
//! bundled files under `data/synthetic/` are the output of
//! [`SmokeCorpus::generate`] with the default seed.

use crate::data_eval::{DataRecord, Dataset, LabelSchema, Task};
use crate::embed_aug::EmbeddingTable;
use crate::error::Result;
use crate::numeric::{RngStream, Tensor};
use crate::textprep::{clean_text, prepare_contextual_input, tokenize, CleanConfig, ContextualFile, ContextualRecord, Language};

pub const SMOKE_SEED: u64 = 20;
pub const EMBED_DIM: usize = 8;

pub const OFFENSIVE_WORDS: [&str; 6] = ["zorg", "blat", "krix", "mung", "drab", "snek"];
pub const BENIGN_WORDS: [&str; 6] = ["sunny", "kind", "glad", "calm", "warm", "neat"];
pub const FILLER_WORDS: [&str; 12] = [
    "the", "day", "we", "go", "see", "it", "and", "now", "that", "was", "here", "they",
];

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn marker_vector(axis: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..EMBED_DIM)
        .map(|j| round4(if j == axis { 1.0 } else { 0.0 } + rng.normal(0.0, 0.08)))
        .collect()
}

fn filler_vector(rng: &mut RngStream) -> Vec<f64> {
    (0..EMBED_DIM)
        .map(|j| round4(if j < 2 { rng.normal(0.0, 0.05) } else { rng.normal(0.0, 0.5) }))
        .collect()
}

/// Raw tweet around the given core tokens, with the kind of noise the
/// cleaner removes.
fn decorate(tokens: &[&str], rng: &mut RngStream) -> String {
    let mut words: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
    if rng.bernoulli(0.4) {
        words.insert(0, "@USER".into());
    }
    if rng.bernoulli(0.3) {
        let i = rng.below(words.len());
        let w = &mut words[i];
        let tail: Vec<char> = w.chars().rev().take(2).collect();
        if tail.len() == 2 && tail[0] != tail[1] {
            w.push_str(&tail[0].to_string().repeat(3));
        }
    }
    if rng.bernoulli(0.3) {
        words.push(["!!", "?", "...", ":)"][rng.below(4)].into());
    }
    if rng.bernoulli(0.15) {
        words.push("https://t.co/x".into());
    }
    words.join(" ")
}

fn tweet(markers: &[&str], twins: Option<&[String]>, rng: &mut RngStream) -> Vec<String> {
    let n_fill = 3 + rng.below(4);
    let mut tokens: Vec<String> = (0..n_fill).map(|_| FILLER_WORDS[rng.below(FILLER_WORDS.len())].to_string()).collect();
    for _ in 0..1 + rng.below(2) {
        let k = rng.below(markers.len());
        let word = match twins {
            Some(t) => t[k].clone(),
            None => markers[k].to_string(),
        };
        let at = rng.below(tokens.len() + 1);
        tokens.insert(at, word);
    }
    tokens
}

/// Contextual vectors for a cleaned token sequence: each position mixes its
/// word vector with the sentence mean and a positional wave; `[CLS]` holds
/// the mean and `[SEP]` a constant.
pub fn contextual_vectors(tokens: &[String], table: &EmbeddingTable, max_len: usize) -> Result<Tensor> {
    let framed = prepare_contextual_input(tokens, max_len)?;
    let real = framed.real_tokens();
    let zero = vec![0.0; table.dim()];
    let vecs: Vec<&[f64]> = real[1..real.len() - 1]
        .iter()
        .map(|t| table.get(t).unwrap_or(&zero))
        .collect();
    let mut mean = vec![0.0; table.dim()];
    for v in &vecs {
        for (m, x) in mean.iter_mut().zip(*v) {
            *m += x / vecs.len().max(1) as f64;
        }
    }
    let mut rows = Vec::with_capacity(real.len());
    rows.push(mean.iter().map(|&m| round4(m)).collect::<Vec<_>>());
    for (p, v) in vecs.iter().enumerate() {
        rows.push(
            v.iter()
                .zip(&mean)
                .enumerate()
                .map(|(j, (x, m))| round4(0.8 * x + 0.2 * m + 0.05 * ((p + 1) as f64 * (j + 1) as f64 * 0.3).sin()))
                .collect(),
        );
    }
    rows.push((0..table.dim()).map(|j| if j == table.dim() - 1 { 0.5 } else { 0.0 }).collect());
    Tensor::from_rows(&rows)
}

/// The 32-example offensive/not-offensive corpus (sub-task A schema).
#[derive(Debug, Clone, PartialEq)]
pub struct SmokeCorpus {
    pub train: Dataset,
    pub embeddings: EmbeddingTable,
    pub contextual: ContextualFile,
}

impl SmokeCorpus {
    pub fn generate(seed: u64) -> Result<Self> {
        let mut rng = RngStream::new(seed, 0);
        let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
        for w in OFFENSIVE_WORDS {
            entries.push((w.into(), marker_vector(0, &mut rng)));
        }
        for w in BENIGN_WORDS {
            entries.push((w.into(), marker_vector(1, &mut rng)));
        }
        for w in FILLER_WORDS {
            entries.push((w.into(), filler_vector(&mut rng)));
        }
        let embeddings = EmbeddingTable::from_entries(EMBED_DIM, &entries)?;
        let schema = LabelSchema::for_task(Task::A);
        let clean = CleanConfig::for_language(Language::English);
        let mut records = Vec::new();
        let mut ctx = Vec::new();
        for i in 0..32 {
            let label = i % 2;
            let markers: &[&str] = if label == 1 { &OFFENSIVE_WORDS } else { &BENIGN_WORDS };
            let tokens = tweet(markers, None, &mut rng);
            let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
            let text = decorate(&refs, &mut rng);
            let id = format!("s{:03}", i + 1);
            let cleaned = tokenize(&clean_text(&text, &clean));
            ctx.push(ContextualRecord {
                id: id.clone(),
                vectors: contextual_vectors(&cleaned, &embeddings, crate::models::DEFAULT_MAX_LEN)?,
            });
            records.push(DataRecord {
                id,
                text,
                label: Some(label),
            });
        }
        Ok(SmokeCorpus {
            train: Dataset::new(schema, records)?,
            embeddings,
            contextual: ContextualFile {
                dim: EMBED_DIM,
                records: ctx,
            },
        })
    }
}

/// Corpus for the augmentation comparison. Every marker word has a twin
/// with a nearly identical vector; training tweets use base markers only,
/// held-out tweets use base markers and twins in equal measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinCorpus {
    pub train: Dataset,
    pub held_out: Dataset,
    pub embeddings: EmbeddingTable,
}

pub fn twin_word(word: &str) -> String {
    format!("{word}x")
}

impl TwinCorpus {
    pub fn generate(seed: u64, n_train: usize, n_held_out: usize) -> Result<Self> {
        let mut rng = RngStream::new(seed, 1);
        let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
        for (pool, axis) in [(&OFFENSIVE_WORDS, 0), (&BENIGN_WORDS, 1)] {
            for w in pool.iter() {
                let v = marker_vector(axis, &mut rng);
                let twin: Vec<f64> = v.iter().map(|x| round4(x + rng.normal(0.0, 0.03))).collect();
                entries.push((w.to_string(), v));
                entries.push((twin_word(w), twin));
            }
        }
        for w in FILLER_WORDS {
            entries.push((w.into(), filler_vector(&mut rng)));
        }
        let embeddings = EmbeddingTable::from_entries(EMBED_DIM, &entries)?;
        let schema = LabelSchema::for_task(Task::A);
        let twins_of = |pool: &[&str]| pool.iter().map(|w| twin_word(w)).collect::<Vec<_>>();
        let (off_twins, ben_twins) = (twins_of(&OFFENSIVE_WORDS), twins_of(&BENIGN_WORDS));
        let make = |n: usize, prefix: &str, twin_rate: f64, rng: &mut RngStream| -> Result<Dataset> {
            let mut records = Vec::with_capacity(n);
            for i in 0..n {
                let label = i % 2;
                let (markers, twins): (&[&str], &[String]) = if label == 1 {
                    (&OFFENSIVE_WORDS, &off_twins)
                } else {
                    (&BENIGN_WORDS, &ben_twins)
                };
                let use_twins = rng.bernoulli(twin_rate);
                let tokens = tweet(markers, use_twins.then_some(twins), rng);
                records.push(DataRecord {
                    id: format!("{prefix}{:04}", i + 1),
                    text: tokens.join(" "),
                    label: Some(label),
                });
            }
            Dataset::new(schema.clone(), records)
        };
        let train = make(n_train, "t", 0.0, &mut rng)?;
        let held_out = make(n_held_out, "h", 0.5, &mut rng)?;
        Ok(TwinCorpus {
            train,
            held_out,
            embeddings,
        })
    }
}
