use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{RngStream, Tensor};
use crate::textprep::{Vocab, PAD_ID};

/// Word vectors read from word2vec text format.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f64>,
    norms: Vec<f64>,
}

fn is_header(fields: &[&str]) -> bool {
    fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok())
}

impl EmbeddingTable {
    pub fn from_entries<S: AsRef<str>>(dim: usize, entries: &[(S, Vec<f64>)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        let mut t = EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
        };
        for (w, v) in entries {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    op: "embedding entry",
                    left: vec![dim],
                    right: vec![v.len()],
                });
            }
            t.push(w.as_ref(), v);
        }
        Ok(t)
    }

    fn push(&mut self, word: &str, v: &[f64]) -> bool {
        if self.index.contains_key(word) {
            return false;
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.norms.push(v.iter().map(|x| x * x).sum::<f64>().sqrt());
        self.vectors.extend_from_slice(v);
        true
    }

    /// Parses word2vec text: an optional `count dim` header, then one word
    /// and its values per line. A repeated word keeps its first vector.
    pub fn parse(text: &str, source_name: &str, expected_dim: Option<usize>) -> Result<Self> {
        let mut dim = None;
        let mut declared = None;
        let mut t = EmbeddingTable {
            dim: 0,
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
        };
        let mut row = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && is_header(&fields) {
                let d: usize = fields[1].parse().unwrap();
                if d == 0 {
                    return Err(Error::parse(source_name, ln, "header declares dimension 0"));
                }
                declared = Some(fields[0].parse::<usize>().unwrap());
                dim = Some(d);
                continue;
            }
            let values = &fields[1..];
            let d = *dim.get_or_insert(values.len());
            if d == 0 {
                return Err(Error::parse(source_name, ln, format!("word {:?} has no values", fields[0])));
            }
            if values.len() != d {
                return Err(Error::parse(
                    source_name,
                    ln,
                    format!("expected {d} values for {:?}, found {}", fields[0], values.len()),
                ));
            }
            row.clear();
            for v in values {
                let x: f64 = v
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| Error::parse(source_name, ln, format!("non-numeric value {v:?}")))?;
                row.push(x);
            }
            if !t.push(fields[0], &row) {
                log::warn!("{source_name}:{ln}: duplicate word {:?} ignored, first vector kept", fields[0]);
            }
        }
        let dim = dim.ok_or_else(|| Error::parse(source_name, 1, "no embedding vectors"))?;
        if let Some(expected) = expected_dim {
            if expected != dim {
                return Err(Error::Data(format!(
                    "{source_name}: embedding dimension {dim} does not match the expected {expected}"
                )));
            }
        }
        if let Some(n) = declared {
            if n != t.len() {
                log::warn!("{source_name}: header declares {n} words, file holds {}", t.len());
            }
        }
        t.dim = dim;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vector(i))
    }

    fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Cosine similarity; 0 when either vector is zero.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (i, j) = (*self.index.get(a)?, *self.index.get(b)?);
        Some(self.cosine_idx(i, j))
    }

    fn cosine_idx(&self, i: usize, j: usize) -> f64 {
        let den = self.norms[i] * self.norms[j];
        if den == 0.0 {
            return 0.0;
        }
        let dot: f64 = self.vector(i).iter().zip(self.vector(j)).map(|(x, y)| x * y).sum();
        dot / den
    }

    /// Embedding matrix rows for `vocab`. Words missing from the table (and
    /// the OOV row) draw uniform ±0.05; the padding row is zero. Returns the
    /// matrix and how many vocabulary words were found.
    pub fn matrix_for(&self, vocab: &Vocab, rng: &mut RngStream) -> (Tensor, usize) {
        let mut m = Tensor::zeros(&[vocab.len(), self.dim]);
        let mut found = 0;
        for (id, w) in vocab.words().iter().enumerate() {
            if id == PAD_ID {
                continue;
            }
            let row = m.row_mut(id);
            match self.get(w) {
                Some(v) => {
                    row.copy_from_slice(v);
                    found += 1;
                }
                None => row.iter_mut().for_each(|x| *x = rng.uniform(-0.05, 0.05)),
            }
        }
        (m, found)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            s.push_str(w);
            for v in self.vector(i) {
                s.push(' ');
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        s
    }
}

pub fn load_embeddings(path: &Path, expected_dim: Option<usize>) -> Result<EmbeddingTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::parse(&text, &path.display().to_string(), expected_dim)
}

/// Exact top-`k` neighbors of `word` by cosine, excluding `word` itself;
/// equal similarities are ordered by word.
pub fn nearest_neighbors(word: &str, table: &EmbeddingTable, k: usize) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let q = *table
        .index
        .get(word)
        .ok_or_else(|| Error::Data(format!("word {word:?} not in the embedding table")))?;
    let mut scored: Vec<(usize, f64)> = (0..table.len())
        .filter(|&j| j != q)
        .map(|j| (j, table.cosine_idx(q, j)))
        .collect();
    let cmp = |a: &(usize, f64), b: &(usize, f64)| {
        b.1.total_cmp(&a.1).then_with(|| table.words[a.0].cmp(&table.words[b.0]))
    };
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    Ok(scored.into_iter().map(|(j, c)| (table.words[j].clone(), c)).collect())
}
