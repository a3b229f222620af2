use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numeric::Tensor;

pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";
pub const FRAME_PAD_TOKEN: &str = "[PAD]";

/// Token sequence framed for a transformer encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramedInput {
    pub tokens: Vec<String>,
    pub mask: Vec<u8>,
}

impl FramedInput {
    /// The `[CLS] … [SEP]` part, without padding.
    pub fn real_tokens(&self) -> &[String] {
        let n = self.mask.iter().filter(|&&m| m == 1).count();
        &self.tokens[..n]
    }
}

/// `[CLS] tokens [SEP]` right-padded to `max_len`; at most `max_len - 2`
/// tokens are kept.
pub fn prepare_contextual_input(tokens: &[String], max_len: usize) -> Result<FramedInput> {
    if max_len < 3 {
        return Err(Error::invalid(format!("contextual max_len must be at least 3, got {max_len}")));
    }
    let kept = tokens.len().min(max_len - 2);
    let mut out = Vec::with_capacity(max_len);
    out.push(CLS_TOKEN.to_string());
    out.extend(tokens[..kept].iter().cloned());
    out.push(SEP_TOKEN.to_string());
    let real = out.len();
    out.resize(max_len, FRAME_PAD_TOKEN.to_string());
    let mut mask = vec![0; max_len];
    mask[..real].fill(1);
    Ok(FramedInput { tokens: out, mask })
}

/// Per-position contextual vectors padded to a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualInput {
    /// `[max_len × dim]`, zero rows after the masked prefix
    pub values: Tensor,
    pub mask: Vec<u8>,
}

impl ContextualInput {
    /// Pads the `[n × dim]` vectors of one framed sequence to `max_len`.
    pub fn from_vectors(vectors: &Tensor, max_len: usize) -> Result<Self> {
        if vectors.rank() != 2 {
            return Err(Error::invalid("contextual vectors must be rank 2"));
        }
        let (n, d) = (vectors.rows(), vectors.cols());
        if n > max_len {
            return Err(Error::Data(format!(
                "contextual sequence of {n} positions exceeds max length {max_len}"
            )));
        }
        let mut data = vectors.data().to_vec();
        data.resize(max_len * d, 0.0);
        let mut mask = vec![0; max_len];
        mask[..n].fill(1);
        Ok(ContextualInput {
            values: Tensor::new(vec![max_len, d], data)?,
            mask,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextualRecord {
    pub id: String,
    /// `[positions × dim]`
    pub vectors: Tensor,
}

/// Precomputed encoder output for a set of records.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualFile {
    pub dim: usize,
    pub records: Vec<ContextualRecord>,
}

const MAGIC: &str = "CTXEMB";

impl ContextualFile {
    pub fn get(&self, id: &str) -> Option<&ContextualRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Text form: a `CTXEMB 1 <dim>` header, then per record a line
    /// `@<id> <positions>` followed by one line of `dim` numbers per position.
    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC} 1 {}\n", self.dim);
        for r in &self.records {
            let _ = writeln!(s, "@{} {}", r.id, r.vectors.rows());
            for t in 0..r.vectors.rows() {
                let row: Vec<String> = r.vectors.row(t).iter().map(|v| v.to_string()).collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
        }
        s
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, msg: String| Error::parse(source_name, line, msg);
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty contextual file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let dim = match fields.as_slice() {
            [MAGIC, "1", d] => d
                .parse::<usize>()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| err(1, format!("invalid dimension {d:?}")))?,
            _ => return Err(err(1, format!("expected header \"{MAGIC} 1 <dim>\", found {header:?}"))),
        };
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        while let Some((ln, line)) = lines.next() {
            if line.trim().is_empty() {
                continue;
            }
            let rest = line
                .strip_prefix('@')
                .ok_or_else(|| err(ln, format!("expected record header \"@<id> <positions>\", found {line:?}")))?;
            let (id, n) = rest
                .rsplit_once(' ')
                .ok_or_else(|| err(ln, "record header lacks a position count".into()))?;
            if id.is_empty() || id.contains(char::is_whitespace) {
                return Err(err(ln, format!("invalid record id {id:?}")));
            }
            let n: usize = n
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| err(ln, format!("invalid position count {n:?}")))?;
            if !seen.insert(id.to_string()) {
                return Err(err(ln, format!("duplicate record id {id:?}")));
            }
            let mut data = Vec::with_capacity(n * dim);
            for _ in 0..n {
                let (vl, row) = lines
                    .next()
                    .ok_or_else(|| err(ln, format!("record {id:?} ends before its {n} positions")))?;
                let before = data.len();
                for field in row.split_whitespace() {
                    let v: f64 = field
                        .parse()
                        .map_err(|_| err(vl, format!("non-numeric value {field:?}")))?;
                    if !v.is_finite() {
                        return Err(err(vl, format!("non-finite value {field:?}")));
                    }
                    data.push(v);
                }
                if data.len() - before != dim {
                    return Err(err(vl, format!("expected {dim} values, found {}", data.len() - before)));
                }
            }
            records.push(ContextualRecord {
                id: id.to_string(),
                vectors: Tensor::new(vec![n, dim], data)?,
            });
        }
        Ok(ContextualFile { dim, records })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}
