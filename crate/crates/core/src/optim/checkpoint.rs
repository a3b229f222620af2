use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::layers::{ParamKind, Parameterized};
use crate::models::{EnsembleWeights, Model, ModelSpec};
use crate::numeric::{RngStream, Tensor};

const MAGIC: &[u8; 8] = b"TWNCKPT\0";
const VERSION: u32 = 1;

/// Everything needed to reload trained models: one model or an ensemble
/// pair, the token vocabulary, and free-form `key = value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub metadata: String,
    pub vocab: Vec<String>,
    pub members: Vec<Model>,
    /// Present exactly when there are two members.
    pub weights: Option<EnsembleWeights>,
}

impl Checkpoint {
    pub fn single(model: Model) -> Self {
        Checkpoint {
            metadata: String::new(),
            vocab: Vec::new(),
            members: vec![model],
            weights: None,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        match (self.members.len(), self.weights.is_some()) {
            (1, false) | (2, true) => {}
            _ => return Err(Error::invalid("a checkpoint holds one model, or two with ensemble weights")),
        }
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_bytes(&mut out, self.metadata.as_bytes());
        put_u32(&mut out, len_u32(self.vocab.len())?);
        for w in &self.vocab {
            put_bytes(&mut out, w.as_bytes());
        }
        put_u32(&mut out, self.members.len() as u32);
        if let Some(w) = self.weights {
            out.extend_from_slice(&w.bigru().to_le_bytes());
            out.extend_from_slice(&w.cnn().to_le_bytes());
        }
        for m in &self.members {
            let spec = m.spec().to_text();
            put_bytes(&mut out, spec.as_bytes());
            out.extend_from_slice(&Sha256::digest(spec.as_bytes()));
            let params = m.named_params();
            put_u32(&mut out, len_u32(params.len())?);
            for p in params {
                put_bytes(&mut out, p.name.as_bytes());
                out.push(p.kind.code());
                out.push(p.tensor.rank() as u8);
                for &d in p.tensor.shape() {
                    out.extend_from_slice(&(d as u64).to_le_bytes());
                }
                for v in p.tensor.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        let sum = Sha256::digest(&out);
        out.extend_from_slice(&sum);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8, "magic")? != MAGIC {
            return Err(r.corrupt_at(0, "not a checkpoint file (bad magic)"));
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(r.corrupt_at(8, format!("unsupported version {version}")));
        }
        let metadata = r.string("metadata")?;
        let n_words = r.u32("vocabulary size")? as usize;
        let mut vocab = Vec::with_capacity(n_words.min(1 << 16));
        for _ in 0..n_words {
            vocab.push(r.string("vocabulary word")?);
        }
        let member_offset = r.pos;
        let n_members = r.u32("member count")?;
        let weights = match n_members {
            1 => None,
            2 => {
                let at = r.pos;
                let (a, b) = (r.f64("ensemble weight")?, r.f64("ensemble weight")?);
                Some(EnsembleWeights::new(a, b).map_err(|e| r.corrupt_at(at as u64, e.to_string()))?)
            }
            n => return Err(r.corrupt_at(member_offset as u64, format!("member count {n}, expected 1 or 2"))),
        };
        let mut members = Vec::new();
        for _ in 0..n_members {
            members.push(r.member()?);
        }
        let body_end = r.pos;
        let stored = r.take(32, "checksum")?;
        if r.pos != bytes.len() {
            return Err(r.corrupt_at(r.pos as u64, "trailing bytes after checksum"));
        }
        if Sha256::digest(&bytes[..body_end]).as_slice() != stored {
            return Err(r.corrupt_at(body_end as u64, "checksum mismatch"));
        }
        Ok(Checkpoint {
            metadata,
            vocab,
            members,
            weights,
        })
    }

    /// Writes through a temporary file in the target directory, so the path
    /// holds either the previous content or the complete new file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        write_atomic(path, &bytes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    Checkpoint::single(model.clone()).save(path)
}

/// Loads a single-model checkpoint whose spec must equal `spec`.
pub fn load_checkpoint(path: &Path, spec: &ModelSpec) -> Result<Model> {
    let ckpt = Checkpoint::load(path)?;
    let model = ckpt
        .members
        .into_iter()
        .next()
        .ok_or_else(|| Error::invalid("checkpoint holds no model"))?;
    let (expected, found) = (spec.digest(), model.spec().digest());
    if expected != found {
        return Err(Error::SpecMismatch { expected, found });
    }
    Ok(model)
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u32(out, b.len() as u32);
    out.extend_from_slice(b);
}

fn len_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::invalid(format!("{n} entries exceed the checkpoint format")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn corrupt_at(&self, offset: u64, message: impl Into<String>) -> Error {
        Error::CorruptCheckpoint {
            offset,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            self.corrupt_at(
                self.pos as u64,
                format!("file ends while reading {what} ({n} bytes needed, {} left)", self.bytes.len() - self.pos),
            )
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let at = self.pos;
        let n = self.u32(what)? as usize;
        let b = self.take(n, what)?;
        String::from_utf8(b.to_vec()).map_err(|_| self.corrupt_at(at as u64, format!("{what} is not UTF-8")))
    }

    fn member(&mut self) -> Result<Model> {
        let spec_at = self.pos;
        let spec_text = self.string("model spec")?;
        let digest = self.take(32, "spec digest")?;
        if Sha256::digest(spec_text.as_bytes()).as_slice() != digest {
            return Err(self.corrupt_at(spec_at as u64, "spec digest does not match the stored spec"));
        }
        let spec = ModelSpec::from_text(&spec_text).map_err(|e| self.corrupt_at(spec_at as u64, e.to_string()))?;
        let mut model = Model::build(spec, &mut RngStream::new(0, 0))
            .map_err(|e| self.corrupt_at(spec_at as u64, e.to_string()))?;
        let layout: Vec<(String, ParamKind, Vec<usize>)> = model
            .named_params()
            .into_iter()
            .map(|p| (p.name, p.kind, p.tensor.shape().to_vec()))
            .collect();
        let count_at = self.pos;
        let n = self.u32("parameter count")? as usize;
        if n != layout.len() {
            return Err(self.corrupt_at(
                count_at as u64,
                format!("{n} parameters stored, the spec defines {}", layout.len()),
            ));
        }
        let mut tensors = Vec::with_capacity(n);
        for (name, kind, shape) in &layout {
            let at = self.pos;
            let stored_name = self.string("parameter name")?;
            let code = self.take(1, "parameter kind")?[0];
            let rank = self.take(1, "parameter rank")?[0] as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(self.u64("parameter dimension")?);
            }
            if &stored_name != name || ParamKind::from_code(code) != Some(*kind) || dims.iter().map(|&d| d as usize).ne(shape.iter().copied())
            {
                return Err(self.corrupt_at(
                    at as u64,
                    format!("parameter {stored_name:?} {dims:?} does not match expected {name:?} {shape:?}"),
                ));
            }
            let len: usize = shape.iter().product();
            let raw = self.take(len * 8, "parameter values")?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            tensors.push(Tensor::new(shape.clone(), data)?);
        }
        for (dst, src) in model.params_mut().into_iter().zip(tensors) {
            *dst = src;
        }
        Ok(model)
    }
}
