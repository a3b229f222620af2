use crate::error::{Error, Result};
use crate::layers::{NamedParam, ParamKind, Parameterized};
use crate::numeric::{axpy, Tensor};

/// Token-id lookup into a `[vocab × dim]` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub table: Tensor,
    pub trainable: bool,
}

impl Embedding {
    pub fn new(table: Tensor, trainable: bool) -> Result<Self> {
        if table.rank() != 2 {
            return Err(Error::invalid("embedding table must be rank 2"));
        }
        Ok(Embedding { table, trainable })
    }

    pub fn vocab_size(&self) -> usize {
        self.table.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn lookup(&self, ids: &[usize]) -> Result<Tensor> {
        if ids.is_empty() {
            return Err(Error::invalid("embedding lookup of an empty sequence"));
        }
        let d = self.dim();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= self.vocab_size() {
                return Err(Error::invalid(format!(
                    "token id {id} outside vocabulary of {}",
                    self.vocab_size()
                )));
            }
            out.extend_from_slice(self.table.row(id));
        }
        Tensor::new(vec![ids.len(), d], out)
    }

    /// Scatter-adds row gradients into `grads.table`.
    pub fn backward(&self, ids: &[usize], grad_out: &Tensor, grads: &mut Embedding) -> Result<()> {
        if grad_out.shape() != [ids.len(), self.dim()] {
            return Err(Error::DimensionMismatch {
                op: "embedding backward",
                left: vec![ids.len(), self.dim()],
                right: grad_out.shape().to_vec(),
            });
        }
        for (t, &id) in ids.iter().enumerate() {
            axpy(1.0, grad_out.row(t), grads.table.row_mut(id));
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        Embedding {
            table: self.table.zeros_like(),
            trainable: self.trainable,
        }
    }
}

impl Parameterized for Embedding {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        let mut p = NamedParam::new("table", ParamKind::Embedding, &self.table);
        p.trainable = self.trainable;
        vec![p]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.table]
    }
}
