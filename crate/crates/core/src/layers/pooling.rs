use crate::error::{Error, Result};
use crate::numeric::{axpy, Tensor};

/// Mean over the time steps whose mask entry is 1.
pub fn global_average_pool(seq: &Tensor, mask: &[u8]) -> Result<Vec<f64>> {
    let n = check_mask(seq.shape(), mask)?;
    let mut out = vec![0.0; seq.cols()];
    for (t, &m) in mask.iter().enumerate() {
        if m != 0 {
            axpy(1.0, seq.row(t), &mut out);
        }
    }
    out.iter_mut().for_each(|v| *v /= n as f64);
    Ok(out)
}

/// Gradient of [`global_average_pool`]; masked-out steps get zero.
pub fn global_average_pool_backward(shape: &[usize], mask: &[u8], grad: &[f64]) -> Result<Tensor> {
    let n = check_mask(shape, mask)?;
    if grad.len() != shape[1] {
        return Err(Error::DimensionMismatch {
            op: "average pool backward",
            left: shape.to_vec(),
            right: vec![grad.len()],
        });
    }
    let mut out = Tensor::zeros(shape);
    for (t, &m) in mask.iter().enumerate() {
        if m != 0 {
            axpy(1.0 / n as f64, grad, out.row_mut(t));
        }
    }
    Ok(out)
}

fn check_mask(shape: &[usize], mask: &[u8]) -> Result<usize> {
    if shape.len() != 2 || shape[0] != mask.len() {
        return Err(Error::DimensionMismatch {
            op: "average pool",
            left: shape.to_vec(),
            right: vec![mask.len()],
        });
    }
    let n = mask.iter().filter(|&&m| m != 0).count();
    if n == 0 {
        return Err(Error::invalid("average pooling needs at least one unmasked step"));
    }
    Ok(n)
}
