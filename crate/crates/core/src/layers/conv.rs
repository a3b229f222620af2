use crate::error::{Error, Result};
use crate::layers::{NamedParam, ParamKind, Parameterized};
use crate::numeric::{gemm, init_params, Init, MatRef, RngStream, Tensor};

/// One convolution branch of the text CNN: filters span the full embedding
/// width, stride one, no padding, followed by max-over-time pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBranch {
    /// `[height × embed_dim × filters]`
    pub filters: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub struct BranchTrace {
    input: Tensor,
    argmax: Vec<usize>,
    map_len: usize,
}

impl ConvBranch {
    pub fn new(height: usize, embed_dim: usize, n_filters: usize, rng: &mut RngStream) -> Result<Self> {
        Ok(ConvBranch {
            filters: init_params(Init::GlorotUniform, &[height, embed_dim, n_filters], rng)?,
            bias: Tensor::zeros(&[n_filters]),
        })
    }

    pub fn zeros(height: usize, embed_dim: usize, n_filters: usize) -> Self {
        ConvBranch {
            filters: Tensor::zeros(&[height, embed_dim, n_filters]),
            bias: Tensor::zeros(&[n_filters]),
        }
    }

    pub fn height(&self) -> usize {
        self.filters.shape()[0]
    }

    pub fn embed_dim(&self) -> usize {
        self.filters.shape()[1]
    }

    pub fn n_filters(&self) -> usize {
        self.filters.shape()[2]
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.rank() != 2 || x.cols() != self.embed_dim() {
            return Err(Error::DimensionMismatch {
                op: "conv",
                left: vec![self.height(), self.embed_dim()],
                right: x.shape().to_vec(),
            });
        }
        if x.rows() < self.height() {
            return Err(Error::invalid(format!(
                "sequence of length {} is shorter than filter height {}",
                x.rows(),
                self.height()
            )));
        }
        Ok(())
    }

    /// Valid convolution over time: `[len - height + 1 × filters]`.
    pub fn feature_map(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let (d, h, f) = (self.embed_dim(), self.height(), self.n_filters());
        let positions = x.rows() - h + 1;
        let mut out = Tensor::zeros(&[positions, f]);
        for row in out.data_mut().chunks_exact_mut(f) {
            row.copy_from_slice(self.bias.data());
        }
        // windows of `h` consecutive rows are contiguous in row-major storage,
        // so the im2col matrix is just an overlapping strided view
        gemm(
            positions,
            h * d,
            f,
            MatRef {
                data: x.data(),
                row_stride: d as isize,
                col_stride: 1,
            },
            MatRef::row_major(self.filters.data(), f),
            out.data_mut(),
            true,
        );
        Ok(out)
    }

    /// Backward of [`ConvBranch::feature_map`].
    pub fn feature_map_backward(&self, x: &Tensor, grad_map: &Tensor, grads: &mut ConvBranch) -> Result<Tensor> {
        self.check_input(x)?;
        let (d, h, f) = (self.embed_dim(), self.height(), self.n_filters());
        let positions = x.rows() - h + 1;
        if grad_map.shape() != [positions, f] {
            return Err(Error::DimensionMismatch {
                op: "conv backward",
                left: vec![positions, f],
                right: grad_map.shape().to_vec(),
            });
        }
        gemm(
            h * d,
            positions,
            f,
            MatRef {
                data: x.data(),
                row_stride: 1,
                col_stride: d as isize,
            },
            MatRef::row_major(grad_map.data(), f),
            grads.filters.data_mut(),
            true,
        );
        grad_map.col_sums_into(grads.bias.data_mut());
        let mut windows = vec![0.0; positions * h * d];
        gemm(
            positions,
            f,
            h * d,
            MatRef::row_major(grad_map.data(), f),
            MatRef::transposed(self.filters.data(), f),
            &mut windows,
            false,
        );
        let mut dx = Tensor::zeros(x.shape());
        for (t, w) in windows.chunks_exact(h * d).enumerate() {
            for (dst, v) in dx.data_mut()[t * d..t * d + h * d].iter_mut().zip(w) {
                *dst += v;
            }
        }
        Ok(dx)
    }

    /// Feature map followed by max-over-time pooling: one value per filter.
    pub fn forward(&self, x: &Tensor) -> Result<(Vec<f64>, BranchTrace)> {
        let map = self.feature_map(x)?;
        let (pooled, argmax) = max_over_time(&map);
        Ok((
            pooled,
            BranchTrace {
                input: x.clone(),
                argmax,
                map_len: map.rows(),
            },
        ))
    }

    pub fn backward(&self, trace: &BranchTrace, grad_pooled: &[f64], grads: &mut ConvBranch) -> Result<Tensor> {
        let grad_map = max_over_time_backward(&trace.argmax, grad_pooled, trace.map_len)?;
        self.feature_map_backward(&trace.input, &grad_map, grads)
    }

    pub fn zeros_like(&self) -> Self {
        ConvBranch::zeros(self.height(), self.embed_dim(), self.n_filters())
    }
}

impl Parameterized for ConvBranch {
    fn named_params(&self) -> Vec<NamedParam<'_>> {
        vec![
            NamedParam::new("filters", ParamKind::Kernel, &self.filters),
            NamedParam::new("bias", ParamKind::Bias, &self.bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.filters, &mut self.bias]
    }
}

/// Column-wise maximum of a `[len × channels]` map and the winning rows.
/// Ties go to the earliest position.
pub fn max_over_time(map: &Tensor) -> (Vec<f64>, Vec<usize>) {
    let c = map.cols();
    let mut best = map.row(0).to_vec();
    let mut argmax = vec![0; c];
    for t in 1..map.rows() {
        for (j, &v) in map.row(t).iter().enumerate() {
            if v > best[j] {
                best[j] = v;
                argmax[j] = t;
            }
        }
    }
    (best, argmax)
}

pub fn max_over_time_backward(argmax: &[usize], grad: &[f64], len: usize) -> Result<Tensor> {
    if argmax.len() != grad.len() || argmax.iter().any(|&t| t >= len) {
        return Err(Error::DimensionMismatch {
            op: "max-over-time backward",
            left: vec![argmax.len()],
            right: vec![grad.len()],
        });
    }
    let c = grad.len();
    let mut out = Tensor::zeros(&[len, c]);
    for (j, (&t, &g)) in argmax.iter().zip(grad).enumerate() {
        out.data_mut()[t * c + j] = g;
    }
    Ok(out)
}

/// Concatenated pooled features of every branch, in branch order.
pub fn cnn_feature_extract(branches: &[ConvBranch], input: &Tensor) -> Result<Vec<f64>> {
    let min_len = branches.iter().map(ConvBranch::height).max().unwrap_or(1);
    if input.rank() != 2 || input.rows() < min_len {
        return Err(Error::invalid(format!(
            "CNN input needs at least {min_len} time steps, got shape {:?}",
            input.shape()
        )));
    }
    let mut out = Vec::new();
    for branch in branches {
        out.extend(branch.forward(input)?.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_branches(d: usize, rng: &mut RngStream) -> Vec<ConvBranch> {
        [1, 3, 5, 7]
            .iter()
            .map(|&h| ConvBranch::new(h, d, 36, rng).unwrap())
            .collect()
    }

    #[test]
    fn map_length() {
        let b = ConvBranch::new(3, 4, 36, &mut RngStream::new(0, 0)).unwrap();
        let map = b.feature_map(&Tensor::zeros(&[60, 4])).unwrap();
        assert_eq!(map.shape(), &[58, 36]);
    }

    #[test]
    fn concat_width_and_zero_input() {
        let mut rng = RngStream::new(0, 0);
        let branches = default_branches(5, &mut rng);
        let out = cnn_feature_extract(&branches, &Tensor::zeros(&[10, 5])).unwrap();
        assert_eq!(out.len(), 144);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_input_names_minimum() {
        let mut rng = RngStream::new(0, 0);
        let branches = default_branches(5, &mut rng);
        let err = cnn_feature_extract(&branches, &Tensor::zeros(&[6, 5])).unwrap_err();
        assert!(err.to_string().contains("at least 7"), "{err}");
    }

    #[test]
    fn map_matches_direct_sum() {
        let mut rng = RngStream::new(3, 0);
        let b = ConvBranch::new(3, 2, 4, &mut rng).unwrap();
        let x = init_params(Init::GlorotUniform, &[6, 2], &mut rng).unwrap();
        let map = b.feature_map(&x).unwrap();
        for t in 0..4 {
            for f in 0..4 {
                let mut s = b.bias.data()[f];
                for i in 0..3 {
                    for j in 0..2 {
                        s += x.row(t + i)[j] * b.filters.data()[(i * 2 + j) * 4 + f];
                    }
                }
                assert!((map.row(t)[f] - s).abs() < 1e-12);
            }
        }
    }
}
