use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major array of `f64`.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.data.len() <= 16 {
            write!(f, "Tensor{:?}{:?}", self.shape, self.data)
        } else {
            write!(f, "Tensor{:?}[{} values]", self.shape, self.data.len())
        }
    }
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::invalid(format!(
                "tensor extents must be positive, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::invalid(format!(
                "shape {shape:?} holds {expected} values but {} were given",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        assert!(
            !shape.is_empty() && shape.iter().all(|&d| d > 0),
            "tensor extents must be positive, got {shape:?}"
        );
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "empty vector");
        Tensor {
            shape: vec![values.len()],
            data: values,
        }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], values)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Row count of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        debug_assert_eq!(self.rank(), 2);
        self.shape[0]
    }

    /// Column count of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        debug_assert_eq!(self.rank(), 2);
        self.shape[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() || shape.contains(&0) {
            return Err(Error::DimensionMismatch {
                op: "reshape",
                left: self.shape,
                right: shape,
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = Tensor::zeros(&[m, n]);
        gemm(
            m,
            k,
            n,
            MatRef::row_major(&self.data, k),
            MatRef::row_major(&other.data, n),
            &mut out.data,
            false,
        );
        Ok(out)
    }

    /// `self · x` for a rank-2 `self`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.rank() != 2 || self.shape[1] != x.len() {
            return Err(Error::DimensionMismatch {
                op: "matvec",
                left: self.shape.clone(),
                right: vec![x.len()],
            });
        }
        let mut out = vec![0.0; self.shape[0]];
        matvec_acc(&self.data, self.shape[1], x, &mut out);
        Ok(out)
    }

    pub fn transpose(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(Error::invalid("transpose needs a rank-2 tensor"));
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Tensor::new(vec![c, r], out)
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        self.axpy(1.0, other)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch {
                op: "axpy",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        axpy(alpha, &other.data, &mut self.data);
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy of rows in reverse order (time reversal of a sequence).
    pub fn reversed_rows(&self) -> Tensor {
        let c = self.cols();
        let mut out = Vec::with_capacity(self.data.len());
        for chunk in self.data.chunks_exact(c).rev() {
            out.extend_from_slice(chunk);
        }
        Tensor {
            shape: self.shape.clone(),
            data: out,
        }
    }

    /// First `n` rows of a rank-2 tensor.
    pub fn head_rows(&self, n: usize) -> Result<Tensor> {
        if n == 0 || n > self.rows() {
            return Err(Error::invalid(format!(
                "cannot take {n} rows of a {:?} tensor",
                self.shape
            )));
        }
        let c = self.cols();
        Tensor::new(vec![n, c], self.data[..n * c].to_vec())
    }

    /// Row-wise concatenation `[self | other]`.
    pub fn hcat(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.rows() != other.rows() {
            return Err(Error::DimensionMismatch {
                op: "hcat",
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        let (a, b) = (self.cols(), other.cols());
        let mut out = Vec::with_capacity(self.data.len() + other.data.len());
        for i in 0..self.rows() {
            out.extend_from_slice(&self.data[i * a..(i + 1) * a]);
            out.extend_from_slice(&other.data[i * b..(i + 1) * b]);
        }
        Tensor::new(vec![self.rows(), a + b], out)
    }

    /// Splits columns at `at`, the inverse of [`Tensor::hcat`].
    pub fn hsplit(&self, at: usize) -> Result<(Tensor, Tensor)> {
        let c = self.cols();
        if at == 0 || at >= c {
            return Err(Error::invalid(format!("cannot split {c} columns at {at}")));
        }
        let mut left = Vec::with_capacity(self.rows() * at);
        let mut right = Vec::with_capacity(self.rows() * (c - at));
        for row in self.data.chunks_exact(c) {
            left.extend_from_slice(&row[..at]);
            right.extend_from_slice(&row[at..]);
        }
        Ok((
            Tensor::new(vec![self.rows(), at], left)?,
            Tensor::new(vec![self.rows(), c - at], right)?,
        ))
    }

    /// Column sums of a rank-2 tensor, accumulated into `out`.
    pub(crate) fn col_sums_into(&self, out: &mut [f64]) {
        for row in self.data.chunks_exact(self.cols()) {
            axpy(1.0, row, out);
        }
    }
}

/// Borrowed matrix view with explicit strides, so transposes cost nothing.
#[derive(Clone, Copy)]
pub(crate) struct MatRef<'a> {
    pub data: &'a [f64],
    pub row_stride: isize,
    pub col_stride: isize,
}

impl<'a> MatRef<'a> {
    pub fn row_major(data: &'a [f64], cols: usize) -> Self {
        MatRef {
            data,
            row_stride: cols as isize,
            col_stride: 1,
        }
    }

    /// Transposed view of a row-major matrix with `cols` columns.
    pub fn transposed(data: &'a [f64], cols: usize) -> Self {
        MatRef {
            data,
            row_stride: 1,
            col_stride: cols as isize,
        }
    }
}

/// `c (m×n) = a (m×k) · b (k×n)`, or `c += a·b` when `accumulate` is set.
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: MatRef<'_>,
    b: MatRef<'_>,
    c: &mut [f64],
    accumulate: bool,
) {
    assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c[..m * n].fill(0.0);
        }
        return;
    }
    let last = |v: MatRef<'_>, rows: usize, cols: usize| {
        (rows as isize - 1) * v.row_stride + (cols as isize - 1) * v.col_stride
    };
    assert!((last(a, m, k) as usize) < a.data.len());
    assert!((last(b, k, n) as usize) < b.data.len());
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the asserts above bound the furthest element each strided view
    // touches, and `c` is a distinct, exclusively borrowed buffer of m×n.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride,
            a.col_stride,
            b.data.as_ptr(),
            b.row_stride,
            b.col_stride,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `out += W · x` where `W` is row-major with `cols` columns.
#[inline]
pub(crate) fn matvec_acc(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `out += Wᵀ · y` where `W` is row-major with `cols` columns.
#[inline]
pub(crate) fn matvec_t_acc(w: &[f64], cols: usize, y: &[f64], out: &mut [f64]) {
    for (&yi, row) in y.iter().zip(w.chunks_exact(cols)) {
        if yi != 0.0 {
            axpy(yi, row, out);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize without reassociation flags
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..n {
        s += a[j] * b[j];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
