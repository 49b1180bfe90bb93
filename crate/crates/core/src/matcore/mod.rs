//! Dense numeric kernels.
//!
//! Everything in the crate that touches a matrix goes through [`DenseMatrix`],
//! a row-major `f64` matrix with a finite-entry invariant. The kernels here are
//! deliberately plain (triple-loop products, partial-pivoting LU, Hessenberg QR,
//! one-sided Jacobi SVD): the experiments never exceed a few hundred rows.

mod eig;
mod io;
mod lup;
mod permutation;
mod svd;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eig::{eig, spectra_distance, triangular_eigvecs, Eigenvalue, Spectrum, DEFAULT_EIG_GAP};
pub use io::{format_mat1, parse_mat1, read_mat1, write_mat1, MAT1_MAGIC};
pub use lup::{lup, LupFactors, SINGULAR_TOL};
pub use permutation::Permutation;
pub use svd::{condition_number, svd_small};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {col})")]
    SingularMatrix { col: usize, pivot: f64 },
    #[error("eigenvalue iteration did not converge")]
    EigFailed,
    #[error("eigenvalue gap {gap:e} is below the required minimum {min_gap:e}")]
    EigGapTooSmall { gap: f64, min_gap: f64 },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("MAT1 parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Row-major dense matrix of finite `f64` values.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = MatError;
    fn try_from(raw: RawMatrix) -> Result<Self, MatError> {
        DenseMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<DenseMatrix> for RawMatrix {
    fn from(m: DenseMatrix) -> Self {
        RawMatrix { rows: m.rows, cols: m.cols, data: m.data }
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, checking length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MatError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from a slice of equally long rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: nrows, cols: ncols, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// A column vector (n x 1).
    pub fn column(values: &[f64]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix, MatError> {
        matmul(self, other)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, MatError> {
        if x.len() != self.cols {
            return Err(MatError::DimensionMismatch(format!(
                "vector of length {} against {}x{} matrix",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn is_lower_triangular(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| ((i + 1)..self.cols).all(|j| self[(i, j)].abs() <= tol))
    }

    pub fn is_upper_triangular(&self, tol: f64) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)].abs() <= tol))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.is_lower_triangular(tol) && self.is_upper_triangular(tol)
    }

    /// Copies the `nr x nc` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &DenseMatrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Assembles `[x y; z w]` from four square blocks of equal size.
    pub fn from_blocks(x: &DenseMatrix, y: &DenseMatrix, z: &DenseMatrix, w: &DenseMatrix) -> Self {
        let d = x.rows;
        for b in [x, y, z, w] {
            assert!(b.rows == d && b.cols == d, "blocks must all be {d}x{d}");
        }
        let mut m = Self::zeros(2 * d, 2 * d);
        m.set_block(0, 0, x);
        m.set_block(0, d, y);
        m.set_block(d, 0, z);
        m.set_block(d, d, w);
        m
    }

    pub fn block_diag(a: &DenseMatrix, b: &DenseMatrix) -> Self {
        let mut m = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        m.set_block(0, 0, a);
        m.set_block(a.rows, a.cols, b);
        m
    }

    pub fn inverse(&self) -> Result<DenseMatrix, MatError> {
        lup(self)?.inverse()
    }

    pub fn det(&self) -> Result<f64, MatError> {
        if !self.is_square() {
            return Err(MatError::NotSquare { rows: self.rows, cols: self.cols });
        }
        match lup(self) {
            Ok(f) => Ok(f.det()),
            Err(MatError::SingularMatrix { .. }) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    /// Solves `self * x = b` for a square non-singular matrix.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, MatError> {
        lup(self)?.solve(b)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Plain triple-loop product. Deterministic accumulation order (i, k, j).
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, MatError> {
    if a.cols != b.rows {
        return Err(MatError::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    Ok(out)
}

/// Ordered product `ms[0] * ms[1] * ... * ms[k-1]`; identity of size `n` when empty.
pub fn matmul_chain<'a>(n: usize, ms: impl IntoIterator<Item = &'a DenseMatrix>) -> Result<DenseMatrix, MatError> {
    let mut acc = DenseMatrix::identity(n);
    for m in ms {
        acc = matmul(&acc, m)?;
    }
    Ok(acc)
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;
    /// Panics on a shape mismatch; use [`matmul`] for a fallible product.
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        matmul(self, rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "shape mismatch in add");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "shape mismatch in sub");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}
