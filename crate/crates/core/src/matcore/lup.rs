use super::{DenseMatrix, MatError, Permutation};

/// Pivots smaller than this fraction of the largest input entry are treated as zero.
pub const SINGULAR_TOL: f64 = 1e-12;

/// `P A = L U` with `L` unit lower triangular.
///
/// `perm` stores the row order: row `i` of `P A` is row `perm[i]` of `A`.
#[derive(Debug, Clone)]
pub struct LupFactors {
    pub lower: DenseMatrix,
    pub upper: DenseMatrix,
    pub perm: Permutation,
    /// +1 for an even row permutation, -1 for odd.
    pub parity: i8,
}

pub fn lup(a: &DenseMatrix) -> Result<LupFactors, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let tol = SINGULAR_TOL * a.max_abs();
    let mut lu = a.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut parity = 1i8;

    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in (k + 1)..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tol || best == 0.0 {
            return Err(MatError::SingularMatrix { col: k, pivot: best });
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            order.swap(k, p);
            parity = -parity;
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f != 0.0 {
                for j in (k + 1)..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
    }

    let lower = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => lu[(i, j)],
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.0,
    });
    let upper = DenseMatrix::from_fn(n, n, |i, j| if j >= i { lu[(i, j)] } else { 0.0 });
    Ok(LupFactors { lower, upper, perm: Permutation::from_vec_unchecked(order), parity })
}

impl LupFactors {
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn det(&self) -> f64 {
        self.upper.diagonal().iter().product::<f64>() * f64::from(self.parity)
    }

    /// Sign of the determinant, computed from pivot signs only (no overflow).
    pub fn det_sign(&self) -> i8 {
        let neg = self.upper.diagonal().iter().filter(|v| **v < 0.0).count();
        if neg % 2 == 0 {
            self.parity
        } else {
            -self.parity
        }
    }

    /// The row-permutation matrix `P` with `P A = L U`.
    pub fn perm_matrix(&self) -> DenseMatrix {
        let n = self.dim();
        let mut p = DenseMatrix::zeros(n, n);
        for (i, &src) in self.perm.mapping().iter().enumerate() {
            p[(i, src)] = 1.0;
        }
        p
    }

    /// `P^T L U`, which should equal the factored matrix.
    pub fn reconstruct(&self) -> DenseMatrix {
        let lu = &self.lower * &self.upper;
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        for (i, &src) in self.perm.mapping().iter().enumerate() {
            for j in 0..n {
                out[(src, j)] = lu[(i, j)];
            }
        }
        out
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, MatError> {
        let n = self.dim();
        if b.len() != n {
            return Err(MatError::DimensionMismatch(format!("rhs length {} for {n}x{n} system", b.len())));
        }
        let mut y: Vec<f64> = self.perm.mapping().iter().map(|&src| b[src]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lower[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.upper[(i, j)] * y[j];
            }
            y[i] = s / self.upper[(i, i)];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Result<DenseMatrix, MatError> {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        Ok(inv)
    }
}
