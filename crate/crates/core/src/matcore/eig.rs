//! Eigenvalues of small dense real matrices.
//!
//! Balancing, reduction to upper Hessenberg form by stabilized elementary
//! similarity transforms, then Francis double-shift QR on the Hessenberg
//! matrix. Only eigenvalues are produced; the one place that needs vectors
//! (lower-triangular inputs) has its own back-substitution routine.

use serde::{Deserialize, Serialize};

use super::{DenseMatrix, MatError};

pub const DEFAULT_EIG_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn dist(&self, other: &Eigenvalue) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, e| m.max(e.im.abs()))
    }

    pub fn sum(&self) -> Eigenvalue {
        let (re, im) = self.eigenvalues.iter().fold((0.0, 0.0), |(r, i), e| (r + e.re, i + e.im));
        Eigenvalue { re, im }
    }

    /// Product of all eigenvalues (complex multiplication).
    pub fn product(&self) -> Eigenvalue {
        let (re, im) = self.eigenvalues.iter().fold((1.0, 0.0), |(r, i), e| (r * e.re - i * e.im, r * e.im + i * e.re));
        Eigenvalue { re, im }
    }

    fn sort(&mut self) {
        self.eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    }
}

/// Largest distance between matched eigenvalues under the best one-to-one
/// matching of the two multisets (sum-of-distances optimal assignment).
pub fn spectra_distance(a: &Spectrum, b: &Spectrum) -> Result<f64, MatError> {
    if a.len() != b.len() {
        return Err(MatError::DimensionMismatch(format!("spectra of size {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    let assign = crate::metrics::assignment::solve(n, |i, j| a.eigenvalues[i].dist(&b.eigenvalues[j]));
    Ok(assign.iter().enumerate().map(|(i, &j)| a.eigenvalues[i].dist(&b.eigenvalues[j])).fold(0.0, f64::max))
}

pub fn eig(a: &DenseMatrix) -> Result<Spectrum, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Spectrum { eigenvalues: Vec::new() });
    }
    let mut h = a.as_slice().to_vec();
    balance(&mut h, n);
    hessenberg(&mut h, n);
    let mut spec = Spectrum { eigenvalues: hqr(&mut h, n)? };
    spec.sort();
    Ok(spec)
}

fn balance(a: &mut [f64], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i * n + j] *= g;
                    }
                    for j in 0..n {
                        a[j * n + i] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(a: &mut [f64], n: usize) {
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0_f64;
        let mut i = m;
        for j in m..n {
            if a[j * n + m - 1].abs() > x.abs() {
                x = a[j * n + m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..n {
                a.swap(i * n + j, m * n + j);
            }
            for j in 0..n {
                a.swap(j * n + i, j * n + m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[i * n + m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i * n + m - 1] = y;
                    for j in m..n {
                        a[i * n + j] -= y * a[m * n + j];
                    }
                    for j in 0..n {
                        a[j * n + m] += y * a[j * n + i];
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..(i - 1) {
            a[i * n + j] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
fn hqr(h: &mut [f64], n: usize) -> Result<Vec<Eigenvalue>, MatError> {
    let eps = f64::EPSILON;
    let idx = |i: isize, j: isize| i as usize * n + j as usize;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h[i * n + j].abs();
        }
    }

    let max_total = 100 * n.max(1);
    let mut total = 0usize;
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l > 0 {
                let mut s = h[idx(l - 1, l - 1)].abs() + h[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[idx(l, l - 1)].abs() <= eps * s {
                    h[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = h[idx(nn, nn)];
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = h[idx(nn - 1, nn - 1)];
            let mut w = h[idx(nn, nn - 1)] * h[idx(nn - 1, nn)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                let (a, b) = (nn as usize - 1, nn as usize);
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[a] = x + z;
                    wr[b] = x + z;
                    if z != 0.0 {
                        wr[b] = x - w / z;
                    }
                    wi[a] = 0.0;
                    wi[b] = 0.0;
                } else {
                    wr[a] = x + p;
                    wr[b] = x + p;
                    wi[a] = z;
                    wi[b] = -z;
                }
                nn -= 2;
                break;
            }

            total += 1;
            if total > max_total {
                return Err(MatError::EigFailed);
            }
            if its > 0 && its % 10 == 0 {
                t += x;
                for i in 0..=nn {
                    h[idx(i, i)] -= x;
                }
                let s = h[idx(nn, nn - 1)].abs() + h[idx(nn - 1, nn - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let (mut p, mut q, mut r, mut z);
            let mut m = nn - 2;
            loop {
                z = h[idx(m, m)];
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - w) / h[idx(m + 1, m)] + h[idx(m, m + 1)];
                q = h[idx(m + 1, m + 1)] - z - r - s0;
                r = h[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (h[idx(m - 1, m - 1)].abs() + z.abs() + h[idx(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..(nn - 1) {
                h[idx(i + 2, i)] = 0.0;
                if i != m {
                    h[idx(i + 2, i - 1)] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = h[idx(k, k - 1)];
                    q = h[idx(k + 1, k - 1)];
                    r = 0.0;
                    if k + 1 != nn {
                        r = h[idx(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            h[idx(k, k - 1)] = -h[idx(k, k - 1)];
                        }
                    } else {
                        h[idx(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = h[idx(k, j)] + q * h[idx(k + 1, j)];
                        if k + 1 != nn {
                            pp += r * h[idx(k + 2, j)];
                            h[idx(k + 2, j)] -= pp * z;
                        }
                        h[idx(k + 1, j)] -= pp * y;
                        h[idx(k, j)] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * h[idx(i, k)] + y * h[idx(i, k + 1)];
                        if k + 1 != nn {
                            pp += z * h[idx(i, k + 2)];
                            h[idx(i, k + 2)] -= pp * r;
                        }
                        h[idx(i, k + 1)] -= pp * q;
                        h[idx(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    if wr.iter().chain(&wi).any(|v| !v.is_finite()) {
        return Err(MatError::EigFailed);
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Eigenvalue { re, im }).collect())
}

/// Eigenvectors of a lower-triangular matrix, one unit-norm column per
/// diagonal entry (column `i` belongs to eigenvalue `a[i][i]`).
///
/// Requires the diagonal entries to be pairwise at least `min_gap` apart.
pub fn triangular_eigvecs(a: &DenseMatrix, min_gap: f64) -> Result<DenseMatrix, MatError> {
    if !a.is_square() {
        return Err(MatError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let diag = a.diagonal();
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            gap = gap.min((diag[i] - diag[j]).abs());
        }
    }
    if gap < min_gap {
        return Err(MatError::EigGapTooSmall { gap, min_gap });
    }
    let mut v = DenseMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for i in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[i] = 1.0;
        for k in (i + 1)..n {
            let s: f64 = (i..k).map(|j| a[(k, j)] * col[j]).sum();
            col[k] = s / (diag[i] - diag[k]);
        }
        let norm = col.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(MatError::NonFinite);
        }
        for k in 0..n {
            v[(k, i)] = col[k] / norm;
        }
    }
    Ok(v)
}
