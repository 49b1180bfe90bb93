//! Empirical transport distances and residual metrics.

pub mod assignment;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcore::{DenseMatrix, Permutation};

pub const MAX_ASSIGNMENT_SIZE: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("clouds differ in size or dimension: {0}")]
    SizeMismatch(String),
    #[error("cloud of {0} points exceeds the exact-assignment limit")]
    TooLarge(usize),
    #[error("sample cloud contains a non-finite value")]
    NonFinite,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// `n` points in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCloud {
    dim: usize,
    data: Vec<f64>,
}

impl SampleCloud {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self, MetricsError> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(MetricsError::SizeMismatch(format!("{} values for dimension {dim}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, MetricsError> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(MetricsError::SizeMismatch("ragged points".into()));
        }
        Self::new(dim, points.concat())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for i in 0..self.len() {
            for (acc, v) in m.iter_mut().zip(self.point(i)) {
                *acc += v;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    W1Euclidean,
    W2Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlanResult {
    pub assignment: Permutation,
    pub cost: f64,
    pub metric: Metric,
}

/// Exact optimal matching between two equal-size clouds.
///
/// W1 is the mean matched distance, W2 the root mean squared matched distance.
pub fn empirical_wasserstein(a: &SampleCloud, b: &SampleCloud, metric: Metric) -> Result<TransportPlanResult, MetricsError> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(MetricsError::SizeMismatch(format!(
            "{}x{} vs {}x{}",
            a.len(),
            a.dim(),
            b.len(),
            b.dim()
        )));
    }
    let n = a.len();
    if n > MAX_ASSIGNMENT_SIZE {
        return Err(MetricsError::TooLarge(n));
    }
    let pair_cost = |i: usize, j: usize| {
        let d = euclidean(a.point(i), b.point(j));
        match metric {
            Metric::W1Euclidean => d,
            Metric::W2Euclidean => d * d,
        }
    };
    let mut cost = vec![0.0; n * n];
    cost.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
        for (j, c) in row.iter_mut().enumerate() {
            *c = pair_cost(i, j);
        }
    });
    let assign = assignment::solve_dense(n, &cost);
    let total: f64 = assign.iter().enumerate().map(|(i, &j)| pair_cost(i, j)).sum();
    let mean = if n == 0 { 0.0 } else { total / n as f64 };
    let cost = match metric {
        Metric::W1Euclidean => mean,
        Metric::W2Euclidean => mean.sqrt(),
    };
    Ok(TransportPlanResult { assignment: Permutation::new(assign).expect("assignment is a bijection"), cost, metric })
}

/// `‖a − b‖_F / ‖b‖_F`, or the absolute norm when `b` is zero.
pub fn relative_frobenius(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64, MetricsError> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let diff = (a - b).frobenius_norm();
    let base = b.frobenius_norm();
    Ok(if base == 0.0 { diff } else { diff / base })
}

/// Sample mean and its standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_vec, seeded};

    fn cloud(seed: u64, n: usize, dim: usize) -> SampleCloud {
        SampleCloud::new(dim, normal_vec(&mut seeded(seed), n * dim)).unwrap()
    }

    #[test]
    fn identical_clouds_cost_zero() {
        let a = cloud(1, 50, 3);
        for m in [Metric::W1Euclidean, Metric::W2Euclidean] {
            assert_eq!(empirical_wasserstein(&a, &a, m).unwrap().cost, 0.0);
        }
    }

    #[test]
    fn single_points() {
        let a = SampleCloud::new(2, vec![0.0, 0.0]).unwrap();
        let b = SampleCloud::new(2, vec![3.0, 4.0]).unwrap();
        assert_eq!(empirical_wasserstein(&a, &b, Metric::W1Euclidean).unwrap().cost, 5.0);
        assert_eq!(empirical_wasserstein(&a, &b, Metric::W2Euclidean).unwrap().cost, 5.0);
    }

    #[test]
    fn symmetric_and_below_identity_matching() {
        for s in 0..10 {
            let a = cloud(10 + s, 40, 2);
            let b = cloud(100 + s, 40, 2);
            for m in [Metric::W1Euclidean, Metric::W2Euclidean] {
                let ab = empirical_wasserstein(&a, &b, m).unwrap().cost;
                let ba = empirical_wasserstein(&b, &a, m).unwrap().cost;
                assert!((ab - ba).abs() < 1e-12);
                let ident: Vec<f64> = (0..40).map(|i| euclidean(a.point(i), b.point(i))).collect();
                let ident = match m {
                    Metric::W1Euclidean => ident.iter().sum::<f64>() / 40.0,
                    Metric::W2Euclidean => (ident.iter().map(|d| d * d).sum::<f64>() / 40.0).sqrt(),
                };
                assert!(ab <= ident + 1e-12);
            }
        }
    }

    #[test]
    fn triangle_inequality_w1() {
        for s in 0..10 {
            let (a, b, c) = (cloud(s, 30, 3), cloud(s + 50, 30, 3), cloud(s + 90, 30, 3));
            let w = |x: &SampleCloud, y: &SampleCloud| empirical_wasserstein(x, y, Metric::W1Euclidean).unwrap().cost;
            assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-9);
        }
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(empirical_wasserstein(&cloud(1, 3, 2), &cloud(2, 4, 2), Metric::W1Euclidean).is_err());
    }

    #[test]
    fn relative_frobenius_cases() {
        let i = DenseMatrix::identity(3);
        assert_eq!(relative_frobenius(&i, &i).unwrap(), 0.0);
        assert_eq!(relative_frobenius(&DenseMatrix::zeros(3, 3), &i).unwrap(), 1.0);
        let mut e = DenseMatrix::zeros(3, 3);
        e[(0, 2)] = 0.3;
        e[(1, 1)] = -0.4;
        let a = &i + &e;
        let want = 0.5 / 3f64.sqrt();
        assert!((relative_frobenius(&a, &i).unwrap() - want).abs() < 1e-15);
        assert_eq!(relative_frobenius(&i, &DenseMatrix::zeros(3, 3)).unwrap(), 3f64.sqrt());
    }
}
