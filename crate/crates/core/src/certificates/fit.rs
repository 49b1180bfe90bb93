use rayon::prelude::*;

use super::CertError;
use crate::matcore::DenseMatrix;
use crate::trainer::{fit_linear_product, TrainConfig};

/// Best relative residual of fitting `n_matrices` alternating couplings to
/// `t` by regression, over `restarts` independently seeded runs.
pub fn falsify_by_fit(t: &DenseMatrix, n_matrices: usize, restarts: usize, cfg: &TrainConfig) -> Result<f64, CertError> {
    if n_matrices == 0 || n_matrices % 2 != 0 {
        return Err(CertError::InvalidInput(format!("n_matrices must be even and positive, got {n_matrices}")));
    }
    if restarts == 0 {
        return Err(CertError::InvalidInput("restarts must be positive".into()));
    }
    let results: Vec<_> = (0..restarts as u64).into_par_iter().map(|seed| fit_linear_product(t, n_matrices, cfg, seed)).collect();
    let mut best = f64::INFINITY;
    for r in results {
        best = best.min(r?.0);
    }
    Ok(best)
}
