//! Four couplings realizing `blockdiag(M, S)` when `S` and `M⁻¹` share a
//! spectrum of distinct real eigenvalues.
//!
//! With `E = −A M`, `D = (M⁻¹ − I) A⁻¹` and `H = (I − M⁻¹) M⁻¹ A⁻¹`,
//!
//! ```text
//! [I 0; A I] [I D; 0 I] [I 0; E I] [I H; 0 I] = blockdiag(M, A M⁻¹ A⁻¹)
//! ```
//!
//! and `A = U V⁻¹` turns the lower-right block into `S`, where the columns of
//! `U` and `V` are matched eigenvectors of `S` and `M⁻¹`.

use super::DecomposeError;
use crate::coupling::LinearCouplingLayer;
use crate::matcore::{eig, lup, triangular_eigvecs, DenseMatrix, MatError};

/// Returns the four layers in application order: `H`, `E`, `D`, `A`.
pub fn block_diag_layers(m: &DenseMatrix, s: &DenseMatrix, min_gap: f64) -> Result<[LinearCouplingLayer; 4], DecomposeError> {
    let d = m.rows();
    if !m.is_square() || s.rows() != d || s.cols() != d {
        return Err(DecomposeError::InvalidInput("M and S must be square of the same size".into()));
    }
    if !s.is_lower_triangular(0.0) {
        return Err(DecomposeError::InvalidInput("S must be lower triangular".into()));
    }
    let m_inv = m.inverse()?;
    let u = triangular_eigvecs(s, min_gap)?;
    let v = if m.is_lower_triangular(0.0) {
        matched_triangular_eigvecs(&m_inv, &s.diagonal(), min_gap)?
    } else {
        matched_general_eigvecs(&m_inv, &s.diagonal(), min_gap)?
    };
    let a = &u * &v.inverse()?;
    let a_inv = a.inverse()?;
    let ident = DenseMatrix::identity(d);
    let m_inv_minus_i = &m_inv - &ident;

    let e = (&a * m).scale(-1.0);
    let dd = &m_inv_minus_i * &a_inv;
    let h = (&(&m_inv_minus_i * &m_inv) * &a_inv).scale(-1.0);

    let ones = vec![1.0; d];
    Ok([
        LinearCouplingLayer::upper(ones.clone(), h)?,
        LinearCouplingLayer::lower(e, ones.clone())?,
        LinearCouplingLayer::upper(ones.clone(), dd)?,
        LinearCouplingLayer::lower(a, ones)?,
    ])
}

/// Eigenvectors of a lower-triangular `t` ordered to match `targets`.
fn matched_triangular_eigvecs(t: &DenseMatrix, targets: &[f64], min_gap: f64) -> Result<DenseMatrix, DecomposeError> {
    let vecs = triangular_eigvecs(t, min_gap)?;
    let order = match_values(&t.diagonal(), targets)?;
    Ok(DenseMatrix::from_fn(t.rows(), t.cols(), |i, j| vecs[(i, order[j])]))
}

/// `order[j]` is the index in `values` matched to `targets[j]`.
fn match_values(values: &[f64], targets: &[f64]) -> Result<Vec<usize>, DecomposeError> {
    let n = values.len();
    let scale = values.iter().chain(targets).fold(1.0_f64, |m, v| m.max(v.abs()));
    let assign = crate::metrics::assignment::solve(n, |j, i| (targets[j] - values[i]).abs());
    for (j, &i) in assign.iter().enumerate() {
        let gap = (targets[j] - values[i]).abs();
        if gap > 1e-8 * scale {
            return Err(DecomposeError::SpectrumMismatch { distance: gap });
        }
    }
    Ok(assign)
}

/// Eigenvectors of a general matrix with real distinct spectrum, by inverse
/// iteration at each target eigenvalue.
fn matched_general_eigvecs(t: &DenseMatrix, targets: &[f64], min_gap: f64) -> Result<DenseMatrix, DecomposeError> {
    let n = t.rows();
    let spec = eig(t)?;
    let radius = spec.spectral_radius().max(f64::MIN_POSITIVE);
    if spec.max_abs_imag() > 1e-10 * radius {
        return Err(DecomposeError::SpectrumMismatch { distance: spec.max_abs_imag() });
    }
    let values: Vec<f64> = spec.eigenvalues.iter().map(|e| e.re).collect();
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            gap = gap.min((values[i] - values[j]).abs());
        }
    }
    if gap < min_gap {
        return Err(MatError::EigGapTooSmall { gap, min_gap }.into());
    }
    match_values(&values, targets)?;

    let mut out = DenseMatrix::zeros(n, n);
    for (j, &lambda) in targets.iter().enumerate() {
        let mut shift = lambda + 1e-10 * radius;
        let f = loop {
            let shifted = DenseMatrix::from_fn(n, n, |r, c| t[(r, c)] - if r == c { shift } else { 0.0 });
            match lup(&shifted) {
                Ok(f) => break f,
                Err(MatError::SingularMatrix { .. }) => shift += 1e-9 * radius,
                Err(e) => return Err(e.into()),
            }
        };
        let mut x: Vec<f64> = (0..n).map(|k| 1.0 + 0.1 * k as f64).collect();
        for _ in 0..3 {
            x = f.solve(&x)?;
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{Layer, LayerSequence};
    use crate::matcore::DEFAULT_EIG_GAP;
    use crate::metrics::relative_frobenius;
    use crate::rng::{normal_matrix, seeded};

    fn realize(layers: [LinearCouplingLayer; 4]) -> DenseMatrix {
        let d = layers[0].dim_half();
        LayerSequence::new(2 * d, layers.into_iter().map(Layer::Linear).collect()).unwrap().as_matrix().unwrap()
    }

    #[test]
    fn scalar_case() {
        let m = DenseMatrix::from_rows(&[[2.0]]);
        let s = DenseMatrix::from_rows(&[[0.5]]);
        let layers = block_diag_layers(&m, &s, DEFAULT_EIG_GAP).unwrap();
        // A = 1 here, so E = -2, D = -1/2, H = 1/4
        assert_eq!(layers[3].dense_block()[(0, 0)], 1.0);
        assert_eq!(layers[1].dense_block()[(0, 0)], -2.0);
        assert_eq!(layers[2].dense_block()[(0, 0)], -0.5);
        assert_eq!(layers[0].dense_block()[(0, 0)], 0.25);
        let want = DenseMatrix::from_diag(&[2.0, 0.5]);
        assert!(relative_frobenius(&realize(layers), &want).unwrap() < 1e-15);
    }

    #[test]
    fn identity_m_is_rejected() {
        let i = DenseMatrix::identity(3);
        assert!(matches!(
            block_diag_layers(&i, &i, DEFAULT_EIG_GAP),
            Err(DecomposeError::Mat(MatError::EigGapTooSmall { .. }))
        ));
    }

    #[test]
    fn random_triangular_with_permuted_inverse_diagonal() {
        let mut rng = seeded(60);
        for d in [2, 4, 8] {
            let mut m = normal_matrix(&mut rng, d, d).scale(0.3);
            let mut s = normal_matrix(&mut rng, d, d).scale(0.3);
            let diag: Vec<f64> = (0..d).map(|i| 1.0 + 0.1 * i as f64).collect();
            for i in 0..d {
                for j in (i + 1)..d {
                    m[(i, j)] = 0.0;
                    s[(i, j)] = 0.0;
                }
                m[(i, i)] = diag[i];
                s[(i, i)] = 1.0 / diag[d - 1 - i];
            }
            let got = realize(block_diag_layers(&m, &s, 1e-3).unwrap());
            let want = DenseMatrix::block_diag(&m, &s);
            assert!(relative_frobenius(&got, &want).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn general_m_via_similarity() {
        let mut rng = seeded(61);
        let lam = [0.5, -1.5, 2.0, 3.0];
        let q = normal_matrix(&mut rng, 4, 4);
        let m = &(&q * &DenseMatrix::from_diag(&lam)) * &q.inverse().unwrap();
        let mut s = DenseMatrix::from_diag(&[1.0 / 3.0, 2.0, -1.0 / 1.5, 0.5]);
        s[(2, 0)] = 0.7;
        s[(3, 1)] = -0.2;
        let got = realize(block_diag_layers(&m, &s, 1e-6).unwrap());
        let want = DenseMatrix::block_diag(&m, &s);
        assert!(relative_frobenius(&got, &want).unwrap() <= 1e-8);
    }

    #[test]
    fn mismatched_spectrum_is_rejected() {
        let m = DenseMatrix::from_diag(&[2.0, 3.0]);
        let s = DenseMatrix::from_diag(&[0.5, 0.25]);
        assert!(matches!(block_diag_layers(&m, &s, 1e-8), Err(DecomposeError::SpectrumMismatch { .. })));
    }
}
