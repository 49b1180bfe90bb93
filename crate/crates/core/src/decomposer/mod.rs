//! Exact decomposition of positive-determinant `2d x 2d` matrices into at
//! most 47 linear coupling matrices.
//!
//! `T = Pᵀ L U` from partial-pivoting LU. The permutation is realized up to
//! signs (`P̃ = Pᵀ S`, at most 21 matrices), the signs are absorbed into the
//! triangular factors (`T = P̃ (S L S)(S U)`), and each triangular factor costs
//! at most 13 matrices. The upper factor is handled by conjugating with the
//! coordinate reversal, which swaps the roles of lower and upper couplings.

mod blockdiag;
mod permutation;
mod triangular;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use blockdiag::block_diag_layers;
pub use permutation::{achieved_signs, order2_factor, permutation_layers, signed_swap_layers};
pub use triangular::{shear_and_scale_layers, triangular_layers, Spacing, TriangularLayers, TriangularOptions};

use crate::coupling::{CouplingError, Layer, LayerSequence, LinearCouplingLayer, Side};
use crate::matcore::{lup, DenseMatrix, MatError};
use crate::metrics::relative_frobenius;

pub const MAX_MATRICES: usize = 47;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomposeError {
    #[error("target has negative determinant; coupling products are orientation preserving")]
    NegativeDeterminant,
    #[error("target is singular to working precision")]
    SingularMatrix,
    #[error("dimension {0} is not even")]
    OddDimension(usize),
    #[error("swap pairs overlap")]
    OverlappingPairs,
    #[error("zero diagonal entry at {0}")]
    ZeroDiagonal(usize),
    #[error("scale factor must be positive")]
    ZeroScale,
    #[error("spectra do not match (distance {distance:e})")]
    SpectrumMismatch { distance: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Mat(MatError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
}

impl From<MatError> for DecomposeError {
    fn from(e: MatError) -> Self {
        match e {
            MatError::SingularMatrix { .. } => DecomposeError::SingularMatrix,
            other => DecomposeError::Mat(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEntry {
    pub stage: String,
    pub matrices: usize,
}

impl StageEntry {
    pub fn new(stage: impl Into<String>, matrices: usize) -> Self {
        Self { stage: stage.into(), matrices }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub layers: LayerSequence,
    pub matrix_count: usize,
    /// `ceil(matrix_count / 2)`: the count in lower/upper pairs.
    pub layer_pairs: usize,
    pub residual: f64,
    pub stage_log: Vec<StageEntry>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecomposeOptions {
    pub triangular: TriangularOptions,
}

pub fn decompose(t: &DenseMatrix) -> Result<DecompositionResult, DecomposeError> {
    decompose_with(t, DecomposeOptions::default())
}

pub fn decompose_with(t: &DenseMatrix, opts: DecomposeOptions) -> Result<DecompositionResult, DecomposeError> {
    let n = t.rows();
    if !t.is_square() {
        return Err(DecomposeError::InvalidInput(format!("{}x{} matrix is not square", t.rows(), t.cols())));
    }
    if n == 0 || n % 2 != 0 {
        return Err(DecomposeError::OddDimension(n));
    }
    let d = n / 2;
    let f = lup(t)?;
    if f.det_sign() < 0 {
        return Err(DecomposeError::NegativeDeterminant);
    }

    let mut warnings = Vec::new();
    if d < 4 {
        warnings.push(format!("half-dimension {d} is below 4; the matrix-count bound is only guaranteed from 4 on"));
    }

    let p_seq = permutation_layers(&f.perm)?;
    let p_mat = p_seq.as_matrix()?;
    let signs = achieved_signs(&f.perm, &p_mat);

    // L' = S L S stays unit lower triangular, U' = S U keeps det > 0.
    let lower = DenseMatrix::from_fn(n, n, |i, j| signs[i] * f.lower[(i, j)] * signs[j]);
    let mut upper = DenseMatrix::from_fn(n, n, |i, j| signs[i] * f.upper[(i, j)]);
    let mut lower = lower;
    fix_lu_signs(&mut lower, &mut upper);

    let upper_seq = upper_triangular_layers(&upper, opts.triangular)?;
    let lower_seq = triangular_layers(&lower, opts.triangular)?;

    let mut stage_log = Vec::new();
    let mut layers = LayerSequence::empty(n);
    stage_log.push(StageEntry::new("upper", upper_seq.layers.len()));
    stage_log.extend(upper_seq.stage_log.iter().map(|s| StageEntry::new(format!("upper:{}", s.stage), s.matrices)));
    layers.extend(upper_seq.layers)?;
    stage_log.push(StageEntry::new("lower", lower_seq.layers.len()));
    stage_log.extend(lower_seq.stage_log.iter().map(|s| StageEntry::new(format!("lower:{}", s.stage), s.matrices)));
    layers.extend(lower_seq.layers)?;
    stage_log.push(StageEntry::new("permutation", p_seq.len()));
    layers.extend(p_seq)?;

    let matrix_count = layers.len();
    let mut result = DecompositionResult {
        layers,
        matrix_count,
        layer_pairs: matrix_count.div_ceil(2),
        residual: 0.0,
        stage_log,
        warnings,
    };
    result.residual = verify(&result, t)?;
    Ok(result)
}

/// When both factors have negative determinant, negate column 0 of `L` and
/// row 0 of `U`; the product is unchanged.
fn fix_lu_signs(lower: &mut DenseMatrix, upper: &mut DenseMatrix) {
    let neg = |m: &DenseMatrix| m.diagonal().iter().filter(|v| **v < 0.0).count() % 2 == 1;
    if neg(lower) && neg(upper) {
        for i in 0..lower.rows() {
            lower[(i, 0)] = -lower[(i, 0)];
        }
        for j in 0..upper.cols() {
            upper[(0, j)] = -upper[(0, j)];
        }
    }
}

/// `U = R (R U R) R` with `R` the reversal; `R U R` is lower triangular and
/// conjugating a lower coupling `[I 0; A B]` by `R` gives the upper coupling
/// `[JBJ JAJ; 0 I]` (`J` the half-size reversal), and vice versa.
fn upper_triangular_layers(u: &DenseMatrix, opts: TriangularOptions) -> Result<TriangularLayers, DecomposeError> {
    let n = u.rows();
    let reversed = DenseMatrix::from_fn(n, n, |i, j| u[(n - 1 - i, n - 1 - j)]);
    let inner = triangular_layers(&reversed, opts)?;
    let mut layers = LayerSequence::empty(n);
    for layer in inner.layers.layers() {
        match layer {
            Layer::Linear(l) => layers.push(Layer::Linear(reverse_conjugate(l)?))?,
            _ => unreachable!("triangular construction emits only linear couplings"),
        }
    }
    Ok(TriangularLayers { layers, stage_log: inner.stage_log })
}

fn reverse_conjugate(l: &LinearCouplingLayer) -> Result<LinearCouplingLayer, DecomposeError> {
    let d = l.dim_half();
    let dense = l.dense_block();
    let flipped = DenseMatrix::from_fn(d, d, |i, j| dense[(d - 1 - i, d - 1 - j)]);
    let diag: Vec<f64> = l.diag_block().iter().rev().copied().collect();
    let side = match l.side() {
        Side::Lower => Side::Upper,
        Side::Upper => Side::Lower,
    };
    Ok(LinearCouplingLayer::new(side, flipped, diag)?)
}

/// Relative Frobenius distance between the realized product and `t`.
pub fn verify(result: &DecompositionResult, t: &DenseMatrix) -> Result<f64, DecomposeError> {
    if result.layers.dim() != t.rows() || !t.is_square() {
        return Err(DecomposeError::InvalidInput(format!(
            "decomposition acts on dimension {}, target is {}x{}",
            result.layers.dim(),
            t.rows(),
            t.cols()
        )));
    }
    let m = result.layers.as_matrix()?;
    Ok(relative_frobenius(&m, t).expect("shapes checked"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_matrix, seeded};

    #[test]
    fn identity_decomposes_to_nothing() {
        let r = decompose(&DenseMatrix::identity(8)).unwrap();
        assert_eq!(r.matrix_count, 0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn rotation_is_one_signed_swap() {
        let t = DenseMatrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
        let r = decompose(&t).unwrap();
        assert_eq!(r.matrix_count, 3);
        assert!(r.residual <= 1e-12);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn random_gaussian_matrices() {
        let mut rng = seeded(70);
        let mut done = 0;
        while done < 100 {
            let t = normal_matrix(&mut rng, 8, 8);
            if t.det().unwrap() <= 0.0 {
                continue;
            }
            let r = decompose(&t).unwrap();
            assert!(r.matrix_count <= MAX_MATRICES);
            assert!(r.residual <= 1e-6, "residual {}", r.residual);
            for l in r.layers.linear_layers() {
                assert!(l.diag_block().iter().all(|&b| b > 0.0));
            }
            let count = |name: &str| r.stage_log.iter().find(|s| s.stage == name).unwrap().matrices;
            assert!(count("permutation") <= 21 && count("lower") <= 13 && count("upper") <= 13);
            done += 1;
        }
    }

    #[test]
    fn negative_determinant_rejected() {
        let t = DenseMatrix::from_diag(&[-1.0, 1.0, 1.0, 1.0]);
        assert_eq!(decompose(&t).unwrap_err(), DecomposeError::NegativeDeterminant);
        let s = DenseMatrix::zeros(4, 4);
        assert_eq!(decompose(&s).unwrap_err(), DecomposeError::SingularMatrix);
    }

    #[test]
    fn verify_reports_identity_gap() {
        let t = DenseMatrix::identity(4).scale(2.0);
        let r = DecompositionResult {
            layers: LayerSequence::empty(4),
            matrix_count: 0,
            layer_pairs: 0,
            residual: 0.0,
            stage_log: vec![],
            warnings: vec![],
        };
        assert_eq!(verify(&r, &t).unwrap(), 0.5);
    }

    #[test]
    fn lu_sign_fix_preserves_product() {
        let mut l = DenseMatrix::from_rows(&[[-1.0, 0.0], [0.5, 1.0]]);
        let mut u = DenseMatrix::from_rows(&[[-2.0, 1.0], [0.0, 3.0]]);
        let before = &l * &u;
        fix_lu_signs(&mut l, &mut u);
        assert!(l.det().unwrap() > 0.0 && u.det().unwrap() > 0.0);
        assert_eq!(&l * &u, before);
    }
}
