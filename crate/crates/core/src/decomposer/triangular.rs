//! Lower-triangular matrices, shears and scalings as coupling products.

use super::permutation::signed_swap_layers;
use super::{blockdiag::block_diag_layers, DecomposeError, StageEntry};
use crate::coupling::{Layer, LayerSequence, LinearCouplingLayer, Side};
use crate::matcore::DenseMatrix;

/// Magnitudes given to the diagonal of the first block before the
/// block-diagonal step; they must be distinct.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    /// `ratio^(p − (d−1)/2)`, centred on 1.
    Geometric { ratio: f64 },
    /// `1 + p·step`.
    Arithmetic { step: f64 },
}

impl Spacing {
    fn magnitude(self, p: usize, d: usize) -> f64 {
        match self {
            Spacing::Geometric { ratio } => ratio.powf(p as f64 - (d as f64 - 1.0) / 2.0),
            Spacing::Arithmetic { step } => 1.0 + p as f64 * step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularOptions {
    pub spacing: Spacing,
    pub min_gap: f64,
}

impl Default for TriangularOptions {
    fn default() -> Self {
        Self { spacing: Spacing::Geometric { ratio: 1.5 }, min_gap: crate::matcore::DEFAULT_EIG_GAP }
    }
}

#[derive(Debug, Clone)]
pub struct TriangularLayers {
    pub layers: LayerSequence,
    pub stage_log: Vec<StageEntry>,
}

fn push_nontrivial(seq: &mut LayerSequence, layer: LinearCouplingLayer) -> Result<usize, DecomposeError> {
    if layer.is_identity() {
        return Ok(0);
    }
    seq.push(Layer::Linear(layer))?;
    Ok(1)
}

/// Realizes a lower-triangular `2d x 2d` matrix with positive determinant in
/// at most 13 couplings: column elimination (1), sign flip (6), rescaling (2)
/// and the block-diagonal construction (4). Identity layers are dropped.
pub fn triangular_layers(l: &DenseMatrix, opts: TriangularOptions) -> Result<TriangularLayers, DecomposeError> {
    let n = l.rows();
    if !l.is_square() || n % 2 != 0 {
        return Err(DecomposeError::OddDimension(n));
    }
    let d = n / 2;
    let tol = 1e-12 * l.max_abs();
    if !l.is_lower_triangular(tol) {
        return Err(DecomposeError::InvalidInput("matrix is not lower triangular".into()));
    }
    if let Some(k) = (0..n).find(|&k| l[(k, k)] == 0.0) {
        return Err(DecomposeError::ZeroDiagonal(k));
    }
    let tri = |b: DenseMatrix| DenseMatrix::from_fn(d, d, |i, j| if j <= i { b[(i, j)] } else { 0.0 });
    let a = tri(l.block(0, 0, d, d));
    let c = tri(l.block(d, d, d, d));
    let b = l.block(d, 0, d, d);
    let neg = (0..n).filter(|&k| l[(k, k)] < 0.0).count();
    if neg % 2 == 1 {
        return Err(DecomposeError::NegativeDeterminant);
    }

    let mut seq = LayerSequence::empty(n);
    let mut log = Vec::new();

    // L = blockdiag(A, C) · [I 0; C⁻¹B I]
    let used = if b.max_abs() > 0.0 {
        push_nontrivial(&mut seq, LinearCouplingLayer::lower(&c.inverse()? * &b, vec![1.0; d])?)?
    } else {
        0
    };
    log.push(StageEntry::new("eliminate", used));

    // blockdiag(A, C) = F · blockdiag(F1 A, F2 C), F flipping positions where
    // the diagonal signs of A and C disagree, first half of them in A.
    let mismatched: Vec<usize> = (0..d).filter(|&p| (a[(p, p)] < 0.0) != (c[(p, p)] < 0.0)).collect();
    let (flip_a, flip_c) = mismatched.split_at(mismatched.len() / 2);
    let mut a1 = a;
    let mut c1 = c;
    for &p in flip_a {
        for j in 0..d {
            a1[(p, j)] = -a1[(p, j)];
        }
    }
    for &p in flip_c {
        for j in 0..d {
            c1[(p, j)] = -c1[(p, j)];
        }
    }
    let flip_pairs: Vec<(usize, usize)> = flip_a.iter().copied().zip(flip_c.iter().copied()).collect();

    // blockdiag(A1, C1) = blockdiag(M, S) · blockdiag(Δ1, Δ2) with diag(M) = m,
    // diag(S) = 1/m and both Δ positive.
    let positive_diagonal = (0..d).all(|p| a1[(p, p)] > 0.0 && c1[(p, p)] > 0.0);
    if positive_diagonal && a1.is_diagonal(0.0) && c1.is_diagonal(0.0) {
        let mut used = push_nontrivial(&mut seq, LinearCouplingLayer::upper(a1.diagonal(), DenseMatrix::zeros(d, d))?)?;
        used += push_nontrivial(&mut seq, LinearCouplingLayer::lower(DenseMatrix::zeros(d, d), c1.diagonal())?)?;
        log.push(StageEntry::new("rescale", used));
        log.push(StageEntry::new("blockdiag", 0));
    } else {
        let m: Vec<f64> = (0..d).map(|p| a1[(p, p)].signum() * opts.spacing.magnitude(p, d)).collect();
        let delta1: Vec<f64> = (0..d).map(|p| a1[(p, p)] / m[p]).collect();
        let delta2: Vec<f64> = (0..d).map(|p| c1[(p, p)] * m[p]).collect();
        let mm = DenseMatrix::from_fn(d, d, |i, j| a1[(i, j)] / delta1[j]);
        let ss = DenseMatrix::from_fn(d, d, |i, j| c1[(i, j)] / delta2[j]);
        let mut used = push_nontrivial(&mut seq, LinearCouplingLayer::upper(delta1, DenseMatrix::zeros(d, d))?)?;
        used += push_nontrivial(&mut seq, LinearCouplingLayer::lower(DenseMatrix::zeros(d, d), delta2)?)?;
        log.push(StageEntry::new("rescale", used));
        let mut used = 0;
        for layer in block_diag_layers(&mm, &ss, opts.min_gap)? {
            used += push_nontrivial(&mut seq, layer)?;
        }
        log.push(StageEntry::new("blockdiag", used));
    }

    // two signed swaps on the same pairs give (x, y) ↦ (−x, −y)
    let mut used = 0;
    if !flip_pairs.is_empty() {
        for _ in 0..2 {
            for layer in signed_swap_layers(d, &flip_pairs)? {
                used += push_nontrivial(&mut seq, layer)?;
            }
        }
    }
    log.insert(1, StageEntry::new("signflip", used));

    Ok(TriangularLayers { layers: seq, stage_log: log })
}

/// Elementary operation on `R^{2d}`: scaling of coordinate `i` by `c > 0`
/// when `i == j`, otherwise the shear adding `c·x_j` to `x_i`.
///
/// A shear across the halves is a single coupling. A shear inside one half
/// borrows coordinate 0 of the other half and needs four couplings: the
/// middle coupling also picks up the borrowed coordinate, which the first one
/// pre-compensates.
pub fn shear_and_scale_layers(d: usize, i: usize, j: usize, c: f64) -> Result<LayerSequence, DecomposeError> {
    let n = 2 * d;
    if i >= n || j >= n {
        return Err(DecomposeError::InvalidInput(format!("index out of range for dimension {n}")));
    }
    let mut seq = LayerSequence::empty(n);
    if i == j {
        if !(c > 0.0) {
            return Err(DecomposeError::ZeroScale);
        }
        let mut diag = vec![1.0; d];
        let side = if i < d {
            diag[i] = c;
            Side::Upper
        } else {
            diag[i - d] = c;
            Side::Lower
        };
        push_nontrivial(&mut seq, LinearCouplingLayer::new(side, DenseMatrix::zeros(d, d), diag)?)?;
        return Ok(seq);
    }
    if c == 0.0 {
        return Ok(seq);
    }
    let ones = vec![1.0; d];
    let single = |side: Side, row: usize, col: usize, v: f64| {
        let mut m = DenseMatrix::zeros(d, d);
        m[(row, col)] = v;
        LinearCouplingLayer::new(side, m, ones.clone())
    };
    match (i < d, j < d) {
        (false, true) => {
            seq.push(Layer::Linear(single(Side::Lower, i - d, j, c)?))?;
        }
        (true, false) => {
            seq.push(Layer::Linear(single(Side::Upper, i, j - d, c)?))?;
        }
        (true, true) => {
            for layer in [
                single(Side::Upper, i, 0, -c)?,
                single(Side::Lower, 0, j, 1.0)?,
                single(Side::Upper, i, 0, c)?,
                single(Side::Lower, 0, j, -1.0)?,
            ] {
                seq.push(Layer::Linear(layer))?;
            }
        }
        (false, false) => {
            let (i, j) = (i - d, j - d);
            for layer in [
                single(Side::Lower, i, 0, -c)?,
                single(Side::Upper, 0, j, 1.0)?,
                single(Side::Lower, i, 0, c)?,
                single(Side::Upper, 0, j, -1.0)?,
            ] {
                seq.push(Layer::Linear(layer))?;
            }
        }
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::relative_frobenius;
    use crate::rng::{normal_matrix, seeded};

    fn random_lower(seed: u64, n: usize) -> DenseMatrix {
        let mut rng = seeded(seed);
        let mut l = normal_matrix(&mut rng, n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                l[(i, j)] = 0.0;
            }
        }
        if (0..n).filter(|&k| l[(k, k)] < 0.0).count() % 2 == 1 {
            l[(0, 0)] = -l[(0, 0)];
        }
        l
    }

    fn stage(t: &TriangularLayers, name: &str) -> usize {
        t.stage_log.iter().find(|s| s.stage == name).unwrap().matrices
    }

    #[test]
    fn identity_needs_nothing() {
        let t = triangular_layers(&DenseMatrix::identity(8), TriangularOptions::default()).unwrap();
        assert!(t.layers.is_empty());
        assert_eq!(t.layers.as_matrix().unwrap(), DenseMatrix::identity(8));
    }

    #[test]
    fn diagonal_with_negatives_uses_sign_flip() {
        let l = DenseMatrix::from_diag(&[-1.0, 2.0, 3.0, -4.0, 1.0, 2.0, -3.0, -4.0]);
        let t = triangular_layers(&l, TriangularOptions::default()).unwrap();
        assert_eq!(stage(&t, "signflip"), 6);
        assert!(t.layers.len() <= 13);
        let got = t.layers.as_matrix().unwrap();
        assert!(relative_frobenius(&got, &l).unwrap() <= 1e-12);
    }

    #[test]
    fn random_lower_triangular_reconstructs() {
        for seed in 0..100 {
            let n = [4, 8, 16][seed as usize % 3];
            let l = random_lower(seed, n);
            let t = triangular_layers(&l, TriangularOptions::default()).unwrap();
            assert!(t.layers.len() <= 13);
            let names: Vec<&str> = t.stage_log.iter().map(|s| s.stage.as_str()).collect();
            assert_eq!(names, ["eliminate", "signflip", "rescale", "blockdiag"]);
            let res = relative_frobenius(&t.layers.as_matrix().unwrap(), &l).unwrap();
            assert!(res <= 1e-8, "seed {seed}: {res}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut l = DenseMatrix::identity(4);
        l[(1, 1)] = 0.0;
        assert!(matches!(triangular_layers(&l, TriangularOptions::default()), Err(DecomposeError::ZeroDiagonal(1))));
        let l = DenseMatrix::from_diag(&[-1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(triangular_layers(&l, TriangularOptions::default()), Err(DecomposeError::NegativeDeterminant)));
    }

    #[test]
    fn scaling_is_one_upper_layer() {
        let seq = shear_and_scale_layers(3, 0, 0, 2.0).unwrap();
        assert_eq!(seq.len(), 1);
        match &seq.layers()[0] {
            Layer::Linear(l) => {
                assert_eq!(l.side(), Side::Upper);
                assert_eq!(l.diag_block(), &[2.0, 1.0, 1.0]);
            }
            _ => unreachable!(),
        }
        assert!(matches!(shear_and_scale_layers(3, 1, 1, 0.0), Err(DecomposeError::ZeroScale)));
    }

    #[test]
    fn shears_match_elementary_matrices() {
        for (i, j) in [(0, 2), (2, 0), (1, 4), (4, 1), (3, 5), (5, 3)] {
            let seq = shear_and_scale_layers(3, i, j, 0.75).unwrap();
            let mut want = DenseMatrix::identity(6);
            want[(i, j)] = 0.75;
            assert_eq!(seq.as_matrix().unwrap(), want, "shear {j} -> {i}");
            let same_half = (i < 3) == (j < 3);
            assert_eq!(seq.len(), if same_half { 4 } else { 1 });
        }
        assert!(shear_and_scale_layers(3, 0, 1, 0.0).unwrap().is_empty());
    }
}
