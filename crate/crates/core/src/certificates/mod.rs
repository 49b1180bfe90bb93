//! Evidence that a matrix is not a product of four linear coupling matrices.
//!
//! For `T = [I 0; A B][C D; 0 I][I 0; E F][G H; 0 I]` with positive diagonal
//! `B, C, F, G`, the Schur complement satisfies
//! `(T/X)(BF)⁻¹ = U (X⁻¹ C G) U⁻¹` with `U = Z − A X`. The shorter form
//! `T/X = U X⁻¹ C U⁻¹` holds only when `B = F = G = I`. Since the diagonal
//! factors are unknown, a usable test has to be invariant under positive
//! diagonal rescaling: `spec(T/X · Δ₁) = spec(X⁻¹ Δ₂)` for some `Δ₁, Δ₂`.
//! A diagonal matrix keeps a real spectrum under rescaling, a weighted cycle
//! of length at least 3 never has one, and a zero diagonal pins the trace
//! at zero. The upper-first ordering is the same statement after swapping
//! the two coordinate halves.

mod fit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::falsify_by_fit;

use crate::matcore::{eig, DenseMatrix, MatError, Spectrum};
use crate::trainer::TrainError;

/// Entries below this fraction of the largest entry count as structural zeros.
pub const ENTRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CertError {
    #[error("top-left block is singular")]
    SingularBlock,
    #[error("half-dimension must be at least 3 for a cycle with non-real eigenvalues, got {0}")]
    DimensionTooSmall(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSplit {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub z: DenseMatrix,
    pub w: DenseMatrix,
}

impl BlockSplit {
    pub fn new(t: &DenseMatrix, d: usize) -> Result<Self, CertError> {
        if t.rows() != 2 * d || t.cols() != 2 * d {
            return Err(CertError::InvalidInput(format!("expected a {0}x{0} matrix, got {1}x{2}", 2 * d, t.rows(), t.cols())));
        }
        Ok(Self { x: t.block(0, 0, d, d), y: t.block(0, d, d, d), z: t.block(d, 0, d, d), w: t.block(d, d, d, d) })
    }

    pub fn assemble(&self) -> DenseMatrix {
        DenseMatrix::from_blocks(&self.x, &self.y, &self.z, &self.w)
    }

    /// The same matrix with the two coordinate halves exchanged.
    pub fn swapped(&self) -> BlockSplit {
        BlockSplit { x: self.w.clone(), y: self.z.clone(), z: self.y.clone(), w: self.x.clone() }
    }

    pub fn schur_complement(&self) -> Result<DenseMatrix, CertError> {
        let xi = self.x.inverse().map_err(|_| CertError::SingularBlock)?;
        Ok(&self.w - &(&(&self.z * &xi) * &self.y))
    }
}

/// `W − Z X⁻¹ Y` for the `d x d` blocks of `t`.
pub fn schur_complement(t: &DenseMatrix, d: usize) -> Result<DenseMatrix, CertError> {
    BlockSplit::new(t, d)?.schur_complement()
}

/// `blockdiag(diag(x), P)` with `P` the cyclic shift `e_k ↦ e_{k+1}`.
///
/// The cycle has determinant `(−1)^(d−1)`; for even `d` the smallest entry
/// of `x` is negated so the result stays orientation preserving. The trace
/// of the top-left block is still positive.
pub fn hard_instance(d: usize, x_diag: &[f64]) -> Result<DenseMatrix, CertError> {
    if d < 3 {
        return Err(CertError::DimensionTooSmall(d));
    }
    if x_diag.len() != d || x_diag.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(CertError::InvalidInput(format!("x_diag must hold {d} positive values")));
    }
    let mut x = x_diag.to_vec();
    if d % 2 == 0 {
        let k = (0..d).min_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
        x[k] = -x[k];
    }
    Ok(DenseMatrix::block_diag(&DenseMatrix::from_diag(&x), &cycle_matrix(d)))
}

pub fn cycle_matrix(d: usize) -> DenseMatrix {
    DenseMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NotInA4,
    Inconclusive,
}

/// Outcome of the test for one ordering of the four factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderingTest {
    /// True when the ordering is ruled out.
    pub obstructed: bool,
    pub reason: String,
    pub max_abs_imag: Option<f64>,
    /// `(trace forced by the factor structure, trace of the Schur complement)`.
    pub traces: Option<(f64, f64)>,
}

impl OrderingTest {
    fn open(reason: impl Into<String>) -> Self {
        Self { obstructed: false, reason: reason.into(), max_abs_imag: None, traces: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchurCertificate {
    pub schur_spectrum: Spectrum,
    pub verdict: Verdict,
    /// Lower-upper-lower-upper ordering, tested on `T` itself.
    pub reason_luru: OrderingTest,
    /// Upper-lower-upper-lower ordering, tested on the half-swapped `T`.
    pub reason_rlrl: OrderingTest,
    pub similarity_witness: Option<DenseMatrix>,
}

/// Behaviour of `spec(M Δ)` over every positive diagonal `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpectrumClass {
    AlwaysReal,
    NeverReal,
    Unknown,
}

/// Set of values `tr(M Δ)` takes over positive diagonal `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TraceRange {
    Zero,
    Positive,
    Negative,
    Unknown,
}

fn spectrum_class(m: &DenseMatrix) -> SpectrumClass {
    let n = m.rows();
    let tol = ENTRY_TOL * m.max_abs();
    if m.is_diagonal(tol) {
        return SpectrumClass::AlwaysReal;
    }
    // monomial: one significant entry per row and column
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for i in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&j| m[(i, j)].abs() > tol).collect();
        if nz.len() != 1 || used[nz[0]] {
            return SpectrumClass::Unknown;
        }
        perm[i] = nz[0];
        used[nz[0]] = true;
    }
    // on a cycle of length l the eigenvalues are the l-th roots of the
    // (rescaled) weight product, whose sign rescaling cannot change
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let (mut len, mut sign, mut i) = (0, 1.0, start);
        while !seen[i] {
            seen[i] = true;
            sign *= m[(i, perm[i])].signum();
            i = perm[i];
            len += 1;
        }
        if len >= 3 || (len == 2 && sign < 0.0) {
            return SpectrumClass::NeverReal;
        }
    }
    SpectrumClass::AlwaysReal
}

fn trace_range(m: &DenseMatrix) -> TraceRange {
    let tol = ENTRY_TOL * m.max_abs();
    let diag = m.diagonal();
    if diag.iter().all(|v| v.abs() <= tol) {
        TraceRange::Zero
    } else if diag.iter().all(|v| *v > tol) {
        TraceRange::Positive
    } else if diag.iter().all(|v| *v < -tol) {
        TraceRange::Negative
    } else {
        TraceRange::Unknown
    }
}

fn traces_incompatible(a: TraceRange, b: TraceRange) -> bool {
    use TraceRange::*;
    matches!((a, b), (Zero, Positive | Negative) | (Positive | Negative, Zero) | (Positive, Negative) | (Negative, Positive))
}

/// Membership in this ordering forces `spec(S Δ₁) = spec(X⁻¹ Δ₂)` for some
/// positive diagonal `Δ₁, Δ₂`, where `S = T/X`. The test looks for a
/// property of each side that no such rescaling can change and that the
/// other side cannot share.
fn ordering_test(split: &BlockSplit) -> Result<OrderingTest, CertError> {
    let x_inv = match split.x.inverse() {
        Ok(v) => v,
        Err(MatError::SingularMatrix { .. }) => return Ok(OrderingTest::open("top-left block is singular; the invariant does not apply")),
        Err(e) => return Err(e.into()),
    };
    let s = &split.w - &(&(&split.z * &x_inv) * &split.y);
    let imag = eig(&s)?.max_abs_imag();
    let traces = Some((x_inv.trace(), s.trace()));

    let (cs, cx) = (spectrum_class(&s), spectrum_class(&x_inv));
    let spectra_clash = matches!(
        (cs, cx),
        (SpectrumClass::AlwaysReal, SpectrumClass::NeverReal) | (SpectrumClass::NeverReal, SpectrumClass::AlwaysReal)
    );
    if spectra_clash {
        let reason = if cx == SpectrumClass::AlwaysReal {
            "inverse top-left block is diagonal, so every rescaled Schur complement must have a real spectrum, but the Schur complement is a weighted cycle"
        } else {
            "Schur complement is diagonal, so it must be similar to a rescaled inverse top-left block with real spectrum, but that block is a weighted cycle"
        };
        return Ok(OrderingTest { obstructed: true, reason: reason.into(), max_abs_imag: Some(imag), traces });
    }
    let (ts, tx) = (trace_range(&s), trace_range(&x_inv));
    if traces_incompatible(ts, tx) {
        let reason = format!("rescaled traces cannot agree: Schur complement diagonal is {ts:?}, inverse top-left diagonal is {tx:?}");
        return Ok(OrderingTest { obstructed: true, reason, max_abs_imag: Some(imag), traces });
    }
    Ok(OrderingTest {
        obstructed: false,
        reason: "no rescaling-invariant obstruction found".into(),
        max_abs_imag: Some(imag),
        traces,
    })
}

/// `NotInA4` only when both orderings are ruled out; anything this test
/// cannot decide is `Inconclusive`.
pub fn certify_not_a4(t: &DenseMatrix, d: usize) -> Result<SchurCertificate, CertError> {
    let split = BlockSplit::new(t, d)?;
    let schur_spectrum = match split.schur_complement() {
        Ok(s) => eig(&s)?,
        Err(CertError::SingularBlock) => Spectrum { eigenvalues: vec![] },
        Err(e) => return Err(e),
    };
    let reason_luru = ordering_test(&split)?;
    let reason_rlrl = ordering_test(&split.swapped())?;
    let verdict = if reason_luru.obstructed && reason_rlrl.obstructed { Verdict::NotInA4 } else { Verdict::Inconclusive };
    Ok(SchurCertificate { schur_spectrum, verdict, reason_luru, reason_rlrl, similarity_witness: None })
}

/// Factors of `[I 0; A B][C D; 0 I][I 0; E F][G H; 0 I]`, diagonal blocks
/// stored as vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FourFactors {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: DenseMatrix,
    pub e: DenseMatrix,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: DenseMatrix,
}

impl FourFactors {
    pub fn half_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn product(&self) -> DenseMatrix {
        let n = self.half_dim();
        let i = DenseMatrix::identity(n);
        let o = DenseMatrix::zeros(n, n);
        let diag = DenseMatrix::from_diag;
        let l1 = DenseMatrix::from_blocks(&i, &o, &self.a, &diag(&self.b));
        let u1 = DenseMatrix::from_blocks(&diag(&self.c), &self.d, &o, &i);
        let l2 = DenseMatrix::from_blocks(&i, &o, &self.e, &diag(&self.f));
        let u2 = DenseMatrix::from_blocks(&diag(&self.g), &self.h, &o, &i);
        &(&(&l1 * &u1) * &l2) * &u2
    }

    /// `U = Z − A X`.
    pub fn similarity_witness(&self) -> DenseMatrix {
        let split = BlockSplit::new(&self.product(), self.half_dim()).expect("product has matching shape");
        &split.z - &(&self.a * &split.x)
    }

    /// `X⁻¹ C G`, similar to [`Self::rescaled_schur`] through the witness.
    pub fn reduced(&self) -> Result<DenseMatrix, CertError> {
        let x = self.product().block(0, 0, self.half_dim(), self.half_dim());
        let xi = x.inverse().map_err(|_| CertError::SingularBlock)?;
        let cg: Vec<f64> = self.c.iter().zip(&self.g).map(|(c, g)| c * g).collect();
        Ok(&xi * &DenseMatrix::from_diag(&cg))
    }

    /// `(T/X)(BF)⁻¹`.
    pub fn rescaled_schur(&self) -> Result<DenseMatrix, CertError> {
        let s = schur_complement(&self.product(), self.half_dim())?;
        let inv_bf: Vec<f64> = self.b.iter().zip(&self.f).map(|(b, f)| 1.0 / (b * f)).collect();
        Ok(&s * &DenseMatrix::from_diag(&inv_bf))
    }
}

/// Certificate for a known four-factor product, with the witness attached.
pub fn certify_product(factors: &FourFactors) -> Result<SchurCertificate, CertError> {
    let mut cert = certify_not_a4(&factors.product(), factors.half_dim())?;
    cert.similarity_witness = Some(factors.similarity_witness());
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{spectra_distance, Eigenvalue};
    use crate::metrics::relative_frobenius;
    use crate::rng::{normal_matrix, seeded, Rng};
    use rand::Rng as _;

    fn positive(rng: &mut Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
    }

    fn random_factors(rng: &mut Rng, d: usize) -> FourFactors {
        FourFactors {
            a: normal_matrix(rng, d, d),
            b: positive(rng, d),
            c: positive(rng, d),
            d: normal_matrix(rng, d, d),
            e: normal_matrix(rng, d, d),
            f: positive(rng, d),
            g: positive(rng, d),
            h: normal_matrix(rng, d, d),
        }
    }

    #[test]
    fn schur_closed_forms() {
        let x = DenseMatrix::from_diag(&[1.0, 2.0]);
        let w = DenseMatrix::from_rows(&[[3.0, 1.0], [0.0, 4.0]]);
        assert_eq!(schur_complement(&DenseMatrix::block_diag(&x, &w), 2).unwrap(), w);
        let i = DenseMatrix::identity(2);
        let t = DenseMatrix::from_blocks(&i, &i, &i, &i.scale(2.0));
        assert_eq!(schur_complement(&t, 2).unwrap(), i);
        let sing = DenseMatrix::block_diag(&DenseMatrix::zeros(2, 2), &i);
        assert!(matches!(schur_complement(&sing, 2), Err(CertError::SingularBlock)));
    }

    #[test]
    fn rescaled_schur_similar_to_reduced_block() {
        let mut rng = seeded(80);
        for d in [2, 4, 8] {
            for _ in 0..20 {
                let f = random_factors(&mut rng, d);
                let s = f.rescaled_schur().unwrap();
                let r = f.reduced().unwrap();
                let (es, er) = (eig(&s).unwrap(), eig(&r).unwrap());
                assert!(spectra_distance(&es, &er).unwrap() <= 1e-6 * es.spectral_radius().max(1.0));
                let u = f.similarity_witness();
                let conj = &(&u * &r) * &u.inverse().unwrap();
                assert!(relative_frobenius(&conj, &s).unwrap() <= 1e-7);
            }
        }
    }

    #[test]
    fn short_form_needs_unit_diagonals() {
        let mut rng = seeded(82);
        let mut f = random_factors(&mut rng, 3);
        let ones = vec![1.0; 3];
        (f.b, f.f, f.g) = (ones.clone(), ones.clone(), ones);
        let s = schur_complement(&f.product(), 3).unwrap();
        let u = f.similarity_witness();
        let xc = &f.product().block(0, 0, 3, 3).inverse().unwrap() * &DenseMatrix::from_diag(&f.c);
        assert!(relative_frobenius(&(&(&u * &xc) * &u.inverse().unwrap()), &s).unwrap() <= 1e-9);
    }

    #[test]
    fn hard_instance_shape_and_sign() {
        for d in 3..=8 {
            let x: Vec<f64> = (1..=d).map(|v| v as f64).collect();
            let t = hard_instance(d, &x).unwrap();
            assert!(t.det().unwrap() > 0.0);
            assert!(t.block(0, 0, d, d).trace() > 0.0);
            let spec = eig(&t.block(d, d, d, d)).unwrap();
            let roots = Spectrum {
                eigenvalues: (0..d)
                    .map(|k| {
                        let a = 2.0 * std::f64::consts::PI * k as f64 / d as f64;
                        Eigenvalue::new(a.cos(), a.sin())
                    })
                    .collect(),
            };
            assert!(spectra_distance(&spec, &roots).unwrap() < 1e-10);
        }
        assert!(matches!(hard_instance(2, &[1.0, 2.0]), Err(CertError::DimensionTooSmall(2))));
        assert!(hard_instance(3, &[1.0, 1.0, 1.0]).is_ok());
        assert!(hard_instance(3, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn hard_instance_is_certified() {
        let t = hard_instance(4, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let cert = certify_not_a4(&t, 4).unwrap();
        assert_eq!(cert.verdict, Verdict::NotInA4);
        assert!((cert.reason_luru.max_abs_imag.unwrap() - 1.0).abs() < 1e-12);
        let (forced, actual) = cert.reason_rlrl.traces.unwrap();
        assert_eq!(forced, 0.0);
        assert!((actual - 8.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_target_is_inconclusive() {
        let t = DenseMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0]);
        let cert = certify_not_a4(&t, 4).unwrap();
        assert_eq!(cert.verdict, Verdict::Inconclusive);
        assert!(!cert.reason_luru.obstructed);
    }

    #[test]
    fn products_with_diagonal_top_left_are_not_rejected() {
        let mut rng = seeded(81);
        for _ in 0..50 {
            let mut f = random_factors(&mut rng, 4);
            // C + D E = diag(delta) makes X = diag(delta) G diagonal
            let delta = positive(&mut rng, 4);
            let target = &DenseMatrix::from_diag(&delta) - &DenseMatrix::from_diag(&f.c);
            f.d = &target * &f.e.inverse().unwrap();
            assert!(f.product().block(0, 0, 4, 4).is_diagonal(1e-9));
            let cert = certify_product(&f).unwrap();
            assert_eq!(cert.verdict, Verdict::Inconclusive);
            assert!(!cert.reason_luru.obstructed);
            assert!(cert.similarity_witness.is_some());
        }
    }

    #[test]
    fn never_rejects_sampled_products() {
        let mut rng = seeded(83);
        for d in [3, 4, 6] {
            for _ in 0..100 {
                let f = random_factors(&mut rng, d);
                assert_eq!(certify_product(&f).unwrap().verdict, Verdict::Inconclusive);
            }
        }
    }

    #[test]
    fn hard_instances_certified_for_all_sizes() {
        for d in 3..=16 {
            let x: Vec<f64> = (1..=d).map(|v| v as f64).collect();
            let cert = certify_not_a4(&hard_instance(d, &x).unwrap(), d).unwrap();
            assert_eq!(cert.verdict, Verdict::NotInA4, "d = {d}");
        }
    }

    #[test]
    fn spectrum_classes() {
        assert_eq!(spectrum_class(&DenseMatrix::from_diag(&[1.0, -2.0])), SpectrumClass::AlwaysReal);
        assert_eq!(spectrum_class(&cycle_matrix(3)), SpectrumClass::NeverReal);
        let swap = DenseMatrix::from_rows(&[[0.0, 2.0], [3.0, 0.0]]);
        assert_eq!(spectrum_class(&swap), SpectrumClass::AlwaysReal);
        let rot = DenseMatrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]);
        assert_eq!(spectrum_class(&rot), SpectrumClass::NeverReal);
        assert_eq!(spectrum_class(&DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]])), SpectrumClass::Unknown);
        assert!(traces_incompatible(trace_range(&cycle_matrix(4)), trace_range(&DenseMatrix::identity(4))));
        assert!(!traces_incompatible(trace_range(&DenseMatrix::from_diag(&[1.0, -1.0])), TraceRange::Zero));
    }
}
