use super::DenseMatrix;

const MAX_SWEEPS: usize = 60;

/// Singular values in descending order, by one-sided Jacobi rotations on
/// the columns. Wide inputs are transposed first.
pub fn svd_small(a: &DenseMatrix) -> Vec<f64> {
    let work = if a.rows() < a.cols() { a.transpose() } else { a.clone() };
    let (m, n) = (work.rows(), work.cols());
    // column-major copy so rotations touch contiguous memory
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| work.col(j)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for i in 0..m {
                        al += cp[i] * cp[i];
                        be += cq[i] * cq[i];
                        ga += cp[i] * cq[i];
                    }
                    (al, be, ga)
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for i in 0..m {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `σ_max / σ_min`; `+inf` when the smallest singular value is zero.
pub fn condition_number(a: &DenseMatrix) -> f64 {
    let sv = svd_small(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::eig;
    use crate::rng::{normal_matrix, seeded};

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(svd_small(&DenseMatrix::identity(4)), vec![1.0; 4]);
        assert_eq!(condition_number(&DenseMatrix::identity(4)), 1.0);
        let d = DenseMatrix::from_diag(&[0.5, 3.0]);
        assert_eq!(svd_small(&d), vec![3.0, 0.5]);
        assert_eq!(condition_number(&d), 6.0);
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(svd_small(&DenseMatrix::zeros(3, 3)), vec![0.0; 3]);
        assert!(condition_number(&DenseMatrix::zeros(3, 3)).is_infinite());
    }

    #[test]
    fn matches_gram_eigenvalues() {
        let mut rng = seeded(12);
        for _ in 0..20 {
            let a = normal_matrix(&mut rng, 4, 4);
            let sv = svd_small(&a);
            let gram = &a.transpose() * &a;
            let mut ev: Vec<f64> = eig(&gram).unwrap().eigenvalues.iter().map(|e| e.re.max(0.0).sqrt()).collect();
            ev.sort_by(|x, y| y.total_cmp(x));
            for (s, e) in sv.iter().zip(&ev) {
                assert!((s - e).abs() <= 1e-8 * sv[0]);
            }
        }
    }

    #[test]
    fn product_equals_abs_det() {
        let mut rng = seeded(13);
        for n in 1..=8 {
            let a = normal_matrix(&mut rng, n, n);
            let prod: f64 = svd_small(&a).iter().product();
            let det = a.det().unwrap().abs();
            assert!((prod - det).abs() <= 1e-8 * det, "n={n}");
        }
    }

    #[test]
    fn wide_matrix() {
        let a = DenseMatrix::from_rows(&[[3.0, 0.0, 0.0], [0.0, 4.0, 0.0]]);
        assert_eq!(svd_small(&a), vec![4.0, 3.0]);
    }
}
