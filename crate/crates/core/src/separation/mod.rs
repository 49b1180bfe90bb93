//! Building blocks for the size/depth separation: well-separated codebooks,
//! low-overlap subset families, a shallow ReLU generator for Gaussian
//! mixtures, a Lipschitz dual witness for W1, and the counting bounds.

mod selector;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use selector::{build_selector_net, exact_mixture_sample, selector_w1, MixtureSpec, SelectorNet};

use crate::metrics::{euclidean, mean_stderr, MetricsError, SampleCloud};
use crate::rng::{normal_vec, seeded};

/// Draws allowed per accepted item in the rejection samplers.
pub const RETRY_FACTOR: usize = 100;

#[derive(Debug, Error)]
pub enum SepError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("retry budget exhausted after accepting {accepted} of {target}")]
    RetryBudgetExhausted { accepted: usize, target: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Unit vectors with pairwise `|⟨v_i, v_j⟩| ≤ eps_sep`, hence
/// `‖v_i − v_j‖² ≥ 2(1 − eps_sep)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub vectors: Vec<Vec<f64>>,
    pub eps_sep: f64,
}

impl Codebook {
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn min_sq_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.vectors.iter().enumerate() {
            for b in &self.vectors[i + 1..] {
                best = best.min(euclidean(a, b).powi(2));
            }
        }
        best
    }

    pub fn max_abs_inner(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for b in &self.vectors[i + 1..] {
                best = best.max(dot(a, b).abs());
            }
        }
        best
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest codebook size the existence argument guarantees, `⌊exp(dε²/4)⌋`.
pub fn codebook_capacity(d: usize, eps: f64) -> f64 {
    (d as f64 * eps * eps / 4.0).exp().floor()
}

/// Rejection-samples uniform unit vectors, keeping each draw whose inner
/// product with every kept vector is at most `eps` in absolute value.
///
/// For `eps ≥ 1` every pair qualifies and the size and dimension
/// preconditions are not enforced.
pub fn well_separated_vectors(d: usize, eps: f64, n_target: usize, seed: u64) -> Result<Codebook, SepError> {
    if d == 0 || n_target == 0 || !(eps > 0.0) {
        return Err(SepError::InvalidInput(format!("need d, n_target and eps positive (d={d}, n={n_target}, eps={eps})")));
    }
    if eps < 1.0 {
        if d < 8 {
            return Err(SepError::InvalidInput(format!("dimension {d} below 8")));
        }
        let cap = codebook_capacity(d, eps);
        if n_target as f64 > cap {
            return Err(SepError::InvalidInput(format!("n_target {n_target} exceeds exp(d eps^2 / 4) = {cap}")));
        }
    }
    let mut rng = seeded(seed);
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(n_target);
    for _ in 0..RETRY_FACTOR * n_target {
        if kept.len() == n_target {
            break;
        }
        let mut v = normal_vec(&mut rng, d);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if kept.iter().all(|w| dot(&v, w).abs() <= eps) {
            kept.push(v);
        }
    }
    if kept.len() < n_target {
        return Err(SepError::RetryBudgetExhausted { accepted: kept.len(), target: n_target });
    }
    Ok(Codebook { vectors: kept, eps_sep: eps })
}

/// `k`-element subsets of `0..n_pool` whose pairwise intersections have at
/// most `max_overlap = ⌊k/10⌋` elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetFamily {
    pub subsets: Vec<Vec<usize>>,
    pub max_overlap: usize,
}

impl SubsetFamily {
    pub fn largest_overlap(&self) -> usize {
        let sets: Vec<HashSet<usize>> = self.subsets.iter().map(|s| s.iter().copied().collect()).collect();
        let mut best = 0;
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                best = best.max(a.intersection(b).count());
            }
        }
        best
    }
}

/// Random `k`-subsets, each rejected if it overlaps a kept one in more than
/// `⌊k/10⌋` elements. Requires `count ≤ (n_pool/2k)^{k/10}`.
pub fn low_overlap_subsets(n_pool: usize, k: usize, count: usize, seed: u64) -> Result<SubsetFamily, SepError> {
    if k < 10 || k > n_pool || count == 0 {
        return Err(SepError::InvalidInput(format!("need 10 <= k <= n_pool and count > 0 (k={k}, n_pool={n_pool}, count={count})")));
    }
    let bound = (n_pool as f64 / (2 * k) as f64).powf(k as f64 / 10.0);
    if count > 1 && count as f64 > bound {
        return Err(SepError::InvalidInput(format!("count {count} exceeds (n_pool/2k)^(k/10) = {bound:.3}")));
    }
    let max_overlap = k / 10;
    let mut rng = seeded(seed);
    let mut kept: Vec<HashSet<usize>> = Vec::with_capacity(count);
    for _ in 0..RETRY_FACTOR * count {
        if kept.len() == count {
            break;
        }
        let s: HashSet<usize> = rand::seq::index::sample(&mut rng, n_pool, k).into_iter().collect();
        if kept.iter().all(|t| t.intersection(&s).count() <= max_overlap) {
            kept.push(s);
        }
    }
    if kept.len() < count {
        return Err(SepError::RetryBudgetExhausted { accepted: kept.len(), target: count });
    }
    let subsets = kept
        .into_iter()
        .map(|s| {
            let mut v: Vec<usize> = s.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect();
    Ok(SubsetFamily { subsets, max_overlap })
}

/// Indices `i` with `min_j ‖μ_i − ν_j‖² ≥ 20γ²d`.
pub fn separated_indices(mu_means: &[Vec<f64>], nu_means: &[Vec<f64>], gamma: f64) -> Vec<usize> {
    mu_means
        .iter()
        .enumerate()
        .filter(|(_, m)| {
            let thresh = 20.0 * gamma * gamma * m.len() as f64;
            nu_means.iter().all(|n| euclidean(m, n).powi(2) >= thresh)
        })
        .map(|(i, _)| i)
        .collect()
}

/// The 1-Lipschitz test function `φ(x) = max(0, 2γ√d − min_{i∈S} ‖x − μ_i‖)`.
pub fn witness_fn(x: &[f64], separated_means: &[Vec<f64>], gamma: f64) -> f64 {
    let r = 2.0 * gamma * (x.len() as f64).sqrt();
    let nearest = separated_means.iter().map(|m| euclidean(x, m)).fold(f64::INFINITY, f64::min);
    (r - nearest).max(0.0)
}

/// `mean φ(samples_mu) − mean φ(samples_nu)`, a lower estimate of W1 by
/// duality, with its standard error.
pub fn w1_witness_with_stderr(
    samples_mu: &SampleCloud,
    samples_nu: &SampleCloud,
    separated_means: &[Vec<f64>],
    gamma: f64,
) -> Result<(f64, f64), SepError> {
    if samples_mu.is_empty() || samples_nu.is_empty() {
        return Err(SepError::InvalidInput("empty sample set".into()));
    }
    if separated_means.is_empty() {
        return Err(SepError::InvalidInput("no separated means".into()));
    }
    let d = samples_mu.dim();
    if samples_nu.dim() != d || separated_means.iter().any(|m| m.len() != d) {
        return Err(SepError::InvalidInput("dimension mismatch".into()));
    }
    if !(gamma > 0.0) {
        return Err(SepError::InvalidInput(format!("gamma must be positive, got {gamma}")));
    }
    let eval = |c: &SampleCloud| -> Vec<f64> { (0..c.len()).map(|i| witness_fn(c.point(i), separated_means, gamma)).collect() };
    let (m1, s1) = mean_stderr(&eval(samples_mu));
    let (m2, s2) = mean_stderr(&eval(samples_nu));
    Ok((m1 - m2, s1.hypot(s2)))
}

pub fn w1_witness(samples_mu: &SampleCloud, samples_nu: &SampleCloud, separated_means: &[Vec<f64>], gamma: f64) -> Result<f64, SepError> {
    Ok(w1_witness_with_stderr(samples_mu, samples_nu, separated_means, gamma)?.0)
}

/// Hypotheses of the counting argument over a parameterized network family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationBounds {
    /// Lipschitz constant in parameters and inputs.
    pub lipschitz: f64,
    /// Radius of the parameter ball.
    pub radius: f64,
    /// Total parameter count.
    pub d_params: f64,
    pub params_per_layer: f64,
    pub k: f64,
    /// Subgaussian constant.
    pub c2: f64,
}

/// `d′ ln(LR/ε)`, the log-size of an ε-net of the parameter ball up to
/// constants; zero once `ε ≥ LR`.
pub fn epsnet_log_size(b: &SeparationBounds, eps: f64) -> Result<f64, SepError> {
    let fields = [b.lipschitz, b.radius, b.d_params, b.params_per_layer, b.k, b.c2, eps];
    if fields.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(SepError::InvalidInput(format!("all bounds and eps must be positive and finite: {b:?}, eps={eps}")));
    }
    let lr = b.lipschitz * b.radius;
    Ok(if eps >= lr { 0.0 } else { b.d_params * (lr / eps).ln() })
}

/// Transport-entropy lower bound `KL ≥ W1² / (2c²)`.
pub fn kl_lower_bound(w1: f64, c2: f64) -> Result<f64, SepError> {
    if !(w1 >= 0.0) || !(c2 > 0.0) {
        return Err(SepError::InvalidInput(format!("need w1 >= 0 and c2 > 0 (w1={w1}, c2={c2})")));
    }
    Ok(w1 * w1 / (2.0 * c2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{empirical_wasserstein, Metric};
    use crate::rng::normal;
    use proptest::prelude::*;

    #[test]
    fn trivial_codebook() {
        let c = well_separated_vectors(2, 1.0, 2, 0).unwrap();
        assert_eq!(c.vectors.len(), 2);
        assert!(c.min_sq_distance() >= 0.0);
    }

    #[test]
    fn codebook_128() {
        let c = well_separated_vectors(128, 0.5, 100, 1).unwrap();
        assert_eq!(c.vectors.len(), 100);
        for v in &c.vectors {
            assert!((dot(v, v).sqrt() - 1.0).abs() <= 1e-12);
        }
        // exhaustive pairwise check
        for (i, a) in c.vectors.iter().enumerate() {
            for b in &c.vectors[i + 1..] {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                assert!(d2 >= 1.0 - 1e-12, "{d2}");
            }
        }
    }

    #[test]
    fn codebook_rejects_and_exhausts() {
        assert!(matches!(well_separated_vectors(8, 0.5, 100, 0), Err(SepError::InvalidInput(_))));
        assert!(matches!(well_separated_vectors(4, 0.5, 1, 0), Err(SepError::InvalidInput(_))));
        assert_eq!(codebook_capacity(400, 0.1), 2.0);
    }

    #[test]
    fn subsets_small() {
        let f = low_overlap_subsets(1000, 10, 2, 2).unwrap();
        assert_eq!(f.max_overlap, 1);
        let (a, b): (HashSet<_>, HashSet<_>) = (f.subsets[0].iter().collect(), f.subsets[1].iter().collect());
        assert!(a.intersection(&b).count() <= 1);
        for s in &f.subsets {
            assert_eq!(s.iter().collect::<HashSet<_>>().len(), 10);
        }
        assert_eq!(low_overlap_subsets(20, 10, 1, 3).unwrap().subsets.len(), 1);
        assert!(low_overlap_subsets(1000, 9, 2, 0).is_err());
        assert!(low_overlap_subsets(40, 10, 3, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn subset_overlap_invariant(seed in 0u64..1000, k in 10usize..25) {
            let f = low_overlap_subsets(40 * k, k, 3, seed).unwrap();
            prop_assert!(f.largest_overlap() <= k / 10);
            prop_assert!(f.subsets.iter().all(|s| s.len() == k && s.windows(2).all(|w| w[0] < w[1])));
        }

        #[test]
        fn codebook_invariant(seed in 0u64..1000, n in 2usize..30) {
            let c = well_separated_vectors(64, 0.5, n, seed).unwrap();
            prop_assert!(c.max_abs_inner() <= 0.5);
            prop_assert!(c.min_sq_distance() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn calculators() {
        let e = std::f64::consts::E;
        let b = SeparationBounds { lipschitz: e, radius: e, d_params: 1.0, params_per_layer: 1.0, k: 1.0, c2: 1.0 };
        assert!((epsnet_log_size(&b, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(epsnet_log_size(&b, e * e).unwrap(), 0.0);
        let b2 = SeparationBounds { d_params: 2.0, ..b };
        assert!((epsnet_log_size(&b2, 0.3).unwrap() - 2.0 * epsnet_log_size(&b, 0.3).unwrap()).abs() < 1e-12);
        assert!(epsnet_log_size(&SeparationBounds { radius: 0.0, ..b }, 1.0).is_err());
        assert_eq!(kl_lower_bound(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(kl_lower_bound(2.0, 1.0).unwrap(), 2.0);
        let (g, d, l) = (0.7, 16.0, 3.0);
        let kl = kl_lower_bound(10.0 * g * g * d, l * l).unwrap();
        assert!((kl - 50.0 * g.powi(4) * d * d / (l * l)).abs() < 1e-9 * kl);
        assert!(kl_lower_bound(-1.0, 1.0).is_err());
    }

    fn gaussian_cloud(center: &[f64], gamma: f64, n: usize, seed: u64) -> SampleCloud {
        let mut rng = seeded(seed);
        let data = (0..n).flat_map(|_| center.iter().map(|c| c + gamma * normal(&mut rng)).collect::<Vec<_>>()).collect();
        SampleCloud::new(center.len(), data).unwrap()
    }

    #[test]
    fn witness_identical_and_symmetric() {
        let c = vec![0.5; 16];
        let a = gaussian_cloud(&c, 1.0, 4000, 5);
        assert_eq!(w1_witness(&a, &a, &[c.clone()], 1.0).unwrap(), 0.0);
        let b = gaussian_cloud(&c, 1.0, 4000, 6);
        let (w, se) = w1_witness_with_stderr(&a, &b, &[c.clone()], 1.0).unwrap();
        assert!(w.abs() <= 3.0 * se, "{w} {se}");
        let empty = SampleCloud::new(16, vec![]).unwrap();
        assert!(w1_witness(&empty, &a, &[c], 1.0).is_err());
    }

    #[test]
    fn witness_below_exact_w1() {
        // small shifted Gaussians: the dual witness never exceeds the
        // assignment-based W1 beyond sampling error
        for (shift, seed) in [(0.5, 10), (2.0, 11), (6.0, 12)] {
            let d = 4;
            let mu_c = vec![0.0; d];
            let mut nu_c = vec![0.0; d];
            nu_c[0] = shift;
            let a = gaussian_cloud(&mu_c, 1.0, 600, seed);
            let b = gaussian_cloud(&nu_c, 1.0, 600, seed + 100);
            let (w, se) = w1_witness_with_stderr(&a, &b, &[mu_c.clone()], 1.0).unwrap();
            let exact = empirical_wasserstein(&a, &b, Metric::W1Euclidean).unwrap().cost;
            assert!(w <= exact + 3.0 * se, "{w} vs {exact}");
        }
    }

    #[test]
    fn separated_indices_by_distance() {
        let g = 1.0;
        let d = 4;
        let far = vec![(20.0 * g * g * d as f64).sqrt() + 1.5, 0.0, 0.0, 0.0];
        let near = vec![1.0, 0.0, 0.0, 0.0];
        let mu = vec![vec![0.0; d], far.clone()];
        assert_eq!(separated_indices(&mu, &[near], g), vec![1]);
        assert_eq!(separated_indices(&mu, &[far], g), vec![0]);
    }
}
