use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Codebook, SepError};
use crate::metrics::{empirical_wasserstein, euclidean, mean_stderr, Metric, SampleCloud};
use crate::rng::{normal, seeded};
use crate::stats::normal_quantile;

/// Equal-weight mixture of `N(μ_i, γ² I_d)` with `‖μ_i‖² = 20γ²d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub means: Vec<Vec<f64>>,
    pub gamma: f64,
    pub dim: usize,
}

impl MixtureSpec {
    pub fn new(means: Vec<Vec<f64>>, gamma: f64) -> Result<Self, SepError> {
        if means.is_empty() || !(gamma > 0.0) {
            return Err(SepError::InvalidInput("need at least one mean and positive gamma".into()));
        }
        let dim = means[0].len();
        let target = 20.0 * gamma * gamma * dim as f64;
        for m in &means {
            if m.len() != dim {
                return Err(SepError::InvalidInput("means have different dimensions".into()));
            }
            let sq: f64 = m.iter().map(|v| v * v).sum();
            if (sq - target).abs() > 1e-9 * target {
                return Err(SepError::InvalidInput(format!("squared mean norm {sq} differs from 20 gamma^2 d = {target}")));
            }
        }
        Ok(Self { means, gamma, dim })
    }

    /// Means `√(20γ²d) v_i` for the codewords at `indices`.
    pub fn from_codebook(codebook: &Codebook, indices: &[usize], gamma: f64) -> Result<Self, SepError> {
        let scale = (20.0 * gamma * gamma * codebook.dim() as f64).sqrt();
        let means = indices
            .iter()
            .map(|&i| {
                codebook
                    .vectors
                    .get(i)
                    .map(|v| v.iter().map(|x| scale * x).collect())
                    .ok_or_else(|| SepError::InvalidInput(format!("codeword {i} out of range")))
            })
            .collect::<Result<Vec<Vec<f64>>, _>>()?;
        Self::new(means, gamma)
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }
}

/// Ground-truth sampler: uniform component, then `N(μ_i, γ² I)`.
pub fn exact_mixture_sample(mixture: &MixtureSpec, n: usize, seed: u64) -> Result<SampleCloud, SepError> {
    if n == 0 {
        return Err(SepError::InvalidInput("n must be positive".into()));
    }
    let mut rng = seeded(seed);
    let mut data = Vec::with_capacity(n * mixture.dim);
    for _ in 0..n {
        let c = rng.random_range(0..mixture.k());
        data.extend(mixture.means[c].iter().map(|m| m + mixture.gamma * normal(&mut rng)));
    }
    Ok(SampleCloud::new(mixture.dim, data)?)
}

/// ReLU generator `(h, z) ↦ γz + Σ_i [ReLU(−M(1 − 1̃_i(h)) + μ_i) − ReLU(−M(1 − 1̃_i(h)) − μ_i)]`.
///
/// The soft indicators are differences of boundary ramps, `1̃_i = r_{i−1} − r_i`
/// with `r_0 = 1` and `r_k = 0`, so they sum to one exactly. Ramp `r_j`
/// rises from 0 to 1 over `zones[j−1]`, which carries Gaussian mass
/// `δ/(k−1)` split evenly around the threshold `h_j = Φ⁻¹(j/k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorNet {
    pub thresholds: Vec<f64>,
    pub zones: Vec<(f64, f64)>,
    pub big_m: f64,
    pub sigma: f64,
    pub means: Vec<Vec<f64>>,
    pub delta: f64,
}

pub fn build_selector_net(mixture: &MixtureSpec, delta: f64) -> Result<SelectorNet, SepError> {
    let k = mixture.k();
    if !(delta > 0.0 && delta < 1.0 / k as f64) {
        return Err(SepError::InvalidInput(format!("delta must lie in (0, 1/k) = (0, {}), got {delta}", 1.0 / k as f64)));
    }
    let half = if k > 1 { delta / (2.0 * (k - 1) as f64) } else { 0.0 };
    let mut thresholds = Vec::with_capacity(k.saturating_sub(1));
    let mut zones = Vec::with_capacity(k.saturating_sub(1));
    for j in 1..k {
        let p = j as f64 / k as f64;
        thresholds.push(normal_quantile(p));
        zones.push((normal_quantile(p - half), normal_quantile(p + half)));
    }
    Ok(SelectorNet {
        thresholds,
        zones,
        big_m: (20.0 * mixture.gamma * mixture.gamma * mixture.dim as f64).sqrt(),
        sigma: mixture.gamma,
        means: mixture.means.clone(),
        delta,
    })
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

impl SelectorNet {
    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// `r_j(h)` for `j = 0..=k`. Each interior ramp is `ReLU(x) − ReLU(x − 1)`
    /// with `x = (h − a)/(b − a)`, evaluated as a clamp so it is exactly 0
    /// or 1 outside its zone.
    fn ramps(&self, h: f64) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.k() + 1);
        r.push(1.0);
        for &(a, b) in &self.zones {
            r.push(((h - a) / (b - a)).clamp(0.0, 1.0));
        }
        r.push(0.0);
        r
    }

    pub fn indicators(&self, h: f64) -> Vec<f64> {
        self.ramps(h).windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Exact interval indicators for `(h_{i−1}, h_i]`.
    pub fn exact_indicators(&self, h: f64) -> Vec<f64> {
        let c = self.thresholds.partition_point(|&t| t < h);
        (0..self.k()).map(|i| if i == c { 1.0 } else { 0.0 }).collect()
    }

    pub fn in_transition(&self, h: f64) -> bool {
        self.zones.iter().any(|&(a, b)| h >= a && h <= b)
    }

    fn combine(&self, ind: &[f64], z: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = z.iter().map(|v| self.sigma * v).collect();
        for (w, mu) in ind.iter().zip(&self.means) {
            let off = -self.big_m * (1.0 - w);
            for (o, m) in out.iter_mut().zip(mu) {
                *o += relu(off + m) - relu(off - m);
            }
        }
        out
    }

    pub fn forward(&self, h: f64, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim(), "latent has the wrong dimension");
        self.combine(&self.indicators(h), z)
    }

    /// `f̃(h, z) = γz + μ_{c(h)}`, which generates the mixture exactly.
    pub fn exact_forward(&self, h: f64, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim(), "latent has the wrong dimension");
        let c = self.thresholds.partition_point(|&t| t < h);
        z.iter().zip(&self.means[c]).map(|(v, m)| self.sigma * v + m).collect()
    }

    /// The stated pushforward error bound `2M√d·k·δ`.
    pub fn w1_bound(&self) -> f64 {
        2.0 * self.big_m * (self.dim() as f64).sqrt() * self.k() as f64 * self.delta
    }

    /// The `δ` that makes [`Self::w1_bound`] equal `eps`.
    pub fn delta_for(mixture: &MixtureSpec, eps: f64) -> f64 {
        let m = (20.0 * mixture.gamma * mixture.gamma * mixture.dim as f64).sqrt();
        eps / (2.0 * m * (mixture.dim as f64).sqrt() * mixture.k() as f64)
    }

    /// Pushes `n` draws of `N(0, I_{d+1})` through the net and through the
    /// exact map, returning both clouds.
    pub fn sample_pair(&self, n: usize, seed: u64) -> Result<(SampleCloud, SampleCloud), SepError> {
        let d = self.dim();
        let mut rng = seeded(seed);
        let (mut net, mut exact) = (Vec::with_capacity(n * d), Vec::with_capacity(n * d));
        for _ in 0..n {
            let h = normal(&mut rng);
            let z: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
            net.extend(self.forward(h, &z));
            exact.extend(self.exact_forward(h, &z));
        }
        Ok((SampleCloud::new(d, net)?, SampleCloud::new(d, exact)?))
    }
}

/// Assignment-based W1 between the net's pushforward and the exact mixture,
/// both driven by the same latent draws, with the standard error of the
/// mean matched distance.
pub fn selector_w1(net: &SelectorNet, n: usize, seed: u64) -> Result<(f64, f64), SepError> {
    let (a, b) = net.sample_pair(n, seed)?;
    let plan = empirical_wasserstein(&a, &b, Metric::W1Euclidean)?;
    let dists: Vec<f64> = (0..a.len()).map(|i| euclidean(a.point(i), b.point(plan.assignment.apply(i)))).collect();
    let (_, se) = mean_stderr(&dists);
    Ok((plan.cost, se))
}
