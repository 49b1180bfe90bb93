//! Explicit universal-approximation constructions with affine couplings.
//!
//! [`PaddedNet`] uses zero padding and three translation-only couplings:
//! `(x, 0) ↦ (x, φ(x)) ↦ (φ(x), φ(x)) ↦ (φ(x), 0)`.
//! [`LatticeNet`] needs no padding: it rounds the first block to a grid of
//! pitch `ε`, hides the second block below the grid at scale `ε′`, and
//! decodes both after applying the target map.

mod transport;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use transport::{parse_cdf_tables, quantile_transport, CdfTable, TransportMap};

use crate::matcore::MatError;
use crate::metrics::{empirical_wasserstein, Metric, MetricsError, SampleCloud};
use crate::rng::{normal, seeded};

/// Truncation bound used by the constructions unless stated otherwise.
pub const DEFAULT_TRUNCATION: f64 = 6.0;

#[derive(Debug, Error)]
pub enum UnivError {
    #[error("invalid CDF table: {0}")]
    BadTable(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("transport map must have positive Jacobian determinant")]
    NotOrientationPreserving,
    #[error("scale schedule violated: {0}")]
    Schedule(String),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Coordinatewise clamp to `[−m, m]`.
pub fn truncate(x: &[f64], m: f64) -> Vec<f64> {
    x.iter().map(|v| v.clamp(-m, m)).collect()
}

/// Rounding to the grid `ε Zⁿ`: `round` is `f`, `residual` is
/// `g(x) = x − f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRounder {
    pub eps: f64,
    pub dim: usize,
}

impl GridRounder {
    pub fn new(eps: f64, dim: usize) -> Result<Self, UnivError> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(UnivError::Schedule(format!("grid pitch must be positive, got {eps}")));
        }
        Ok(Self { eps, dim })
    }

    pub fn round(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.eps * (v / self.eps).round()).collect()
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.round(x)).map(|(v, r)| v - r).collect()
    }
}

/// A map together with the input distribution it is meant to push forward.
pub trait Pushforward {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// One input draw; padded coordinates are zero.
    fn sample_input(&self, rng: &mut crate::rng::Rng) -> Vec<f64>;
    fn forward(&self, x: &[f64]) -> Vec<f64>;
}

/// Three NICE-style couplings (no scaling) on `2n` coordinates: data in the
/// first block, zero padding in the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddedNet {
    pub transport: TransportMap,
    pub truncation: f64,
}

pub fn build_padded_net(phi: TransportMap, m: f64) -> Result<PaddedNet, UnivError> {
    if !(m > 0.0) {
        return Err(UnivError::Schedule(format!("truncation must be positive, got {m}")));
    }
    Ok(PaddedNet { transport: phi, truncation: m })
}

impl PaddedNet {
    pub fn n(&self) -> usize {
        self.transport.dim()
    }

    /// `t₁(x) = φ(f_M(x))`, added to the padding block.
    pub fn t1(&self, x: &[f64]) -> Vec<f64> {
        self.transport.forward(&truncate(x, self.truncation))
    }

    /// `t₂(x) = x − φ⁻¹(x)`, added to the data block.
    pub fn t2(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.transport.inverse(x)).map(|(v, w)| v - w).collect()
    }

    /// `t₃(x) = −x`, added to the padding block.
    pub fn t3(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| -v).collect()
    }

    /// Output after each of the three couplings.
    pub fn trace(&self, x: &[f64]) -> [Vec<f64>; 3] {
        let n = self.n();
        let (a, b) = x.split_at(n);
        let b1: Vec<f64> = b.iter().zip(self.t1(a)).map(|(p, q)| p + q).collect();
        let a2: Vec<f64> = a.iter().zip(self.t2(&b1)).map(|(p, q)| p + q).collect();
        let b3: Vec<f64> = b1.iter().zip(self.t3(&a2)).map(|(p, q)| p + q).collect();
        [[a, &b1[..]].concat(), [&a2[..], &b1[..]].concat(), [a2.clone(), b3].concat()]
    }
}

impl Pushforward for PaddedNet {
    fn input_dim(&self) -> usize {
        2 * self.n()
    }

    fn output_dim(&self) -> usize {
        2 * self.n()
    }

    fn sample_input(&self, rng: &mut crate::rng::Rng) -> Vec<f64> {
        let mut x = vec![0.0; 2 * self.n()];
        x[..self.n()].iter_mut().for_each(|v| *v = normal(rng));
        x
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let [_, _, out] = self.trace(x);
        out
    }
}

/// `ε′ = ε²/4`, `ε″ = ε′²/4`.
pub fn default_schedule(eps: f64) -> (f64, f64, f64) {
    let eps1 = eps * eps / 4.0;
    (eps, eps1, eps1 * eps1 / 4.0)
}

/// Three couplings on `2n` coordinates with constant log-scales
/// `ln ε′, ln ε″, ln ε″`, alternating second block, first block, second block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeNet {
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Target map on `2n` coordinates, split into blocks `(φ₁, φ₂)`.
    pub transport: TransportMap,
    pub rounder: GridRounder,
    pub truncation: f64,
}

pub fn build_lattice_net(phi: TransportMap, eps: f64, eps1: f64, eps2: f64) -> Result<LatticeNet, UnivError> {
    if phi.dim() == 0 || phi.dim() % 2 != 0 {
        return Err(UnivError::Dimension(format!("transport must act on an even number of coordinates, got {}", phi.dim())));
    }
    if !(eps2 > 0.0 && eps2 < eps1 && eps1 < eps) {
        return Err(UnivError::Schedule(format!("need 0 < eps2 < eps1 < eps, got {eps2}, {eps1}, {eps}")));
    }
    if eps1 / eps > 0.25 || eps2 / eps1 > 0.25 {
        return Err(UnivError::Schedule(format!("need eps1/eps <= 1/4 and eps2/eps1 <= 1/4, got {} and {}", eps1 / eps, eps2 / eps1)));
    }
    let rounder = GridRounder::new(eps, phi.dim() / 2)?;
    Ok(LatticeNet { eps, eps1, eps2, transport: phi, rounder, truncation: DEFAULT_TRUNCATION })
}

impl LatticeNet {
    pub fn n(&self) -> usize {
        self.rounder.dim
    }

    pub fn log_scales(&self) -> [f64; 3] {
        [self.eps1.ln(), self.eps2.ln(), self.eps2.ln()]
    }

    /// Log-determinant of the Jacobian wherever the rounding is locally constant.
    pub fn log_det(&self) -> f64 {
        self.n() as f64 * self.log_scales().iter().sum::<f64>()
    }

    pub fn t1(&self, x: &[f64]) -> Vec<f64> {
        self.rounder.round(x)
    }

    /// `f(φ₁(u)) + ε′ φ₂(u)` with `u = f_M(f(x), g(x)/ε′)`. The residual is
    /// divided by `ε′` so that `u` recovers the hidden second block.
    pub fn t2(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut u = self.rounder.round(x);
        u.extend(self.rounder.residual(x).iter().map(|r| r / self.eps1));
        let phi = self.transport.forward(&truncate(&u, self.truncation));
        let coarse = self.rounder.round(&phi[..n]);
        coarse.iter().zip(&phi[n..]).map(|(c, p)| c + self.eps1 * p).collect()
    }

    pub fn t3(&self, x: &[f64]) -> Vec<f64> {
        self.rounder.residual(x).iter().map(|r| r / self.eps1).collect()
    }

    /// Output after each of the three couplings.
    pub fn trace(&self, x: &[f64]) -> [Vec<f64>; 3] {
        let n = self.n();
        let (a, b) = x.split_at(n);
        let b1: Vec<f64> = b.iter().zip(self.t1(a)).map(|(v, t)| self.eps1 * v + t).collect();
        let a2: Vec<f64> = a.iter().zip(self.t2(&b1)).map(|(v, t)| self.eps2 * v + t).collect();
        let b3: Vec<f64> = b1.iter().zip(self.t3(&a2)).map(|(v, t)| self.eps2 * v + t).collect();
        [[a, &b1[..]].concat(), [&a2[..], &b1[..]].concat(), [a2.clone(), b3].concat()]
    }
}

impl Pushforward for LatticeNet {
    fn input_dim(&self) -> usize {
        2 * self.n()
    }

    fn output_dim(&self) -> usize {
        2 * self.n()
    }

    fn sample_input(&self, rng: &mut crate::rng::Rng) -> Vec<f64> {
        (0..2 * self.n()).map(|_| normal(rng)).collect()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let [_, _, out] = self.trace(x);
        out
    }
}

/// Pushes `n_samples` seeded input draws through `net`; returns the inputs
/// and the outputs.
pub fn push_samples_with_inputs(net: &impl Pushforward, n_samples: usize, seed: u64) -> Result<(SampleCloud, SampleCloud), UnivError> {
    let mut rng = seeded(seed);
    let mut inputs = Vec::with_capacity(n_samples * net.input_dim());
    let mut outputs = Vec::with_capacity(n_samples * net.output_dim());
    for _ in 0..n_samples {
        let x = net.sample_input(&mut rng);
        outputs.extend(net.forward(&x));
        inputs.extend(x);
    }
    Ok((SampleCloud::new(net.input_dim(), inputs)?, SampleCloud::new(net.output_dim(), outputs)?))
}

pub fn push_samples(net: &impl Pushforward, n_samples: usize, seed: u64) -> Result<SampleCloud, UnivError> {
    Ok(push_samples_with_inputs(net, n_samples, seed)?.1)
}

/// Applies `phi` to the first `phi.dim()` coordinates of every point.
pub fn apply_transport(phi: &TransportMap, inputs: &SampleCloud) -> Result<SampleCloud, UnivError> {
    let k = phi.dim();
    if inputs.dim() < k {
        return Err(UnivError::Dimension(format!("points of dimension {} for a map on {k}", inputs.dim())));
    }
    let data = (0..inputs.len()).flat_map(|i| phi.forward(&inputs.point(i)[..k])).collect();
    Ok(SampleCloud::new(k, data)?)
}

/// Keeps coordinates `range` of every point.
pub fn project(cloud: &SampleCloud, range: std::ops::Range<usize>) -> Result<SampleCloud, UnivError> {
    let data = (0..cloud.len()).flat_map(|i| cloud.point(i)[range.clone()].to_vec()).collect();
    Ok(SampleCloud::new(range.len(), data)?)
}

/// Empirical W2 with a plug-in standard error: the standard error of the
/// mean matched squared distance, carried through the square root.
pub fn w2_with_stderr(a: &SampleCloud, b: &SampleCloud) -> Result<(f64, f64), UnivError> {
    let plan = empirical_wasserstein(a, b, Metric::W2Euclidean)?;
    let sq: Vec<f64> = (0..a.len())
        .map(|i| {
            let (p, q) = (a.point(i), b.point(plan.assignment.apply(i)));
            p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum()
        })
        .collect();
    let (_, se_sq) = crate::metrics::mean_stderr(&sq);
    let w2 = plan.cost;
    let se = if w2 > 0.0 { se_sq / (2.0 * w2) } else { se_sq.sqrt() };
    Ok((w2, se))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub eps: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub w2: f64,
    pub stderr: f64,
}

/// Lattice nets along `eps_values` with the default schedule. Each is
/// compared with `φ` applied to the same input draws (first `2n`
/// coordinates), so the estimate measures the construction error rather
/// than sampling noise between independent clouds.
pub fn lattice_schedule_w2(phi: &TransportMap, eps_values: &[f64], n_samples: usize, seed: u64) -> Result<Vec<SchedulePoint>, UnivError> {
    eps_values
        .iter()
        .map(|&e| {
            let (eps, eps1, eps2) = default_schedule(e);
            let net = build_lattice_net(phi.clone(), eps, eps1, eps2)?;
            let (inputs, out) = push_samples_with_inputs(&net, n_samples, seed)?;
            let target = apply_transport(phi, &inputs)?;
            let (w2, stderr) = w2_with_stderr(&out, &target)?;
            Ok(SchedulePoint { eps, eps1, eps2, w2, stderr })
        })
        .collect()
}
