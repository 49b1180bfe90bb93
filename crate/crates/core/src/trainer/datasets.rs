//! Two-dimensional toy datasets.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{normal, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticDataset {
    /// Equal mixture at `(±2, ±2)`, standard deviation 0.3 (not rescaled).
    FourGaussians,
    Swissroll,
    TwoMoons,
    Checkerboard,
    /// Standard normal; used for likelihood sanity checks.
    Gaussian,
}

impl SyntheticDataset {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fourgaussians" | "4gaussians" => Self::FourGaussians,
            "swissroll" => Self::Swissroll,
            "twomoons" | "moons" | "2moons" => Self::TwoMoons,
            "checkerboard" => Self::Checkerboard,
            "gaussian" => Self::Gaussian,
            _ => return None,
        })
    }

    /// Center and scale mapping the raw sampler to roughly zero mean and
    /// unit standard deviation.
    fn normalization(self) -> ([f64; 2], f64) {
        match self {
            Self::FourGaussians | Self::Gaussian => ([0.0, 0.0], 1.0),
            Self::Swissroll => ([2.0, 0.2], 6.87),
            Self::TwoMoons => ([0.5, 0.25], 0.707),
            Self::Checkerboard => ([0.0, 0.0], 1.155),
        }
    }
}

/// One point from the unnormalized parametric sampler.
pub fn raw_point(kind: SyntheticDataset, rng: &mut Rng) -> [f64; 2] {
    use std::f64::consts::PI;
    match kind {
        SyntheticDataset::FourGaussians => {
            let c: u8 = rng.random_range(0..4);
            let cx = if c & 1 == 0 { -2.0 } else { 2.0 };
            let cy = if c & 2 == 0 { -2.0 } else { 2.0 };
            [cx + 0.3 * normal(rng), cy + 0.3 * normal(rng)]
        }
        SyntheticDataset::Swissroll => {
            let t = 1.5 * PI * (1.0 + 2.0 * rng.random::<f64>());
            [t * t.cos() + 0.5 * normal(rng), t * t.sin() + 0.5 * normal(rng)]
        }
        SyntheticDataset::TwoMoons => {
            let th = PI * rng.random::<f64>();
            let (x, y) = if rng.random::<bool>() { (th.cos(), th.sin()) } else { (1.0 - th.cos(), 0.5 - th.sin()) };
            [x + 0.05 * normal(rng), y + 0.05 * normal(rng)]
        }
        SyntheticDataset::Checkerboard => {
            let x1 = 4.0 * rng.random::<f64>() - 2.0;
            let x2 = rng.random::<f64>() - 2.0 * f64::from(rng.random_range(0..2u8)) + x1.floor().rem_euclid(2.0);
            [x1, x2]
        }
        SyntheticDataset::Gaussian => [normal(rng), normal(rng)],
    }
}

/// `n` normalized points, row-major `n x 2`.
pub fn dataset_sample(kind: SyntheticDataset, n: usize, rng: &mut Rng) -> Vec<[f64; 2]> {
    let (c, s) = kind.normalization();
    (0..n)
        .map(|_| {
            let p = raw_point(kind, rng);
            [(p[0] - c[0]) / s, (p[1] - c[1]) / s]
        })
        .collect()
}
